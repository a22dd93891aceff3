"""Boundary-edge frames, vertex prediction, embeddings, and losses."""

import math

import numpy as np
import pytest

from frontmesh.fields import Plane, Sphere, Torus, Union
from frontmesh.halfedge import DegenerateTriangleError, HalfedgeMesh
from frontmesh.predictor import (
    EMBEDDING_DIM,
    LAMBDA_ER,
    LAMBDA_LR,
    LAMBDA_SD,
    AnalyticPredictor,
    BoundaryEdgeFrame,
    ConstantPredictor,
    MlpPredictor,
    Prediction,
    apply_prediction,
    build_embedding,
    build_frame,
    loss_eval,
    predict_analytic,
    predict_mlp,
)
from frontmesh.fields import MlpLayer, MlpWeights


def _flat_frame(r_d=0.02):
    # edge along +x in the z=0 plane, apex below: the default direction
    # comes out along +y
    return BoundaryEdgeFrame([-0.5, 0, 0], [0.5, 0, 0], [0, -0.7, 0], r_d)


# ---------------------------------------------------------------- the frame


def test_frame_axes_on_canonical_edge():
    fr = _flat_frame(r_d=0.02)
    assert np.allclose(fr.m, [0, 0, 0], atol=1e-15)
    assert np.allclose(fr.e_u, [1, 0, 0], atol=1e-15)
    assert np.allclose(fr.n_F, [0, 0, -1], atol=1e-15)
    assert np.allclose(fr.v_dir, [0, 1, 0], atol=1e-15)
    assert fr.h_d == pytest.approx(0.03)
    assert np.allclose(fr.v_d, [0, 0.03, 0], atol=1e-15)
    assert fr.e_length == 1.0


def test_frame_orthonormal_and_outward():
    rng = np.random.default_rng(300)
    for _ in range(1000):
        a, b, apex = rng.uniform(-1, 1, (3, 3))
        if np.linalg.norm(np.cross(b - a, apex - b)) < 1e-6:
            continue
        fr = BoundaryEdgeFrame(a, b, apex, 0.05)
        for u in (fr.e_u, fr.n_F, fr.v_dir):
            assert abs(np.linalg.norm(u) - 1.0) < 1e-12
        assert abs(fr.e_u @ fr.n_F) < 1e-12
        assert abs(fr.e_u @ fr.v_dir) < 1e-12
        assert abs(fr.n_F @ fr.v_dir) < 1e-12
        # the default direction leads away from the face's interior
        assert (fr.apex - fr.m) @ fr.v_dir < 0


def test_frame_degenerate_inputs():
    with pytest.raises(DegenerateTriangleError):
        BoundaryEdgeFrame([0, 0, 0], [0, 0, 0], [1, 1, 0], 0.05)
    with pytest.raises(DegenerateTriangleError):
        BoundaryEdgeFrame([0, 0, 0], [1, 0, 0], [2, 0, 0], 0.05)


def test_build_frame_from_mesh():
    m = HalfedgeMesh()
    m.add_isolated_triangle([-0.5, 0, 0], [0.5, 0, 0], [0, -0.7, 0])
    h = m.edge_between(0, 1)
    fr = build_frame(m, h, 0.02)
    assert np.allclose(fr.a, [-0.5, 0, 0])
    assert np.allclose(fr.b, [0.5, 0, 0])
    assert np.allclose(fr.apex, [0, -0.7, 0])
    with pytest.raises(ValueError):
        build_frame(m, m.twin[h], 0.02)  # rims carry no frame


# ----------------------------------------------------------- apply and clamp


def test_prediction_clamps_to_range():
    assert Prediction(5.0, 5.0) == (1.0, math.pi / 2)
    assert Prediction(-3.0, -9.0) == (-1.0, -math.pi / 2)
    assert Prediction(0.25, -0.5) == (0.25, -0.5)


def test_apply_prediction_geometry():
    fr = _flat_frame(r_d=0.02)
    assert np.allclose(apply_prediction(fr, Prediction(0, 0)), fr.m + fr.v_d, atol=1e-15)
    # halving and doubling the length
    assert np.allclose(apply_prediction(fr, Prediction(-0.5, 0)),
                       fr.m + 0.5 * fr.v_d, atol=1e-15)
    assert np.allclose(apply_prediction(fr, Prediction(1.0, 0)),
                       fr.m + 2.0 * fr.v_d, atol=1e-15)
    # a quarter turn lands along -n_F
    p = apply_prediction(fr, Prediction(0, math.pi / 2))
    assert np.allclose(p, fr.m - fr.h_d * fr.n_F, atol=1e-12)
    # positive rotation tips toward -n_F, negative toward +n_F
    up = apply_prediction(fr, Prediction(0, 0.3))
    dn = apply_prediction(fr, Prediction(0, -0.3))
    assert (up - fr.m) @ fr.n_F < 0 < (dn - fr.m) @ fr.n_F


def _sphere_frame(R=0.3, r_d=0.02):
    # a near-equilateral surface triangle straddling the equator, wound so
    # the face normal points out of the sphere
    half = math.asin(math.sqrt(3) * r_d / 2 / R)
    a = R * np.array([math.cos(half), -math.sin(half), 0.0])
    b = R * np.array([math.cos(half), math.sin(half), 0.0])
    rise = 1.5 * r_d / R
    apex = R * np.array([math.cos(rise), 0.0, math.sin(rise)])
    fr = BoundaryEdgeFrame(a, b, apex, r_d)
    assert fr.n_F @ fr.m > 0  # sanity: outward
    return fr


def test_analytic_prediction_on_sphere():
    R, r_d = 0.3, 0.02
    f = Sphere(radius=R)
    fr = _sphere_frame(R, r_d)
    pred = predict_analytic(f, fr)
    assert pred.r_ls == 0.0
    assert pred.r_er == pytest.approx(fr.h_d / R, rel=1e-3)
    # following the curvature lands closer to the surface than the flat
    # default; the residual is the chord-midpoint sagitta, O(r_d^2 / R)
    bent = abs(f.eval(apply_prediction(fr, pred)))
    flat = abs(f.eval(apply_prediction(fr, Prediction(0, 0))))
    assert bent < 0.6 * flat
    assert bent < 2.0 * fr.h_d ** 2 / R


def test_analytic_prediction_on_plane():
    f = Plane(point=(0, 0, 0), normal=(0, 0, 1))
    fr = BoundaryEdgeFrame([-0.02, 0, 0], [0.02, 0, 0], [0, -0.03, 0], 0.02)
    pred = predict_analytic(f, fr)
    assert pred.r_ls == 0.0
    assert abs(pred.r_er) < 1e-6


def test_analytic_prediction_concave_bends_negative():
    # inner equator of a torus, edge along the tube axis direction: the
    # surface curls toward the frame normal, so the rotation comes out
    # negative
    R, r = 0.4, 0.15
    f = Torus(major_radius=R, minor_radius=r)
    rho = R - r
    a = np.array([rho, 0.0, -0.015])
    b = np.array([rho, 0.0, 0.015])
    apex = np.array([rho * math.cos(0.1), rho * math.sin(0.1), 0.0])
    fr = BoundaryEdgeFrame(a, b, apex, 0.02)
    assert np.allclose(fr.n_F, [-1, 0, 0], atol=0.05)
    pred = predict_analytic(f, fr)
    assert pred.r_er < 0
    assert pred.r_er == pytest.approx(-fr.h_d / rho, rel=2e-2)
    assert abs(f.eval(apply_prediction(fr, pred))) < fr.h_d ** 2 / rho


def test_analytic_prediction_fallback_records_reason():
    # a frame centered on the sphere's singular center cannot project
    f = Sphere(radius=0.3)
    fr = BoundaryEdgeFrame([-0.01, 0, 0], [0.01, 0, 0], [0, -0.02, 0], 0.02)
    diag = {}
    pred = predict_analytic(f, fr, diag)
    assert pred == (0.0, 0.0)
    assert "fallback" in diag


# ---------------------------------------------------------------- embedding


def test_embedding_on_plane_is_exactly_structured():
    f = Plane(point=(0, 0, 0), normal=(0, 0, 1))
    fr = _flat_frame(r_d=0.02)
    emb = build_embedding(f, fr)
    assert emb.shape == (EMBEDDING_DIM,)
    per_point = [0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0]
    want = np.array(per_point * 3 + [1.0])
    assert np.allclose(emb, want, atol=1e-9)


def test_embedding_curvature_slots_on_sphere():
    R, r_d = 0.3, 0.02
    f = Sphere(radius=R)
    fr = _sphere_frame(R, r_d)
    emb = build_embedding(f, fr)
    # every fan direction at every query point sees the same l/R
    for base in (0, 7, 14):
        for slot in (4, 5, 6):
            assert emb[base + slot] == pytest.approx(0.005 / R, rel=1e-2)
    # sdf slots: the default vertex floats a bit off the sphere, the edge
    # endpoints are on it
    assert abs(emb[7]) < 1e-12 and abs(emb[14]) < 1e-12
    assert 0 < emb[0] < 0.1 * r_d


def test_embedding_rigid_motion_invariant():
    rng = np.random.default_rng(301)
    c1, c2 = np.array([-0.18, 0, 0]), np.array([0.2, 0.05, 0])
    fr = _sphere_frame(0.25, 0.02)
    f1 = Union(Sphere(center=c1, radius=0.25), Sphere(center=c2, radius=0.1))
    emb1 = build_embedding(f1, fr)
    for _ in range(5):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        ang = rng.uniform(0, 2 * np.pi)
        K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
        Rm = np.eye(3) + math.sin(ang) * K + (1 - math.cos(ang)) * (K @ K)
        t = rng.uniform(-0.5, 0.5, 3)
        f2 = Union(Sphere(center=Rm @ c1 + t, radius=0.25),
                   Sphere(center=Rm @ c2 + t, radius=0.1))
        fr2 = BoundaryEdgeFrame(Rm @ fr.a + t, Rm @ fr.b + t, Rm @ fr.apex + t, 0.02)
        emb2 = build_embedding(f2, fr2)
        assert np.allclose(emb1, emb2, atol=1e-6)


# ------------------------------------------------------------- mlp predictor


def _predictor_weights(bias=(0.25, 0.5)):
    return MlpWeights(
        EMBEDDING_DIM,
        [MlpLayer(np.zeros((2, EMBEDDING_DIM)), np.asarray(bias, dtype=float), "none", False)],
    )


def test_predict_mlp_scales_and_clamps():
    emb = np.zeros(EMBEDDING_DIM)
    pred = predict_mlp(_predictor_weights((0.25, 0.5)), emb)
    assert pred == (0.25, 0.5 * math.pi / 2)
    pred = predict_mlp(_predictor_weights((7.0, -3.0)), emb)
    assert pred == (1.0, -math.pi / 2)


def test_predict_mlp_validates_shape():
    with pytest.raises(ValueError):
        predict_mlp(MlpWeights(3, [MlpLayer(np.zeros((2, 3)), np.zeros(2), "none", False)]),
                    np.zeros(3))
    with pytest.raises(ValueError):
        predict_mlp(MlpWeights(EMBEDDING_DIM,
                               [MlpLayer(np.zeros((3, EMBEDDING_DIM)), np.zeros(3), "none", False)]),
                    np.zeros(EMBEDDING_DIM))


def test_mlp_predictor_runs_embedding_through_network():
    f = Plane(point=(0, 0, 0), normal=(0, 0, 1))
    fr = _flat_frame(r_d=0.02)
    # weight on the n.n_F slot of the first point: embedding value -1
    w = np.zeros((2, EMBEDDING_DIM))
    w[1, 3] = -0.4
    weights = MlpWeights(EMBEDDING_DIM, [MlpLayer(w, np.zeros(2), "none", False)])
    pred = MlpPredictor(weights).predict(f, fr)
    assert pred == (0.0, 0.4 * math.pi / 2)
    with pytest.raises(ValueError):
        MlpPredictor(MlpWeights(3, [MlpLayer(np.zeros((2, 3)), np.zeros(2), "none", False)]))


def test_constant_and_analytic_predictor_objects():
    assert ConstantPredictor().predict(None, None) == (0.0, 0.0)
    assert ConstantPredictor(0.1, -0.2).predict(None, None) == (0.1, -0.2)
    assert ConstantPredictor.name == "constant"
    assert AnalyticPredictor.name == "analytic"
    assert MlpPredictor.name == "mlp"
    f = Sphere(radius=0.3)
    fr = _sphere_frame()
    assert AnalyticPredictor().predict(f, fr) == predict_analytic(f, fr)


# ------------------------------------------------------------------- losses


def test_loss_terms_on_plane():
    f = Plane(point=(0, 0, 0), normal=(0, 0, 1))
    fr = _flat_frame(r_d=0.02)
    l_sd, l_er, l_lr, total = loss_eval(f, fr, Prediction(0, 0), phi_gt=0.3)
    assert l_sd == pytest.approx(0.0, abs=1e-15)
    assert l_er == pytest.approx(0.3)
    assert l_lr == 0.0
    assert total == pytest.approx(LAMBDA_ER * 0.3)
    l_sd, l_er, l_lr, total = loss_eval(f, fr, Prediction(0.5, 0.1), phi_gt=0.1)
    # bent by 0.1 out of plane: |sd| = 1.5 * h_d * sin(0.1)
    assert l_sd == pytest.approx(1.5 * fr.h_d * math.sin(0.1), abs=1e-12)
    assert l_er == 0.0
    assert l_lr == 0.5
    assert total == pytest.approx(LAMBDA_SD * l_sd + LAMBDA_LR * 0.5)


def test_loss_prefers_true_curvature_on_sphere():
    R = 0.3
    f = Sphere(radius=R)
    fr = _sphere_frame(R, 0.02)
    phi = predict_analytic(f, fr).r_er
    good = loss_eval(f, fr, Prediction(0, phi), phi)[3]
    flat = loss_eval(f, fr, Prediction(0, 0), phi)[3]
    over = loss_eval(f, fr, Prediction(0.4, phi), phi)[3]
    assert good < flat
    assert good < over
