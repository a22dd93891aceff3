"""Signed-distance fields: primitive values, gradients, projection, the
turning-angle walk, network fields, and scene loading."""

import json
import math

import numpy as np
import pytest

from frontmesh import fields
from frontmesh.fields import (
    Box,
    CountedField,
    CurvatureWalkError,
    Intersection,
    MlpLayer,
    MlpWeights,
    NeuralField,
    Plane,
    QueryCounter,
    SmoothUnion,
    Sphere,
    Torus,
    TranslatedScaled,
    Union,
    directional_curvature,
    load_scene,
    mlp_forward,
    project_to_surface,
    project_with_gradient,
)

from oracles import fd_gradient, mlp_forward_oracle


# ------------------------------------------------------------ exact values


def test_sphere_values():
    f = Sphere(radius=0.3)
    assert f.eval((0.3, 0.0, 0.0)) == 0.0
    assert f.eval((0.0, 0.0, 0.0)) == -0.3
    assert f.eval((1.0, 0.0, 0.0)) == pytest.approx(0.7, abs=1e-15)
    off = Sphere(center=(0.1, -0.2, 0.3), radius=0.5)
    assert off.eval((0.1, -0.2, 0.3)) == -0.5


def test_box_values():
    f = Box(center=(0, 0, 0), half_extents=(0.2, 0.3, 0.4))
    assert f.eval((0.2, 0.0, 0.0)) == 0.0
    assert f.eval((0.0, 0.0, 0.0)) == -0.2
    assert f.eval((0.5, 0.0, 0.0)) == pytest.approx(0.3, abs=1e-15)
    # outside a corner: euclidean distance to the corner
    d = f.eval((0.3, 0.4, 0.5))
    assert d == pytest.approx(math.sqrt(3 * 0.1 ** 2), abs=1e-15)


def test_torus_values():
    f = Torus(major_radius=0.4, minor_radius=0.15)
    assert f.eval((0.55, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert f.eval((0.4, 0.0, 0.0)) == -0.15
    assert f.eval((0.0, 0.4, 0.15)) == pytest.approx(0.0, abs=1e-15)
    # on the axis: distance sqrt(R^2 + z^2) - r
    assert f.eval((0.0, 0.0, 0.3)) == pytest.approx(0.5 - 0.15, abs=1e-15)


def test_plane_values():
    f = Plane(point=(0, 0, 0.25), normal=(0, 0, 2.0))  # normal gets normalized
    assert f.eval((0.0, 0.0, 1.0)) == pytest.approx(0.75, abs=1e-15)
    assert f.eval((5.0, -3.0, 0.25)) == pytest.approx(0.0, abs=1e-15)
    assert f.eval((0.0, 0.0, 0.0)) == pytest.approx(-0.25, abs=1e-15)


def test_csg_values():
    a = Sphere(center=(-0.2, 0, 0), radius=0.3)
    b = Sphere(center=(0.2, 0, 0), radius=0.3)
    u = Union(a, b)
    i = Intersection(a, b)
    p = np.array([0.4, 0.0, 0.0])
    assert u.eval(p) == min(a.eval(p), b.eval(p))
    assert i.eval(p) == max(a.eval(p), b.eval(p))
    s = SmoothUnion(a, b, blend=0.1)
    # far from the blend region it follows the plain union
    far = np.array([-0.5, 0.0, 0.0])
    assert s.eval(far) == pytest.approx(u.eval(far), abs=1e-12)
    # in the blend region it dips below both children
    mid = np.array([0.0, 0.31, 0.0])
    assert s.eval(mid) < min(a.eval(mid), b.eval(mid))


def test_translate_scale_folds_into_program():
    inner = Torus(center=(0.1, 0, 0), major_radius=0.4, minor_radius=0.1)
    f = TranslatedScaled(inner, offset=(0.2, -0.1, 0.3), scale=0.5)
    rng = np.random.default_rng(0)
    for p in rng.uniform(-1, 1, (50, 3)):
        direct = 0.5 * inner.eval((p - np.array([0.2, -0.1, 0.3])) / 0.5)
        assert abs(f.eval(p) - direct) <= 1e-12


# -------------------------------------------------------------- gradients


def _smooth_samples(rng, kind, n):
    """Random points away from each field's gradient discontinuities."""
    if kind == "sphere":
        p = rng.normal(size=(n, 3))
        return 0.2 + rng.uniform(0.05, 1.0, (n, 1)) * p / np.linalg.norm(p, axis=1, keepdims=True)
    if kind == "torus":
        ang = rng.uniform(0, 2 * np.pi, n)
        ring = np.stack([0.4 * np.cos(ang), 0.4 * np.sin(ang), np.zeros(n)], axis=1)
        off = rng.normal(size=(n, 3))
        off /= np.linalg.norm(off, axis=1, keepdims=True)
        return ring + rng.uniform(0.02, 0.3, (n, 1)) * off
    raise ValueError(kind)


def test_analytic_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    cases = [
        (Sphere(center=(0.2, 0.2, 0.2), radius=0.4), _smooth_samples(rng, "sphere", 40)),
        (Torus(major_radius=0.4, minor_radius=0.15), _smooth_samples(rng, "torus", 40)),
        (Plane(point=(0, 0, 0), normal=(1, 2, 3)), rng.uniform(-1, 1, (40, 3))),
    ]
    for f, pts in cases:
        for p in pts:
            assert np.allclose(f.gradient(p), fd_gradient(f, p), atol=1e-7)


def test_box_gradient_in_face_regions():
    f = Box(half_extents=(0.2, 0.3, 0.4))
    # squarely outside the +x face, and inside nearest to the +x face
    for p in ([0.5, 0.05, 0.05], [0.1, 0.02, 0.03]):
        assert np.allclose(f.gradient(p), fd_gradient(f, p), atol=1e-7)


def test_smooth_union_gradient_mostly_matches_fd():
    f = SmoothUnion(
        Sphere(center=(-0.18, 0, 0), radius=0.25),
        Sphere(center=(0.18, 0, 0), radius=0.25),
        blend=0.1,
    )
    rng = np.random.default_rng(2)
    pts = rng.uniform(-0.6, 0.6, (1000, 3))
    good = 0
    for p in pts:
        if np.allclose(f.gradient(p), fd_gradient(f, p), atol=1e-6):
            good += 1
    # the blend clamp has kinks; away from them the gradient is exact
    assert good >= 990


def test_degenerate_gradient_flagged():
    f = Sphere(radius=0.3)
    g, deg = f.gradient((0.0, 0.0, 0.0), return_degenerate=True)
    assert deg
    g, deg = f.gradient((0.1, 0.0, 0.0), return_degenerate=True)
    assert not deg
    assert np.allclose(g, [1, 0, 0], atol=1e-15)


# -------------------------------------------------------------- projection


def test_projection_lands_on_surface():
    f = Sphere(radius=0.3)
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = rng.uniform(-1, 1, 3)
        if np.linalg.norm(p) < 1e-2:
            continue
        q, conv = project_to_surface(f, p)
        assert conv
        assert abs(f.eval(q)) < 1e-5
        # stays on the radial ray
        assert np.allclose(q / np.linalg.norm(q), p / np.linalg.norm(p), atol=1e-5)


def test_projection_gradient_is_outward_normal():
    f = Torus(major_radius=0.4, minor_radius=0.15)
    q, g, conv = project_with_gradient(f, (0.7, 0.0, 0.1))
    assert conv
    assert abs(f.eval(q)) < 1e-5
    n = g / np.linalg.norm(g)
    step = q + 1e-4 * n
    assert f.eval(step) > f.eval(q)


def test_projection_fails_at_singular_point():
    f = Sphere(radius=0.3)
    q, conv = project_to_surface(f, (0.0, 0.0, 0.0))
    assert not conv


def test_projection_generic_path_matches_program_path():
    inner = Sphere(radius=0.3)

    class Opaque(fields.ScalarField):
        def eval(self, p):
            return inner.eval(p)

    rng = np.random.default_rng(4)
    for _ in range(20):
        p = 0.2 + rng.uniform(0.0, 0.8, 3)
        qa, ca = project_to_surface(inner, p)
        qb, cb = project_to_surface(Opaque(), p)
        assert ca and cb
        assert np.allclose(qa, qb, atol=1e-5)


# ---------------------------------------------------------- curvature walk


def test_sphere_walk_turning_angle():
    R = 0.3
    f = Sphere(radius=R)
    rng = np.random.default_rng(5)
    for _ in range(20):
        q = rng.normal(size=3)
        q = R * q / np.linalg.norm(q)
        d = rng.normal(size=3)
        k = directional_curvature(f, q, d)
        assert k == pytest.approx(0.005 / R, rel=1e-3)


def test_plane_walk_is_flat():
    f = Plane(point=(0, 0, 0), normal=(0, 0, 1))
    k = directional_curvature(f, (0.1, -0.2, 0.0), (1.0, 0.5, 0.0))
    assert abs(k) < 1e-6


def test_torus_tube_curvature():
    R, r = 0.4, 0.15
    f = Torus(major_radius=R, minor_radius=r)
    # outer equator, walking around the tube cross-section
    k = directional_curvature(f, (R + r, 0.0, 0.0), (0.0, 0.0, 1.0))
    assert k == pytest.approx(0.005 / r, rel=1e-2)
    # walking along the big circle sees the gentler radius R + r
    k2 = directional_curvature(f, (R + r, 0.0, 0.0), (0.0, 1.0, 0.0))
    assert k2 == pytest.approx(0.005 / (R + r), rel=1e-2)


def test_walk_failure_raises():
    f = Sphere(radius=0.3)
    with pytest.raises(CurvatureWalkError) as e:
        directional_curvature(f, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert e.value.distance_done == 0.0
    assert e.value.length == pytest.approx(0.005)


def test_walk_length_scaling():
    # the turning angle is linear in walk length to leading order
    f = Sphere(radius=0.3)
    q = (0.3, 0.0, 0.0)
    k1 = directional_curvature(f, q, (0, 1, 0), l=0.005)
    k2 = directional_curvature(f, q, (0, 1, 0), l=0.010)
    assert k2 == pytest.approx(2.0 * k1, rel=1e-3)


# ----------------------------------------------------------- network fields


def _tiny_weights():
    """8-unit tanh layer + skip-connected linear head, input 3, output 2."""
    rng = np.random.default_rng(6)
    l1 = MlpLayer(rng.normal(size=(8, 3)) * 0.5, rng.normal(size=8) * 0.1, "tanh", False)
    l2 = MlpLayer(rng.normal(size=(2, 11)) * 0.5, rng.normal(size=2) * 0.1, "none", True)
    return MlpWeights(3, [l1, l2], {"sdf": 0, "curvature": None})


def test_mlp_forward_matches_oracle():
    w = _tiny_weights()
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.normal(size=3)
        assert np.allclose(mlp_forward(w, x), mlp_forward_oracle(w, x), atol=1e-12)


def test_mlp_activations_match_oracle():
    rng = np.random.default_rng(8)
    for act in ("relu", "tanh", "softplus", "none"):
        w = MlpWeights(3, [MlpLayer(rng.normal(size=(4, 3)), rng.normal(size=4), act, False)])
        for _ in range(10):
            x = rng.normal(size=3) * 3.0
            assert np.allclose(mlp_forward(w, x), mlp_forward_oracle(w, x), atol=1e-12)


def test_weights_roundtrip(tmp_path):
    w = _tiny_weights()
    path = tmp_path / "weights.json"
    w.save(str(path))
    w2 = MlpWeights.load(str(path))
    assert w2.input_dim == 3
    assert w2.outputs == w.outputs
    x = np.array([0.1, -0.2, 0.3])
    assert np.array_equal(mlp_forward(w, x), mlp_forward(w2, x))


def test_weights_validation():
    good = MlpLayer(np.zeros((4, 3)), np.zeros(4), "relu", False)
    with pytest.raises(ValueError):
        MlpWeights(3, [MlpLayer(np.zeros((4, 5)), np.zeros(4), "relu", False)])
    with pytest.raises(ValueError):
        MlpWeights(3, [MlpLayer(np.zeros((4, 3)), np.zeros(5), "relu", False)])
    with pytest.raises(ValueError):
        MlpWeights(3, [MlpLayer(np.zeros((4, 3)), np.zeros(4), "sigmoid", False)])
    with pytest.raises(ValueError):
        MlpWeights.from_dict({"version": 2, "input_dim": 3, "layers": []})
    MlpWeights(3, [good])  # sanity: the good layer is accepted


def test_neural_field_linear_slab():
    # one linear layer computing z - 0.25: a plane field, exactly
    w = MlpWeights(
        3,
        [MlpLayer(np.array([[0.0, 0.0, 1.0]]), np.array([-0.25]), "none", False)],
        {"sdf": 0},
    )
    f = NeuralField(w)
    assert f.eval((0.3, 0.7, 1.0)) == pytest.approx(0.75, abs=1e-15)
    assert np.allclose(f.gradient((0.1, 0.2, 0.3)), [0, 0, 1], atol=1e-9)
    q, conv = project_to_surface(f, (0.4, 0.1, 0.9))
    assert conv and abs(q[2] - 0.25) < 1e-4


def test_neural_field_curvature_head():
    # input (point, direction); sdf = z, curvature = constant 0.125
    w = MlpWeights(
        6,
        [MlpLayer(np.array([[0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 0, 0.0]]),
                  np.array([0.0, 0.125]), "none", False)],
        {"sdf": 0, "curvature": 1},
    )
    f = NeuralField(w)
    assert f.query_curvature((0, 0, 0), (1, 0, 0)) == 0.125
    assert directional_curvature(f, (0, 0, 0), (1, 0, 0)) == 0.125


def test_neural_field_rejects_bad_outputs():
    w3 = MlpWeights(3, [MlpLayer(np.zeros((1, 3)), np.zeros(1), "none", False)], {"sdf": None})
    with pytest.raises(ValueError):
        NeuralField(w3)
    with pytest.raises(ValueError):
        NeuralField(MlpWeights(4, [MlpLayer(np.zeros((1, 4)), np.zeros(1), "none", False)]))
    with pytest.raises(ValueError):
        # curvature head demands a direction input
        NeuralField(MlpWeights(3, [MlpLayer(np.zeros((2, 3)), np.zeros(2), "none", False)],
                               {"sdf": 0, "curvature": 1}))


# ------------------------------------------------------------ query counts


def test_counted_field_passthrough_and_tallies():
    ctr = QueryCounter()
    f = CountedField(Sphere(radius=0.3), ctr)
    p = np.array([0.5, 0.1, -0.2])
    assert f.eval(p) == Sphere(radius=0.3).eval(p)
    assert ctr.snapshot() == (1, 0, 0)
    f.eval_batch(np.zeros((7, 3)) + 0.5)
    assert ctr.sdf_evals == 8
    f.gradient(p)
    assert ctr.gradient_evals == 1
    directional_curvature(f, (0.3, 0.0, 0.0), (0, 1, 0))
    assert ctr.curvature_evals == 1
    assert ctr.total() == ctr.sdf_evals + ctr.gradient_evals + ctr.curvature_evals


def test_counted_field_fd_gradient_counts_six_evals():
    class Opaque(fields.ScalarField):
        def eval(self, p):
            return float(np.linalg.norm(p) - 0.3)

    ctr = QueryCounter()
    f = CountedField(Opaque(), ctr)
    f.gradient((0.5, 0.0, 0.0))
    assert ctr.snapshot() == (6, 1, 0)


def test_projection_queries_are_counted():
    ctr = QueryCounter()
    f = CountedField(Sphere(radius=0.3), ctr)
    project_to_surface(f, (0.9, 0.2, 0.1))
    assert ctr.sdf_evals >= 2
    assert ctr.gradient_evals >= 1


# -------------------------------------------------------------- scene files


def test_load_scene_csg(tmp_path):
    doc = {
        "field": {
            "type": "union",
            "children": [
                {"type": "sphere", "radius": 0.3},
                {"type": "translate_scale", "offset": [0, 0, 0.5], "scale": 0.5,
                 "child": {"type": "box", "half_extents": [0.2, 0.2, 0.2]}},
            ],
        },
        "bbox": [[-1, -1, -1], [1, 1, 1.5]],
    }
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(doc))
    f, bbox = load_scene(str(path))
    assert f.eval((0.3, 0.0, 0.0)) == 0.0
    assert f.eval((0.0, 0.0, 0.5)) == -0.1  # scaled box interior
    assert bbox.shape == (2, 3) and bbox[1, 2] == 1.5


def test_load_scene_mlp_reference(tmp_path):
    w = MlpWeights(
        3,
        [MlpLayer(np.array([[0.0, 0.0, 1.0]]), np.array([0.0]), "none", False)],
        {"sdf": 0},
    )
    w.save(str(tmp_path / "net.json"))
    doc = {"field": {"type": "mlp", "path": "net.json"}}
    (tmp_path / "scene.json").write_text(json.dumps(doc))
    f, bbox = load_scene(str(tmp_path / "scene.json"))
    assert f.eval((0.1, 0.2, 0.7)) == pytest.approx(0.7, abs=1e-15)
    assert np.array_equal(bbox, [[-1, -1, -1], [1, 1, 1]])


def test_load_scene_weights_file_directly(tmp_path):
    w = MlpWeights(
        3,
        [MlpLayer(np.array([[1.0, 0.0, 0.0]]), np.array([-0.5]), "none", False)],
        {"sdf": 0},
    )
    w.save(str(tmp_path / "net.json"))
    f, bbox = load_scene(str(tmp_path / "net.json"))
    assert f.eval((1.0, 0.0, 0.0)) == pytest.approx(0.5, abs=1e-15)


def test_load_scene_errors(tmp_path):
    (tmp_path / "bad1.json").write_text(json.dumps({"bbox": [[-1, -1, -1], [1, 1, 1]]}))
    with pytest.raises(ValueError):
        load_scene(str(tmp_path / "bad1.json"))
    (tmp_path / "bad2.json").write_text(
        json.dumps({"field": {"type": "sphere", "radius": 0.3}, "bbox": [[1, 1, 1], [-1, 1, 2]]})
    )
    with pytest.raises(ValueError):
        load_scene(str(tmp_path / "bad2.json"))
    (tmp_path / "bad3.json").write_text(json.dumps({"field": {"type": "gyroid"}}))
    with pytest.raises(ValueError):
        load_scene(str(tmp_path / "bad3.json"))
