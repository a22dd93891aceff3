"""Vertex prediction at boundary edges.

A boundary edge gets a local frame: the edge direction e_u, the adjacent
face normal n_F, and the default vector v_d orthogonal to both, pointing
away from the face, with length h_d = 1.5 * r_d (the height of the
default equilateral triangle).  A prediction r = (r_ls, r_er) turns the
default extension m + v_d into the new vertex by scaling the length by
(1 + r_ls) and rotating by r_er about the edge axis, positive rotation
bending toward -n_F so that r_er equal to the turning angle closes onto
a sphere.

The analytic predictor reads the turning angle straight from the field;
the MLP predictor runs a loaded network on a 22-value embedding of the
edge neighborhood.  Loss functionals score a prediction against the
ground-truth angle.
"""

import math
from collections import namedtuple

import numpy as np

from .fields import (
    CurvatureWalkError,
    directional_curvature,
    mlp_forward,
    project_with_gradient,
)
from .halfedge import DegenerateTriangleError

LAMBDA_SD = 1.0
LAMBDA_ER = 1.0
LAMBDA_LR = 0.05

EMBEDDING_DIM = 22
_HALF_PI = math.pi / 2.0


class Prediction(namedtuple("Prediction", ["r_ls", "r_er"])):
    """Length-scaling in [-1, 1] and edge rotation in [-pi/2, pi/2].

    Values are clamped into range at construction.
    """

    __slots__ = ()

    def __new__(cls, r_ls=0.0, r_er=0.0):
        r_ls = min(1.0, max(-1.0, float(r_ls)))
        r_er = min(_HALF_PI, max(-_HALF_PI, float(r_er)))
        return super().__new__(cls, r_ls, r_er)


class BoundaryEdgeFrame:
    """Local frame of a boundary edge; see the module docstring.

    Attributes: a, b (edge endpoints), m (midpoint), e_u (unit edge
    direction a->b), n_F (unit adjacent-face normal), v_dir (unit default
    direction), v_d (= h_d * v_dir), h_d, e_length, apex (the adjacent
    face's third corner).
    """

    __slots__ = ("a", "b", "m", "e_u", "n_F", "v_dir", "v_d", "h_d", "e_length", "apex")

    def __init__(self, a, b, apex, r_d):
        self.a = np.asarray(a, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.apex = np.asarray(apex, dtype=np.float64)
        e = self.b - self.a
        self.e_length = float(np.sqrt(e @ e))
        if self.e_length < 1e-12:
            raise DegenerateTriangleError("boundary edge has zero length")
        self.e_u = e / self.e_length
        n = np.cross(e, self.apex - self.b)
        L = float(np.sqrt(n @ n))
        if L < 1e-12:
            raise DegenerateTriangleError("adjacent face is degenerate")
        self.n_F = n / L
        self.m = 0.5 * (self.a + self.b)
        v = np.cross(self.e_u, self.n_F)
        self.v_dir = v / float(np.sqrt(v @ v))
        self.h_d = 1.5 * float(r_d)
        self.v_d = self.h_d * self.v_dir


def build_frame(mesh, h, r_d):
    """Frame for boundary halfedge h; the edge runs origin -> dest."""
    if not mesh.is_boundary(h):
        raise ValueError("halfedge %r is not a boundary edge" % (h,))
    o = mesh.origin[h]
    d = mesh.dest(h)
    f = mesh.face[h]
    apex_id = next(v for v in mesh.face_vertex_ids(f) if v != o and v != d)
    return BoundaryEdgeFrame(mesh.point(o), mesh.point(d), mesh.point(apex_id), r_d)


def apply_prediction(frame, pred):
    """New vertex position for a prediction.

    p_d = m + (1 + r_ls) * h_d * (cos(r_er) * v_dir - sin(r_er) * n_F),
    which is v_d rotated about the edge axis and rescaled.
    """
    c = math.cos(pred.r_er)
    s = math.sin(pred.r_er)
    return frame.m + (1.0 + pred.r_ls) * frame.h_d * (c * frame.v_dir - s * frame.n_F)


def _rotate_about(v, axis, angle):
    # Rodrigues, for v orthogonal to the unit axis
    return v * math.cos(angle) + np.cross(axis, v) * math.sin(angle)


def _tangent_fan(frame, n_local):
    """Three curvature query directions in the tangent plane of n_local."""
    t = frame.v_dir - (frame.v_dir @ n_local) * n_local
    L = float(np.sqrt(t @ t))
    if L < 1e-9:
        t = frame.e_u - (frame.e_u @ n_local) * n_local
        L = float(np.sqrt(t @ t))
        if L < 1e-9:
            return [frame.v_dir, frame.v_dir, frame.v_dir]
    t = t / L
    third = 2.0 * math.pi / 3.0
    return [t, _rotate_about(t, n_local, third), _rotate_about(t, n_local, -third)]


def build_embedding(field, frame, l=None):
    """22-value feature vector for an edge.

    For each of the default vertex location (m + v_d), a, and b: the
    signed distance, the unit gradient in the frame's (e_u, v_dir, n_F)
    coordinates, and three directional curvatures along the tangent
    projections of v_dir rotated by 0 and +-120 degrees about the local
    normal.  The edge length closes the vector.  Curvature walk failures
    propagate.
    """
    from .fields import WALK_LENGTH

    if l is None:
        l = WALK_LENGTH
    out = np.empty(EMBEDDING_DIM)
    k = 0
    for pt in (frame.m + frame.v_d, frame.a, frame.b):
        out[k] = field.eval(pt)
        k += 1
        g = np.asarray(field.gradient(pt), dtype=np.float64)
        L = float(np.sqrt(g @ g))
        n_local = g / L if L > 1e-12 else g
        out[k] = n_local @ frame.e_u
        out[k + 1] = n_local @ frame.v_dir
        out[k + 2] = n_local @ frame.n_F
        k += 3
        for d in _tangent_fan(frame, n_local if L > 1e-12 else frame.n_F):
            out[k] = directional_curvature(field, pt, d, l)
            k += 1
    out[k] = frame.e_length
    return out


def predict_analytic(field, frame, diag=None):
    """Oracle prediction: the turning angle at the edge, no length change.

    Projects the edge midpoint to the surface and walks a geodesic of
    length h_d along the default direction.  On projection or walk
    failure returns the flat default (0, 0); when diag is a dict, the
    failure reason is recorded under "fallback".
    """
    q, _, conv = project_with_gradient(field, frame.m)
    if not conv:
        if diag is not None:
            diag["fallback"] = "midpoint projection did not converge"
        return Prediction(0.0, 0.0)
    try:
        kappa = directional_curvature(field, q, frame.v_dir, frame.h_d)
    except CurvatureWalkError as exc:
        if diag is not None:
            diag["fallback"] = str(exc)
        return Prediction(0.0, 0.0)
    return Prediction(0.0, kappa)


def predict_mlp(weights, emb):
    """Run a loaded network on an embedding.

    The first output is the length scaling as-is; the second, times pi/2,
    is the edge rotation.  Both are then range-clamped.
    """
    if weights.input_dim != EMBEDDING_DIM:
        raise ValueError("predictor network wants input_dim %d, has %d"
                         % (EMBEDDING_DIM, weights.input_dim))
    if weights.output_dim != 2:
        raise ValueError("predictor network must emit 2 outputs, emits %d"
                         % weights.output_dim)
    emb = np.asarray(emb, dtype=np.float64)
    out = mlp_forward(weights, emb)
    return Prediction(out[0], out[1] * _HALF_PI)


def loss_eval(field, frame, pred, phi_gt):
    """Loss terms for a prediction against the ground-truth angle.

    Returns (L_SD, L_ER, L_LR, weighted total): the absolute signed
    distance at the predicted vertex, the absolute angle error, the
    absolute length scaling, and their weighted sum.
    """
    p_d = apply_prediction(frame, pred)
    l_sd = abs(field.eval(p_d))
    l_er = abs(pred.r_er - phi_gt)
    l_lr = abs(pred.r_ls)
    total = LAMBDA_SD * l_sd + LAMBDA_ER * l_er + LAMBDA_LR * l_lr
    return l_sd, l_er, l_lr, total


# ------------------------------------------------------- predictor objects


class AnalyticPredictor:
    """Ground-truth predictor; queries the field directly."""

    name = "analytic"

    def predict(self, field, frame, diag=None):
        return predict_analytic(field, frame, diag)


class MlpPredictor:
    """Prediction by a loaded network over the edge embedding."""

    name = "mlp"

    def __init__(self, weights):
        if weights.input_dim != EMBEDDING_DIM or weights.output_dim != 2:
            raise ValueError("predictor network must map %d inputs to 2 outputs"
                             % EMBEDDING_DIM)
        self.weights = weights

    def predict(self, field, frame, diag=None):
        emb = build_embedding(field, frame)
        return predict_mlp(self.weights, emb)


class ConstantPredictor:
    """Fixed prediction regardless of the field; useful as a baseline."""

    name = "constant"

    def __init__(self, r_ls=0.0, r_er=0.0):
        self.prediction = Prediction(r_ls, r_er)

    def predict(self, field, frame, diag=None):
        return self.prediction
