"""Signed-distance fields and their point queries.

Analytic primitives and CSG combinators compile to flat postfix programs
run by the kernel backend, so a whole CSG tree is a single program and
translation/scaling folds into primitive constants.  An MLP-backed field
evaluates a loaded feed-forward network instead.  On top of raw evaluation
the module provides gradient queries, Newton projection onto the zero set,
and the turning-angle curvature walk, all with optional query counting.

Sign convention: negative inside, positive outside.
"""

import json
import math
import os
import threading

import numpy as np

from . import _kernels as kernels
from ._kernels import (
    OP_BOX,
    OP_INTERSECT,
    OP_PLANE,
    OP_SMOOTH_UNION,
    OP_SPHERE,
    OP_TORUS,
    OP_UNION,
)

EPS_SURFACE = 1e-5
PROJECT_MAX_ITERS = 20
FD_STEP = 1e-5
WALK_SUBSTEPS = 8
WALK_LENGTH = 0.005

_COMBINATORS = (OP_UNION, OP_INTERSECT, OP_SMOOTH_UNION)


class CurvatureWalkError(RuntimeError):
    """Raised when the geodesic walk fails before covering its length."""

    def __init__(self, distance_done, length):
        super().__init__(
            "curvature walk failed after %g of %g" % (distance_done, length)
        )
        self.distance_done = distance_done
        self.length = length


def _vec3(x):
    a = np.asarray(x, dtype=np.float64)
    if a.shape == ():
        a = np.full(3, float(a))
    if a.shape != (3,):
        raise ValueError("expected a 3-vector, got shape %r" % (a.shape,))
    return a


class QueryCounter:
    """Monotone tallies of sdf, gradient, and curvature queries.

    Updates are locked so fields can be shared across threads.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.sdf_evals = 0
        self.gradient_evals = 0
        self.curvature_evals = 0

    def add(self, sdf=0, gradient=0, curvature=0):
        with self._lock:
            self.sdf_evals += sdf
            self.gradient_evals += gradient
            self.curvature_evals += curvature

    def snapshot(self):
        with self._lock:
            return (self.sdf_evals, self.gradient_evals, self.curvature_evals)

    def total(self):
        with self._lock:
            return self.sdf_evals + self.gradient_evals + self.curvature_evals


def _fd_gradient(field, p, h=FD_STEP):
    """Central-difference gradient, six evaluations."""
    p = _vec3(p)
    g = np.empty(3)
    for i in range(3):
        q = p.copy()
        q[i] = p[i] + h
        hi = field.eval(q)
        q[i] = p[i] - h
        lo = field.eval(q)
        g[i] = (hi - lo) / (2.0 * h)
    return g


class ScalarField:
    """Base signed-distance oracle.

    Subclasses implement eval; gradient defaults to central differences
    and eval_batch to a Python loop.
    """

    has_analytic_gradient = False

    def eval(self, p):
        """Signed distance at a point."""
        raise NotImplementedError

    def eval_batch(self, pts):
        """Signed distances for an (n, 3) array of points."""
        pts = np.asarray(pts, dtype=np.float64)
        return np.array([self.eval(q) for q in pts], dtype=np.float64)

    def gradient(self, p, return_degenerate=False):
        """Field gradient at a point, not normalized.

        With return_degenerate, also returns a flag marking points where
        the gradient is unreliable (vanishing norm).
        """
        g = _fd_gradient(self, p)
        if return_degenerate:
            return g, bool(g @ g < 1e-24)
        return g


# ---------------------------------------------------------------- analytic


class AnalyticField(ScalarField):
    """Field backed by a compiled postfix program.

    Subclasses emit opcodes in _emit; the constructor runs emission once
    with the identity transform and freezes the program arrays.
    """

    has_analytic_gradient = True

    def __init__(self):
        ops = []
        consts = []
        self._emit(ops, consts, 1.0, np.zeros(3))
        depth = 0
        peak = 0
        for i in range(0, len(ops), 2):
            depth += -1 if ops[i] in _COMBINATORS else 1
            if depth > peak:
                peak = depth
        if peak > kernels.MAX_STACK:
            raise ValueError("CSG tree needs stack %d > %d" % (peak, kernels.MAX_STACK))
        self.ops = np.asarray(ops, dtype=np.int32)
        self.consts = np.asarray(consts, dtype=np.float64)

    def _emit(self, ops, consts, scale, offset):
        raise NotImplementedError

    def eval(self, p):
        p = _vec3(p)
        return kernels.eval_one(self.ops, self.consts, p[0], p[1], p[2])

    def eval_batch(self, pts):
        pts = np.ascontiguousarray(pts, dtype=np.float64)
        return kernels.eval_batch(self.ops, self.consts, pts)

    def gradient(self, p, return_degenerate=False):
        p = _vec3(p)
        _, gx, gy, gz, deg = kernels.grad_one(self.ops, self.consts, p[0], p[1], p[2])
        g = np.array([gx, gy, gz])
        if return_degenerate:
            return g, bool(deg)
        return g


class Sphere(AnalyticField):
    def __init__(self, center=(0.0, 0.0, 0.0), radius=1.0):
        self.center = _vec3(center)
        self.radius = float(radius)
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        super().__init__()

    def _emit(self, ops, consts, scale, offset):
        ops += [OP_SPHERE, len(consts)]
        consts.extend(offset + scale * self.center)
        consts.append(scale * self.radius)


class Box(AnalyticField):
    def __init__(self, center=(0.0, 0.0, 0.0), half_extents=(1.0, 1.0, 1.0)):
        self.center = _vec3(center)
        self.half_extents = _vec3(half_extents)
        if np.any(self.half_extents <= 0.0):
            raise ValueError("half extents must be positive")
        super().__init__()

    def _emit(self, ops, consts, scale, offset):
        ops += [OP_BOX, len(consts)]
        consts.extend(offset + scale * self.center)
        consts.extend(scale * self.half_extents)


class Torus(AnalyticField):
    """Torus around the +z axis through its center."""

    def __init__(self, center=(0.0, 0.0, 0.0), major_radius=0.4, minor_radius=0.1):
        self.center = _vec3(center)
        self.major_radius = float(major_radius)
        self.minor_radius = float(minor_radius)
        if self.major_radius <= 0.0 or self.minor_radius <= 0.0:
            raise ValueError("torus radii must be positive")
        super().__init__()

    def _emit(self, ops, consts, scale, offset):
        ops += [OP_TORUS, len(consts)]
        consts.extend(offset + scale * self.center)
        consts.append(scale * self.major_radius)
        consts.append(scale * self.minor_radius)


class Plane(AnalyticField):
    """Half-space boundary; positive on the side the normal points to."""

    def __init__(self, point=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)):
        self.point = _vec3(point)
        n = _vec3(normal)
        L = math.sqrt(n @ n)
        if L < 1e-12:
            raise ValueError("plane normal must be nonzero")
        self.normal = n / L
        super().__init__()

    def _emit(self, ops, consts, scale, offset):
        ops += [OP_PLANE, len(consts)]
        consts.extend(offset + scale * self.point)
        consts.extend(self.normal)


def _check_children(children):
    if len(children) < 2:
        raise ValueError("need at least two children")
    for ch in children:
        if not isinstance(ch, AnalyticField):
            raise TypeError("CSG children must be analytic fields")
    return tuple(children)


class Union(AnalyticField):
    """Pointwise minimum of children; ties take the earlier child."""

    _op = OP_UNION

    def __init__(self, *children):
        self.children = _check_children(children)
        super().__init__()

    def _emit(self, ops, consts, scale, offset):
        self.children[0]._emit(ops, consts, scale, offset)
        for ch in self.children[1:]:
            ch._emit(ops, consts, scale, offset)
            ops += [self._op, 0]


class Intersection(Union):
    """Pointwise maximum of children."""

    _op = OP_INTERSECT


class SmoothUnion(AnalyticField):
    """Blended union; blend is the transition width (same units as space)."""

    def __init__(self, *children, blend=0.1):
        self.children = _check_children(children)
        self.blend = float(blend)
        if self.blend <= 0.0:
            raise ValueError("blend must be positive")
        super().__init__()

    def _emit(self, ops, consts, scale, offset):
        self.children[0]._emit(ops, consts, scale, offset)
        for ch in self.children[1:]:
            ch._emit(ops, consts, scale, offset)
            ops += [OP_SMOOTH_UNION, len(consts)]
            consts.append(scale * self.blend)


class TranslatedScaled(AnalyticField):
    """Child field moved by offset and uniformly scaled by scale.

    eval(p) = scale * child((p - offset) / scale); folded into the child's
    constants at compile time, so there is no per-query transform cost.
    """

    def __init__(self, child, offset=(0.0, 0.0, 0.0), scale=1.0):
        if not isinstance(child, AnalyticField):
            raise TypeError("child must be an analytic field")
        self.child = child
        self.offset = _vec3(offset)
        self.scale = float(scale)
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")
        super().__init__()

    def _emit(self, ops, consts, scale, offset):
        self.child._emit(ops, consts, scale * self.scale, offset + scale * self.offset)


# -------------------------------------------------------------- mlp fields

_ACTIVATIONS = ("relu", "tanh", "softplus", "none")


class MlpLayer:
    __slots__ = ("weight", "bias", "activation", "concat_input")

    def __init__(self, weight, bias, activation, concat_input):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.activation = activation
        self.concat_input = bool(concat_input)


class MlpWeights:
    """Feed-forward network weights.

    Each layer multiplies its input by a rows x cols matrix, adds a bias,
    and applies the activation.  A layer with concat_input takes the
    previous output concatenated with the original input vector (skip
    connections are spelled out this way in the file).

    Parameters
    ----------
    input_dim : int
        Length of the network input vector.
    layers : list of MlpLayer
    outputs : dict or None
        Output slot map, e.g. {"sdf": 0, "curvature": 1}.  Defaults to
        {"sdf": 0, "curvature": None}.
    """

    def __init__(self, input_dim, layers, outputs=None):
        self.input_dim = int(input_dim)
        self.layers = list(layers)
        cur = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.activation not in _ACTIVATIONS:
                raise ValueError("layer %d: unknown activation %r" % (i, layer.activation))
            rows, cols = layer.weight.shape
            expect = cur + self.input_dim if layer.concat_input else cur
            if cols != expect:
                raise ValueError("layer %d: expected %d input cols, got %d" % (i, expect, cols))
            if layer.bias.shape != (rows,):
                raise ValueError("layer %d: bias length %d != rows %d" % (i, layer.bias.shape[0], rows))
            cur = rows
        self.output_dim = cur
        if outputs is None:
            outputs = {"sdf": 0, "curvature": None}
        self.outputs = dict(outputs)

    @classmethod
    def from_dict(cls, d):
        if d.get("version") != 1:
            raise ValueError("unsupported weights version %r" % (d.get("version"),))
        layers = []
        for ld in d["layers"]:
            rows = int(ld["rows"])
            cols = int(ld["cols"])
            w = np.asarray(ld["weights"], dtype=np.float64)
            if w.shape != (rows * cols,):
                raise ValueError("weight count %d != rows*cols %d" % (w.size, rows * cols))
            layers.append(
                MlpLayer(
                    w.reshape(rows, cols),
                    ld["bias"],
                    ld["activation"],
                    ld.get("concat_input", False),
                )
            )
        return cls(int(d["input_dim"]), layers, d.get("outputs"))

    def to_dict(self):
        return {
            "version": 1,
            "input_dim": self.input_dim,
            "layers": [
                {
                    "rows": layer.weight.shape[0],
                    "cols": layer.weight.shape[1],
                    "weights": [float(v) for v in layer.weight.ravel()],
                    "bias": [float(v) for v in layer.bias],
                    "activation": layer.activation,
                    "concat_input": layer.concat_input,
                }
                for layer in self.layers
            ],
            "outputs": self.outputs,
        }

    @classmethod
    def load(cls, path):
        with open(path, "r") as f:
            return cls.from_dict(json.load(f))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)


def _softplus(x):
    # overflow-safe: log(1+e^x) = max(x,0) + log1p(e^-|x|)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def mlp_forward(weights, x):
    """Run the network on one input vector; returns the output vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (weights.input_dim,):
        raise ValueError("input shape %r, network wants (%d,)" % (x.shape, weights.input_dim))
    h = x
    for layer in weights.layers:
        v = np.concatenate([h, x]) if layer.concat_input else h
        h = layer.weight @ v + layer.bias
        if layer.activation == "relu":
            h = np.maximum(h, 0.0)
        elif layer.activation == "tanh":
            h = np.tanh(h)
        elif layer.activation == "softplus":
            h = _softplus(h)
    return h


class NeuralField(ScalarField):
    """Field evaluated by a loaded network.

    The network maps a point (input_dim 3), or a point plus a query
    direction (input_dim 6), to an output vector; the weights' output map
    names the signed-distance slot and optionally a directional-curvature
    slot.  Gradients come from central differences.
    """

    def __init__(self, weights):
        if weights.input_dim not in (3, 6):
            raise ValueError("field network input_dim must be 3 or 6")
        if "sdf" not in weights.outputs or weights.outputs["sdf"] is None:
            raise ValueError("weights declare no sdf output")
        sdf_idx = int(weights.outputs["sdf"])
        if not 0 <= sdf_idx < weights.output_dim:
            raise ValueError("sdf output index out of range")
        self.weights = weights
        self.sdf_index = sdf_idx
        cur = weights.outputs.get("curvature")
        self.curvature_index = None if cur is None else int(cur)
        if self.curvature_index is not None and weights.input_dim != 6:
            raise ValueError("curvature output needs a (point, direction) network")

    def _input(self, p, d=None):
        x = np.zeros(self.weights.input_dim)
        x[:3] = _vec3(p)
        if d is not None:
            x[3:6] = _vec3(d)
        return x

    def eval(self, p):
        return float(mlp_forward(self.weights, self._input(p))[self.sdf_index])

    def query_curvature(self, q, direction):
        """Directional curvature straight from the network head."""
        if self.curvature_index is None:
            raise ValueError("network has no curvature output")
        out = mlp_forward(self.weights, self._input(q, direction))
        return float(out[self.curvature_index])


def load_mlp_field(path):
    """Load a weights file into a field."""
    return NeuralField(MlpWeights.load(path))


# ----------------------------------------------------------- query wrapper


class CountedField(ScalarField):
    """Pass-through wrapper tallying queries into a QueryCounter.

    Returned values are bit-identical to the wrapped field's.
    """

    def __init__(self, inner, counter=None):
        self.inner = inner
        self.counter = QueryCounter() if counter is None else counter

    @property
    def has_analytic_gradient(self):
        return self.inner.has_analytic_gradient

    def eval(self, p):
        self.counter.add(sdf=1)
        return self.inner.eval(p)

    def eval_batch(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        self.counter.add(sdf=len(pts))
        return self.inner.eval_batch(pts)

    def gradient(self, p, return_degenerate=False):
        self.counter.add(gradient=1)
        if self.inner.has_analytic_gradient:
            return self.inner.gradient(p, return_degenerate)
        # finite differences through self so the six evals are counted
        g = _fd_gradient(self, p)
        if return_degenerate:
            return g, bool(g @ g < 1e-24)
        return g


def _program(field):
    """(ops, consts) when the field bottoms out in a compiled program."""
    if isinstance(field, CountedField):
        field = field.inner
    if isinstance(field, AnalyticField):
        return field.ops, field.consts
    return None


def _counter(field):
    return getattr(field, "counter", None)


# ------------------------------------------------------- surface projection


def project_to_surface(field, p, max_iters=PROJECT_MAX_ITERS, eps=EPS_SURFACE):
    """Pull a point onto the zero set by Newton steps along the gradient.

    Returns (point, converged); converged means |eval| < eps was reached
    within the iteration budget.  A vanishing gradient aborts the walk
    with converged False.
    """
    pt, _, conv = project_with_gradient(field, p, max_iters, eps)
    return pt, conv


def project_with_gradient(field, p, max_iters=PROJECT_MAX_ITERS, eps=EPS_SURFACE):
    """Projection that also returns the gradient at the result.

    The gradient is the one from the last Newton step (for a true distance
    field the gradient is constant along the step ray, so it is exact at
    the returned point); when convergence happens before any step, one
    extra gradient query is made.
    """
    p = _vec3(p)
    prog = _program(field)
    if prog is not None:
        ops, consts = prog
        x, y, z, gx, gy, gz, conv, ns, ng, _deg = kernels.project(
            ops, consts, p[0], p[1], p[2], eps, max_iters
        )
        ctr = _counter(field)
        if ctr is not None:
            ctr.add(sdf=ns, gradient=ng)
        return np.array([x, y, z]), np.array([gx, gy, gz]), bool(conv)
    return _project_generic(field, p, max_iters, eps)


def _project_generic(field, p, max_iters, eps):
    p = np.array(p, dtype=np.float64)
    g = None
    conv = False
    for _ in range(max_iters):
        s = field.eval(p)
        if abs(s) < eps:
            conv = True
            break
        g = np.asarray(field.gradient(p), dtype=np.float64)
        L2 = g @ g
        if not np.isfinite(L2) or L2 < 1e-24:
            return p, g, False
        p = p - (s / math.sqrt(L2)) * g
    if conv and g is None:
        g = np.asarray(field.gradient(p), dtype=np.float64)
        if g @ g < 1e-24:
            return p, g, False
    if g is None:
        g = np.zeros(3)
    return p, g, conv


# ------------------------------------------------------ turning angle walk


def directional_curvature(field, q, direction, l=WALK_LENGTH):
    """Turning angle after a geodesic walk of length l from q along direction.

    Walks in WALK_SUBSTEPS sub-steps: advance along the current tangent,
    re-project to the surface, then remove the new normal component from
    the direction.  The result is arccos(d_final . n_start) - pi/2:
    zero on a plane, positive where the surface bends away from the
    starting normal (l/R on a sphere), negative where it bends toward it.

    Raises CurvatureWalkError if a projection fails mid-walk.
    """
    q = _vec3(q)
    d = _vec3(direction)
    ctr = _counter(field)
    prog = _program(field)
    if prog is not None:
        ops, consts = prog
        kappa, ok, ns, ng, steps = kernels.curvature(
            ops, consts, q[0], q[1], q[2], d[0], d[1], d[2],
            l, WALK_SUBSTEPS, EPS_SURFACE, PROJECT_MAX_ITERS,
        )
        if ctr is not None:
            ctr.add(sdf=ns, gradient=ng, curvature=1)
        if not ok:
            raise CurvatureWalkError(steps * (l / WALK_SUBSTEPS), l)
        return kappa
    inner = field.inner if isinstance(field, CountedField) else field
    if isinstance(inner, NeuralField) and inner.curvature_index is not None:
        if ctr is not None:
            ctr.add(curvature=1)
        return inner.query_curvature(q, d)
    if ctr is not None:
        ctr.add(curvature=1)  # internal evals count through the wrapper
    return _walk_generic(field, q, d, l)


def _walk_generic(field, q, d, l):
    n1 = np.asarray(field.gradient(q), dtype=np.float64)
    L = math.sqrt(n1 @ n1)
    if L * L < 1e-24:
        raise CurvatureWalkError(0.0, l)
    n1 = n1 / L
    d = d - (d @ n1) * n1
    L = math.sqrt(d @ d)
    if L < 1e-9:
        raise CurvatureWalkError(0.0, l)
    d = d / L
    step = l / WALK_SUBSTEPS
    p = q.copy()
    for i in range(WALK_SUBSTEPS):
        p = p + step * d
        p, g, conv = _project_generic(field, p, PROJECT_MAX_ITERS, EPS_SURFACE)
        L2 = g @ g
        if not conv or L2 < 1e-24:
            raise CurvatureWalkError(i * step, l)
        n = g / math.sqrt(L2)
        d = d - (d @ n) * n
        L = math.sqrt(d @ d)
        if L < 1e-9:
            raise CurvatureWalkError(i * step, l)
        d = d / L
    c = d @ n1
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return math.acos(c) - math.pi / 2.0


# ------------------------------------------------------------- scene files


def field_from_scene(node, base_dir="."):
    """Build a field from a scene tree node (parsed JSON)."""
    if not isinstance(node, dict) or "type" not in node:
        raise ValueError("scene node must be an object with a 'type'")
    t = node["type"]
    if t == "sphere":
        return Sphere(node.get("center", (0, 0, 0)), node["radius"])
    if t == "box":
        return Box(node.get("center", (0, 0, 0)), node["half_extents"])
    if t == "torus":
        return Torus(node.get("center", (0, 0, 0)), node["major_radius"], node["minor_radius"])
    if t == "plane":
        return Plane(node.get("point", (0, 0, 0)), node.get("normal", (0, 0, 1)))
    if t == "union":
        return Union(*[field_from_scene(ch, base_dir) for ch in node["children"]])
    if t == "intersection":
        return Intersection(*[field_from_scene(ch, base_dir) for ch in node["children"]])
    if t == "smooth_union":
        kids = [field_from_scene(ch, base_dir) for ch in node["children"]]
        return SmoothUnion(*kids, blend=node.get("blend", 0.1))
    if t == "translate_scale":
        return TranslatedScaled(
            field_from_scene(node["child"], base_dir),
            node.get("offset", (0, 0, 0)),
            node.get("scale", 1.0),
        )
    if t == "mlp":
        return load_mlp_field(os.path.join(base_dir, node["path"]))
    raise ValueError("unknown scene node type %r" % (t,))


def load_scene(path):
    """Load a scene file; returns (field, bbox) with bbox as a (2, 3) array.

    A file with a top-level "layers" key is taken to be a network weights
    file and loads as a neural field directly.
    """
    with open(path, "r") as f:
        doc = json.load(f)
    if "field" in doc:
        field = field_from_scene(doc["field"], os.path.dirname(path) or ".")
    elif "layers" in doc:
        field = NeuralField(MlpWeights.from_dict(doc))
    else:
        raise ValueError("scene file missing 'field'")
    bbox = np.asarray(doc.get("bbox", [[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]]), dtype=np.float64)
    if bbox.shape != (2, 3) or np.any(bbox[1] <= bbox[0]):
        raise ValueError("scene bbox must be [[min], [max]] with max > min")
    return field, bbox
