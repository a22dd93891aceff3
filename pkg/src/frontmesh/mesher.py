"""Advancing-front meshing of a signed-distance field.

Seed triangles are dropped on the zero set, then boundary edges are
processed in batches: predict a new vertex for each edge, project it to
the surface, and either merge with a nearby existing vertex or insert a
new face, provided the triangle overlaps nothing.  Rejected edges retry a
couple of times and then freeze as permanent boundary.  The run ends when
no active boundary edges remain.

Batches keep edge midpoints at least 3 * r_d apart so predictions cannot
collide; prediction runs in parallel against the immutable mesh snapshot
and all mutation is applied serially afterward, which makes runs
deterministic for a fixed seed regardless of thread count.
"""

import math
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .fields import (
    CountedField,
    CurvatureWalkError,
    QueryCounter,
    project_to_surface,
    project_with_gradient,
)
from .halfedge import DegenerateTriangleError, HalfedgeMesh, NonManifoldError
from .kdtree import VertexKdTree
from .overlap import OverlapParams, scan_candidate, select_existing_vertex
from .predictor import AnalyticPredictor, apply_prediction, build_frame


class MeshingParams:
    """Run parameters; separations default to 3 * r_d.

    Parameters
    ----------
    r_d : float
        Circumradius of the default triangle; the resolution knob.
    seeds : int
        Target number of seed triangles.
    oversample : int
        Sample pool factor: oversample * seeds points are drawn.
    project_rounds : int
        Projection passes over the sample pool.
    retries : int
        Times a rejected edge is re-queued before freezing.
    max_steps : int or None
        Batch limit; None runs until no active boundary edges remain.
    threads : int
        Worker threads for the prediction phase.
    predictor : object or None
        Object with predict(field, frame, diag); defaults to the
        analytic predictor.
    """

    def __init__(self, r_d, seeds=32, oversample=10, project_rounds=5,
                 t_near=None, t_v=None, batch_sep=None, d_min=None,
                 retries=2, max_steps=None, seed=0, threads=1, predictor=None):
        self.r_d = float(r_d)
        self.seeds = int(seeds)
        self.oversample = int(oversample)
        self.project_rounds = int(project_rounds)
        if self.r_d <= 0.0:
            raise ValueError("r_d must be positive")
        if self.seeds < 1 or self.oversample < 1 or self.project_rounds < 1:
            raise ValueError("seeds, oversample, project_rounds must be >= 1")
        self.overlap = OverlapParams(self.r_d, t_near, t_v)
        self.batch_sep = 3.0 * self.r_d if batch_sep is None else float(batch_sep)
        self.d_min = 3.0 * self.r_d if d_min is None else float(d_min)
        self.retries = int(retries)
        self.max_steps = max_steps if max_steps is None else int(max_steps)
        self.seed = int(seed)
        self.threads = max(1, int(threads))
        self.predictor = predictor


class RunReport:
    """Tallies of one meshing run."""

    def __init__(self):
        self.seed_faces = 0
        self.faces_inserted = 0  # all growth faces, merge path included
        self.merges = 0
        self.rejections = {}
        self.frozen = 0
        self.boundary_edges_left = 0
        self.non_projected = 0
        self.predictor_fallbacks = 0
        self.steps = 0
        self.sdf_evals = 0
        self.gradient_evals = 0
        self.curvature_evals = 0
        self.wall_time = 0.0

    @property
    def total_queries(self):
        return self.sdf_evals + self.gradient_evals + self.curvature_evals

    def to_dict(self):
        d = dict(vars(self))
        d["rejections"] = dict(self.rejections)
        d["total_queries"] = self.total_queries
        return d


def _any_perp(n):
    # unit vector orthogonal to unit n: cross with the least-aligned axis
    a = np.abs(n)
    e = np.zeros(3)
    e[int(np.argmin(a))] = 1.0
    t = np.cross(n, e)
    return t / math.sqrt(t @ t)


def initialize(field, bbox, params, rng):
    """Seed triangles on the zero set inside bbox.

    Draws oversample * seeds uniform points, projects them over several
    rounds, and greedily keeps surface hits whose triangle centroids stay
    pairwise >= d_min apart.  Each kept point gets an equilateral triangle
    of circumradius r_d on its tangent plane at a random in-plane
    rotation, wound so the face normal follows the field gradient, with
    vertices re-projected once.

    Raises RuntimeError("no surface found in bbox") when nothing converges.
    """
    bbox = np.asarray(bbox, dtype=np.float64)
    lo, hi = bbox[0], bbox[1]
    n = params.oversample * params.seeds
    pts = rng.uniform(lo, hi, (n, 3))
    pool = []
    for i in range(n):
        p = pts[i]
        conv = False
        for _ in range(params.project_rounds):
            p, conv = project_to_surface(field, p)
        if conv and np.all(p >= lo) and np.all(p <= hi):
            pool.append(p)
    if not pool:
        raise RuntimeError("no surface found in bbox")
    mesh = HalfedgeMesh()
    centers = VertexKdTree()
    for q in pool:
        g, deg = field.gradient(q, return_degenerate=True)
        L = math.sqrt(g @ g)
        if deg or L < 1e-12:
            continue
        nrm = g / L
        t1 = _any_perp(nrm)
        t2 = np.cross(nrm, t1)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        verts = []
        ok = True
        for j in range(3):
            ang = theta + j * (2.0 * math.pi / 3.0)
            v = q + params.r_d * (math.cos(ang) * t1 + math.sin(ang) * t2)
            v, conv = project_to_surface(field, v)
            if not conv:
                ok = False
                break
            verts.append(v)
        if not ok:
            continue
        centroid = (verts[0] + verts[1] + verts[2]) / 3.0
        near = centers.nearest(centroid)
        if near is not None and near[1] < params.d_min:
            continue
        try:
            mesh.add_isolated_triangle(verts[0], verts[1], verts[2])
        except DegenerateTriangleError:
            continue
        centers.insert(centroid, mesh.n_faces - 1)
        if mesh.n_faces >= params.seeds:
            break
    if mesh.n_faces == 0:
        raise RuntimeError("no surface found in bbox")
    return mesh


# ------------------------------------------------------------ batch picking


def _cell(p, s):
    return (int(math.floor(p[0] / s)), int(math.floor(p[1] / s)), int(math.floor(p[2] / s)))


def _near_any(grid, p, s):
    cx, cy, cz = _cell(p, s)
    s2 = s * s
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                for (x, y, z) in grid.get((cx + dx, cy + dy, cz + dz), ()):
                    ddx = x - p[0]
                    ddy = y - p[1]
                    ddz = z - p[2]
                    if ddx * ddx + ddy * ddy + ddz * ddz < s2:
                        return True
    return False


def _split_fifo(mesh, items, sep):
    """Greedy FIFO batch selection by midpoint separation.

    items are (halfedge, meta) pairs; entries that stopped being boundary
    edges are dropped.  Returns (accepted (h, meta, midpoint) list,
    remainder (h, meta) list in order).
    """
    grid = {}
    acc = []
    rest = []
    for h, meta in items:
        if not mesh.is_boundary(h):
            continue
        mid = 0.5 * (mesh.point(mesh.origin[h]) + mesh.point(mesh.dest(h)))
        if _near_any(grid, mid, sep):
            rest.append((h, meta))
        else:
            grid.setdefault(_cell(mid, sep), []).append((mid[0], mid[1], mid[2]))
            acc.append((h, meta, mid))
    return acc, rest


def select_batch(mesh, pending, batch_sep):
    """Boundary edges from pending, FIFO, midpoints pairwise >= batch_sep."""
    acc, _ = _split_fifo(mesh, [(h, None) for h in pending], batch_sep)
    return [h for h, _meta, _mid in acc]


# ------------------------------------------------------------------ driver


class Mesher:
    """Stateful driver: owns the mesh, the vertex index, and the queue.

    step() processes one batch; run() below loops it to completion.
    """

    def __init__(self, field, bbox, params, rng=None):
        self.params = params
        if isinstance(field, CountedField):
            self.field = field
        else:
            self.field = CountedField(field, QueryCounter())
        self.counter = self.field.counter
        self.bbox = np.asarray(bbox, dtype=np.float64)
        self.predictor = params.predictor if params.predictor is not None else AnalyticPredictor()
        if rng is None:
            rng = np.random.default_rng(params.seed)
        self.report = RunReport()
        self._counts0 = self.counter.snapshot()
        self.mesh = initialize(self.field, self.bbox, params, rng)
        self.report.seed_faces = self.mesh.n_faces
        self.index = VertexKdTree()
        for vid in range(self.mesh.n_vertices):
            self.index.insert(self.mesh.point(vid), vid)
        self.queue = deque((h, 0) for h in self.mesh.boundary_edges())
        self.frozen = {}
        self._pool = None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    # phase A: pure prediction against the frozen snapshot

    def _predict_one(self, item):
        h, _retry, _mid = item
        try:
            frame = build_frame(self.mesh, h, self.params.r_d)
        except (DegenerateTriangleError, ValueError) as exc:
            return ("freeze", "frame: %s" % exc, False)
        diag = {}
        try:
            pred = self.predictor.predict(self.field, frame, diag)
        except (CurvatureWalkError, ValueError) as exc:
            return ("freeze", "predictor: %s" % exc, False)
        fb = "fallback" in diag
        p = apply_prediction(frame, pred)
        p, _g, conv = project_with_gradient(self.field, p)
        if np.any(p < self.bbox[0]) or np.any(p > self.bbox[1]):
            return ("freeze", "candidate left the bounding box", fb)
        return ("candidate", p, conv, fb)

    # phase B: serial mutation

    def _enqueue_boundary(self, o, v, d):
        for key in ((o, v), (v, d)):
            he = self.mesh.edge_map.get(key)
            if he is not None and self.mesh.is_boundary(he):
                self.queue.append((he, 0))

    def _apply(self, h, retry, res):
        if res[-1]:
            self.report.predictor_fallbacks += 1
        if not self.mesh.is_boundary(h):
            return "stale"
        if res[0] == "freeze":
            self.frozen[h] = res[1]
            return "frozen"
        _, p, conv, _fb = res
        o = self.mesh.origin[h]
        d = self.mesh.dest(h)
        oparams = self.params.overlap
        apex = self.mesh.hole_apex(h)
        if apex is not None:
            # triangular hole: the only sensible move is its own apex,
            # which distance and coplanarity gates would often miss
            cand = np.array([self.mesh.point(o), self.mesh.point(d),
                             self.mesh.point(apex)])
            kind, _fid = scan_candidate(self.mesh, self.index, cand,
                                        (o, d, apex), oparams)
            if kind is None:
                try:
                    self.mesh.insert_face_existing_vertex(h, apex)
                except (NonManifoldError, DegenerateTriangleError):
                    pass
                else:
                    self.report.faces_inserted += 1
                    self.report.merges += 1
                    return "merged"
        vid = select_existing_vertex(self.mesh, self.index, h, p, oparams)
        if vid is not None:
            try:
                self.mesh.insert_face_existing_vertex(h, vid)
            except (NonManifoldError, DegenerateTriangleError):
                vid = None  # adjacency refused the merge; try a new vertex
            else:
                self.report.faces_inserted += 1
                self.report.merges += 1
                self._enqueue_boundary(o, vid, d)
                return "merged"
        cand = np.array([self.mesh.point(o), self.mesh.point(d), p])
        kind, _fid = scan_candidate(self.mesh, self.index, cand, (o, d, None), oparams)
        if kind is None:
            try:
                self.mesh.insert_face_new_vertex(h, p)
            except DegenerateTriangleError:
                kind = "vertex_in_triangle"
            else:
                new_vid = self.mesh.n_vertices - 1
                self.index.insert(p, new_vid)
                if not conv:
                    self.report.non_projected += 1
                self.report.faces_inserted += 1
                self._enqueue_boundary(o, new_vid, d)
                return "inserted"
        self.report.rejections[kind] = self.report.rejections.get(kind, 0) + 1
        if retry < self.params.retries:
            self.queue.append((h, retry + 1))
            return "requeued:%s" % kind
        self.frozen[h] = "overlap:%s" % kind
        return "frozen"

    def step(self):
        """Process one batch; returns (halfedge, outcome) pairs."""
        acc, rest = _split_fifo(self.mesh, list(self.queue), self.params.batch_sep)
        self.queue = deque(rest)
        if not acc:
            return []
        if self.params.threads > 1:
            if self._pool is None:
                self._pool = ThreadPoolExecutor(max_workers=self.params.threads)
            results = list(self._pool.map(self._predict_one, acc))
        else:
            results = [self._predict_one(item) for item in acc]
        outcomes = []
        for (h, retry, _mid), res in zip(acc, results):
            outcomes.append((h, self._apply(h, retry, res)))
        self.report.steps += 1
        return outcomes

    def sweep(self):
        """Give overlap-frozen edges another chance; True when any requeued.

        Fronts keep moving after an edge freezes, so a fill that was
        rejected three times can become legal once the neighbourhood
        settles.  Only overlap freezes are worth revisiting: frame,
        predictor and bounding-box failures are deterministic dead ends.
        """
        alive = [h for h, why in self.frozen.items()
                 if why.startswith("overlap:") and self.mesh.is_boundary(h)]
        if not alive:
            return False
        for h in alive:
            del self.frozen[h]
            self.queue.append((h, 0))
        return True

    def finalize(self, wall_time):
        r = self.report
        self.frozen = {h: why for h, why in self.frozen.items()
                       if self.mesh.is_boundary(h)}
        r.frozen = len(self.frozen)
        r.boundary_edges_left = len(self.mesh.boundary_edges())
        now = self.counter.snapshot()
        r.sdf_evals = now[0] - self._counts0[0]
        r.gradient_evals = now[1] - self._counts0[1]
        r.curvature_evals = now[2] - self._counts0[2]
        r.wall_time = wall_time
        return r


def run(field, bbox, params):
    """Full pipeline; returns (mesh, report).

    Loops batches until no active boundary edges remain or max_steps is
    hit.  Deterministic for fixed (field, params, seed).
    """
    t0 = time.perf_counter()
    m = Mesher(field, bbox, params)

    def budget():
        return params.max_steps is None or m.report.steps < params.max_steps

    try:
        while m.queue and budget():
            m.step()
        while budget():
            before = m.report.faces_inserted
            if not m.sweep():
                break
            while m.queue and budget():
                m.step()
            if m.report.faces_inserted == before:
                break
    finally:
        m.close()
    m.finalize(time.perf_counter() - t0)
    return m.mesh, m.report
