"""Triangle overlap predicates and merge-vertex selection.

A candidate triangle (the two endpoints of a boundary edge plus a
predicted apex) is screened against nearby existing faces.  The checks
run in a fixed order and the first hit names the verdict kind:

1. vertex_in_triangle: the apex lies within t_near of an existing face.
2. triangle_contained: an existing face's vertex lies within the candidate.
3. edge_intersection: two non-adjacent edges pass within t_near.
4. parallel_proximity: either centroid lies within the other triangle's
   proximity slab; only tested between faces sharing no vertex, since
   faces that share an edge or corner always touch.
5. vertex_proximity: the apex is within t_near of an unshared vertex.

Vertices shared between the candidate and an existing face (edge
endpoints, or the merge target itself) are excluded from the point and
edge checks via a 3x3 match matrix, so adjacency never reads as overlap.
"""

from collections import namedtuple

import numpy as np

from . import _kernels as kernels
from .halfedge import DegenerateTriangleError, _area2

KIND_NAMES = (
    "none",
    "vertex_in_triangle",
    "triangle_contained",
    "edge_intersection",
    "parallel_proximity",
    "vertex_proximity",
)

OverlapVerdict = namedtuple("OverlapVerdict", ["overlapping", "kind"])


class OverlapParams:
    """Geometric thresholds; t_near and t_v default to r_d / 2."""

    def __init__(self, r_d, t_near=None, t_v=None):
        self.r_d = float(r_d)
        self.t_near = self.r_d / 2.0 if t_near is None else float(t_near)
        self.t_v = self.r_d / 2.0 if t_v is None else float(t_v)
        if self.r_d <= 0.0 or self.t_near <= 0.0 or self.t_v <= 0.0:
            raise ValueError("overlap thresholds must be positive")


def _pts3(x):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.shape != (3, 3):
        raise ValueError("expected 3 points, got shape %r" % (a.shape,))
    return a


def _vec(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def point_in_triangle_proximity(p, tri, t_near):
    """True when p is within the t_near proximity slab of the triangle."""
    r = kernels.pit_one(_vec(p), _pts3(tri), float(t_near))
    if r < 0:
        raise DegenerateTriangleError("proximity test against a degenerate triangle")
    return bool(r)


def segment_intersection(e1, e2, t_near):
    """True when the segments pass within t_near of each other.

    Solves for the mutual perpendicular foot points and requires both to
    fall inside their segments; parallel segments fall back to clamped
    endpoint distances.
    """
    p1, q1 = e1
    p2, q2 = e2
    r = kernels.seg_one(_vec(p1), _vec(q1), _vec(p2), _vec(q2), float(t_near))
    if r < 0:
        raise ValueError("segment of zero length")
    return bool(r)


def local_face_set(mesh, index, center, r_d):
    """Faces with at least one vertex within 2*r_d of center."""
    out = set()
    for vid in index.radius_query(center, 2.0 * r_d):
        out |= mesh.vertex_faces[vid]
    return out


def _match_matrix(cand_vids, face_vids):
    m = np.zeros((3, 3), dtype=np.uint8)
    for i in range(3):
        ci = cand_vids[i]
        if ci is None:
            continue
        for j in range(3):
            if ci == face_vids[j]:
                m[i, j] = 1
    return m


def triangle_overlap(candidate, face_points, params, match=None):
    """Verdict for one candidate against one existing face.

    candidate rows are (edge origin, edge destination, apex); the apex
    slot drives the point checks.  match is the 3x3 vertex identity
    matrix; when omitted it is derived from exact coordinate equality.
    A degenerate candidate is conservatively overlapping.
    """
    cand = _pts3(candidate)
    tri = _pts3(face_points)
    if _area2(cand[0], cand[1], cand[2]) <= 2e-12:
        return OverlapVerdict(True, "vertex_in_triangle")
    if match is None:
        match = np.zeros((3, 3), dtype=np.uint8)
        for i in range(3):
            for j in range(3):
                if np.array_equal(cand[i], tri[j]):
                    match[i, j] = 1
    else:
        match = np.ascontiguousarray(match, dtype=np.uint8)
    allow_e = 0 if match.any() else 1
    kind = kernels.overlap_one(cand, tri, match, params.t_near, allow_e)
    if kind < 0:
        raise DegenerateTriangleError("existing face is degenerate")
    return OverlapVerdict(kind != 0, KIND_NAMES[kind])


def scan_candidate(mesh, index, cand_pts, cand_vids, params):
    """First overlap of a candidate against its local face set.

    cand_vids aligns with cand_pts rows; None marks a brand-new vertex.
    Returns (kind, face id) or (None, -1) when the candidate is clear.
    """
    cand = _pts3(cand_pts)
    if _area2(cand[0], cand[1], cand[2]) <= 2e-12:
        return "vertex_in_triangle", -1
    centroid = (cand[0] + cand[1] + cand[2]) / 3.0
    faces = sorted(local_face_set(mesh, index, centroid, params.r_d))
    if not faces:
        return None, -1
    n = len(faces)
    tris = np.empty((n, 3, 3), dtype=np.float64)
    matches = np.zeros((n, 3, 3), dtype=np.uint8)
    allow = np.zeros(n, dtype=np.uint8)
    for i, f in enumerate(faces):
        fv = mesh.face_vertex_ids(f)
        tris[i] = mesh.face_points(f)
        m = _match_matrix(cand_vids, fv)
        matches[i] = m
        allow[i] = 0 if m.any() else 1
    kind, idx = kernels.overlap_scan(cand, tris, matches, allow, params.t_near)
    if kind < 0:
        raise DegenerateTriangleError("degenerate face %d in local set" % faces[idx])
    if kind == 0:
        return None, -1
    return KIND_NAMES[kind], faces[idx]


def _face_unit_normal(tri):
    n = np.cross(tri[1] - tri[0], tri[2] - tri[1])
    L = np.sqrt(n @ n)
    if L < 1e-12:
        raise DegenerateTriangleError("face normal undefined")
    return n / L


def _mirror_face_exists(mesh, o, d, v):
    want = {o, d, v}
    for f in mesh.vertex_faces[v]:
        if set(mesh.face_vertex_ids(f)) == want:
            return True
    return False


def select_existing_vertex(mesh, index, h, candidate, params):
    """Merge target for boundary edge h, or None.

    Scans vertices within 2*r_d of the edge midpoint, nearest first,
    and returns the first one that lies within t_v of the adjacent face's
    plane and whose induced triangle is overlap-free against the local
    face set.  The edge's own endpoints never qualify, and a vertex whose
    triangle would duplicate an existing face back-to-back is skipped.
    The predicted candidate point itself plays no role in the ranking;
    it is what the returned vertex replaces.
    """
    if not mesh.is_boundary(h):
        raise ValueError("halfedge %r is not a boundary edge" % (h,))
    o = mesh.origin[h]
    d = mesh.dest(h)
    a = mesh.point(o)
    b = mesh.point(d)
    m = 0.5 * (a + b)
    n = _face_unit_normal(mesh.face_points(mesh.face[h]))
    ranked = []
    for vid in index.radius_query(m, 2.0 * params.r_d):
        if vid == o or vid == d:
            continue
        dm = mesh.point(vid) - m
        ranked.append((float(dm @ dm), vid))
    ranked.sort()
    for _, vid in ranked:
        pv = mesh.point(vid)
        if abs((pv - m) @ n) >= params.t_v:
            continue
        if _mirror_face_exists(mesh, o, d, vid):
            continue
        cand = np.array([a, b, pv])
        kind, _ = scan_candidate(mesh, index, cand, (o, d, vid), params)
        if kind is None:
            return vid
    return None
