"""Uniform-grid marching cubes over a scalar field.

The 256-entry case table is generated at import time instead of being
copied in: for every sign pattern, each cube face is cut by marching
squares, the directed face segments are chained into closed loops on the
cube surface, and the loops are fan-triangulated.  Ambiguous faces (two
diagonal corners inside) are resolved by isolating the positive corners,
which keeps the choice consistent between the two cells sharing a face
and so guarantees crack-free, manifold-edge output.

Conventions: a corner is inside when its value is < 0; corner i sits at
(i & 1, (i >> 1) & 1, (i >> 2) & 1); triangle normals point toward
positive values.  Edge crossings are placed by linear interpolation
t = vA / (vA - vB) and shared between cells through per-axis index grids,
so welding is exact and the sample budget is exactly (res + 1)^3.
"""

import math

import numpy as np

_CORNER_OFFSETS = [(i & 1, (i >> 1) & 1, (i >> 2) & 1) for i in range(8)]

# cube edges, lower corner first: x pairs, then y, then z
_EDGE_PAIRS = []
for _axis in (0, 1, 2):
    _bit = 1 << _axis
    for _c in range(8):
        if not _c & _bit:
            _EDGE_PAIRS.append((_c, _c | _bit))

_EDGE_ID = {}
for _i, (_a, _b) in enumerate(_EDGE_PAIRS):
    _EDGE_ID[(_a, _b)] = _i
    _EDGE_ID[(_b, _a)] = _i

# (axis, lower-corner offsets) per edge, for indexing the crossing grids
_EDGE_INFO = [(_i // 4, _CORNER_OFFSETS[_a]) for _i, (_a, _b) in enumerate(_EDGE_PAIRS)]


def _corner_point(c):
    return np.array(_CORNER_OFFSETS[c], dtype=np.float64)


def _edge_midpoint(e):
    a, b = _EDGE_PAIRS[e]
    return 0.5 * (_corner_point(a) + _corner_point(b))


def _face_segments(mask, axis, side):
    """Directed crossing segments of one cube face.

    Direction rule: for segment A -> B with outward face normal n, the
    vector n x (B - A) points into the positive region.  The ambiguous
    two-crossing-pair case isolates the positive corners.
    """
    nf = np.zeros(3)
    nf[axis] = 1.0 if side else -1.0
    corners = [c for c in range(8) if (c >> axis) & 1 == side]
    inside = {c: bool((mask >> c) & 1) for c in corners}
    edges = []
    for i, a in enumerate(corners):
        for b in corners[i + 1:]:
            if bin(a ^ b).count("1") == 1:
                edges.append((a, b))
    crossings = [(a, b) for a, b in edges if inside[a] != inside[b]]
    if not crossings:
        return []
    if len(crossings) == 2:
        ea = _EDGE_ID[crossings[0]]
        eb = _EDGE_ID[crossings[1]]
        A = _edge_midpoint(ea)
        B = _edge_midpoint(eb)
        w = np.cross(nf, B - A)
        ok = True
        for c in corners:
            s = (_corner_point(c) - A) @ w
            if (s < 0.0) != inside[c]:
                ok = False
                break
        return [(ea, eb)] if ok else [(eb, ea)]
    # ambiguous: two diagonal positive corners, each gets its own cut
    segs = []
    for c in corners:
        if inside[c]:
            continue
        incident = [_EDGE_ID[(a, b)] for a, b in crossings if c in (a, b)]
        if len(incident) != 2:
            continue
        ea, eb = incident
        A = _edge_midpoint(ea)
        B = _edge_midpoint(eb)
        w = np.cross(nf, B - A)
        if (_corner_point(c) - A) @ w > 0.0:
            segs.append((ea, eb))
        else:
            segs.append((eb, ea))
    return segs


def _case_triangles(mask):
    nxt = {}
    for axis in (0, 1, 2):
        for side in (0, 1):
            for a, b in _face_segments(mask, axis, side):
                if a in nxt:
                    raise AssertionError("case %d: edge %d leaves twice" % (mask, a))
                nxt[a] = b
    tris = []
    while nxt:
        start = min(nxt)
        loop = []
        cur = start
        while True:
            loop.append(cur)
            cur = nxt.pop(cur)
            if cur == start:
                break
            if cur not in nxt:
                raise AssertionError("case %d: open loop at edge %d" % (mask, cur))
        if len(loop) < 3:
            raise AssertionError("case %d: loop of %d" % (mask, len(loop)))
        for i in range(1, len(loop) - 1):
            tris.append((loop[0], loop[i], loop[i + 1]))
    return tuple(tris)


def _build_table():
    return tuple(_case_triangles(mask) for mask in range(256))


CASE_TABLE = _build_table()


class GridSpec:
    """Axis-aligned sampling grid: resolution cells per axis over bbox."""

    def __init__(self, bbox, resolution):
        self.bbox = np.asarray(bbox, dtype=np.float64)
        if self.bbox.shape != (2, 3) or np.any(self.bbox[1] <= self.bbox[0]):
            raise ValueError("bbox must be (2, 3) with max > min")
        self.resolution = int(resolution)
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")

    @property
    def n_samples(self):
        return (self.resolution + 1) ** 3

    def axes(self):
        r = self.resolution + 1
        return [np.linspace(self.bbox[0][k], self.bbox[1][k], r) for k in range(3)]


def matched_resolution(bbox, r_d):
    """Grid resolution whose cell diagonal tracks a triangle of size r_d."""
    bbox = np.asarray(bbox, dtype=np.float64)
    extent = float(np.max(bbox[1] - bbox[0]))
    return max(1, int(math.ceil(extent / (r_d * math.sqrt(3.0)))))


def extract(field, spec):
    """Triangulate the zero set; returns (positions (n,3), faces (m,3)).

    Issues exactly (resolution + 1)^3 field samples in one batch.
    """
    res = spec.resolution
    r1 = res + 1
    ax, ay, az = spec.axes()
    pts = np.empty((r1, r1, r1, 3), dtype=np.float64)
    pts[..., 0] = ax[:, None, None]
    pts[..., 1] = ay[None, :, None]
    pts[..., 2] = az[None, None, :]
    vals = field.eval_batch(pts.reshape(-1, 3)).reshape(r1, r1, r1)
    inside = vals < 0.0

    positions = []
    vid_grids = []
    base = 0
    for axis in (0, 1, 2):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, r1 - 1)
        hi[axis] = slice(1, r1)
        lo, hi = tuple(lo), tuple(hi)
        cross = inside[lo] != inside[hi]
        vid = np.full(cross.shape, -1, dtype=np.int64)
        idx = np.nonzero(cross)
        n_cross = idx[0].size
        vid[idx] = base + np.arange(n_cross)
        base += n_cross
        va = vals[lo][idx]
        vb = vals[hi][idx]
        t = va / (va - vb)
        p = np.empty((n_cross, 3), dtype=np.float64)
        p[:, 0] = ax[idx[0]]
        p[:, 1] = ay[idx[1]]
        p[:, 2] = az[idx[2]]
        axes_full = (ax, ay, az)[axis]
        p[:, axis] = axes_full[idx[axis]] + t * (axes_full[idx[axis] + 1] - axes_full[idx[axis]])
        positions.append(p)
        vid_grids.append(vid)

    positions = (np.concatenate(positions, axis=0) if base
                 else np.zeros((0, 3), dtype=np.float64))

    mask = np.zeros((res, res, res), dtype=np.uint8)
    for n, (dx, dy, dz) in enumerate(_CORNER_OFFSETS):
        mask |= (inside[dx:dx + res, dy:dy + res, dz:dz + res].astype(np.uint8) << n)
    active = np.argwhere((mask != 0) & (mask != 255))

    faces = []
    for i, j, k in active:
        case = CASE_TABLE[mask[i, j, k]]
        for tri in case:
            ids = []
            for e in tri:
                axis, (dx, dy, dz) = _EDGE_INFO[e]
                ids.append(vid_grids[axis][i + dx, j + dy, k + dz])
            faces.append(ids)
    faces = (np.asarray(faces, dtype=np.int64) if faces
             else np.zeros((0, 3), dtype=np.int64))
    return positions, faces
