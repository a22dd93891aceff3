"""Growable half-edge triangle mesh.

Every undirected edge stores two twinned halfedges.  Interior halfedges
carry a face id and a next pointer; rim halfedges carry neither (face and
next are -1) and mark the open side of a boundary edge.  A boundary edge
is reported as the id of the interior halfedge whose twin is a rim.

Because each directed edge exists at most once, an undirected edge can
never collect more than two faces; insertions that would need a third
raise NonManifoldError before touching the mesh.

Identifiers are stable for the life of the mesh; nothing is ever deleted.
"""

import numpy as np


class NonManifoldError(RuntimeError):
    """Insertion would put a second face on the same side of an edge."""


class DegenerateTriangleError(ValueError):
    """Triangle with (near) zero area."""


_MIN_AREA = 1e-12


def _area2(p0, p1, p2):
    """Twice the triangle area."""
    c = np.cross(p1 - p0, p2 - p0)
    return float(np.sqrt(c @ c))


class HalfedgeMesh:
    def __init__(self):
        self.vertices = []  # position arrays
        self.origin = []  # per halfedge: source vertex id
        self.twin = []
        self.nxt = []  # -1 on rims
        self.face = []  # -1 on rims
        self.face_he = []  # one interior halfedge per face
        self.edge_map = {}  # (u, v) -> directed halfedge id
        self.vertex_faces = []  # per vertex: set of incident face ids

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.face_he)

    @property
    def n_edges(self):
        return len(self.twin) // 2

    def point(self, vid):
        return self.vertices[vid]

    def dest(self, h):
        return self.origin[self.twin[h]]

    def is_boundary(self, h):
        """True for an interior halfedge whose twin is a rim."""
        return self.face[h] != -1 and self.face[self.twin[h]] == -1

    def face_vertex_ids(self, f):
        h = self.face_he[f]
        h1 = self.nxt[h]
        return (self.origin[h], self.origin[h1], self.origin[self.nxt[h1]])

    def face_points(self, f):
        i, j, k = self.face_vertex_ids(f)
        return np.array([self.vertices[i], self.vertices[j], self.vertices[k]])

    def edge_between(self, u, v):
        return self.edge_map.get((u, v))

    # ------------------------------------------------------------ building

    def _add_vertex(self, p):
        self.vertices.append(np.asarray(p, dtype=np.float64).copy())
        self.vertex_faces.append(set())
        return len(self.vertices) - 1

    def _add_halfedge(self, origin, twin, nxt, face):
        self.origin.append(origin)
        self.twin.append(twin)
        self.nxt.append(nxt)
        self.face.append(face)
        return len(self.origin) - 1

    def _register(self, h):
        key = (self.origin[h], self.dest(h))
        if key in self.edge_map:
            raise NonManifoldError("duplicate directed edge %r" % (key,))
        self.edge_map[key] = h

    def add_isolated_triangle(self, p0, p1, p2):
        """New disconnected triangle from three points; returns the face id."""
        p0 = np.asarray(p0, dtype=np.float64)
        p1 = np.asarray(p1, dtype=np.float64)
        p2 = np.asarray(p2, dtype=np.float64)
        if _area2(p0, p1, p2) <= 2.0 * _MIN_AREA:
            raise DegenerateTriangleError("triangle area below threshold")
        v0 = self._add_vertex(p0)
        v1 = self._add_vertex(p1)
        v2 = self._add_vertex(p2)
        f = len(self.face_he)
        base = len(self.origin)
        # interior cycle v0->v1->v2, rims alongside
        h0 = self._add_halfedge(v0, base + 3, base + 1, f)
        h1 = self._add_halfedge(v1, base + 4, base + 2, f)
        h2 = self._add_halfedge(v2, base + 5, base + 0, f)
        self._add_halfedge(v1, h0, -1, -1)
        self._add_halfedge(v2, h1, -1, -1)
        self._add_halfedge(v0, h2, -1, -1)
        self.face_he.append(h0)
        for h in range(base, base + 6):
            self._register(h)
        for v in (v0, v1, v2):
            self.vertex_faces[v].add(f)
        return f

    def _boundary_parts(self, h):
        if not (0 <= h < len(self.origin)) or not self.is_boundary(h):
            raise ValueError("halfedge %r is not a boundary edge" % (h,))
        t = self.twin[h]
        return t, self.origin[h], self.origin[t]

    def insert_face_new_vertex(self, h, p):
        """Grow a face from boundary edge h to a brand-new vertex at p.

        The new face claims the rim of h and leaves two fresh boundary
        edges; returns the face id.
        """
        t, o, d = self._boundary_parts(h)
        p = np.asarray(p, dtype=np.float64)
        if _area2(self.vertices[d], self.vertices[o], p) <= 2.0 * _MIN_AREA:
            raise DegenerateTriangleError("new vertex collinear with the edge")
        v = self._add_vertex(p)
        f = len(self.face_he)
        base = len(self.origin)
        # face cycle runs d -> o (the claimed rim), o -> v, v -> d
        e1 = self._add_halfedge(o, base + 2, base + 1, f)
        e2 = self._add_halfedge(v, base + 3, t, f)
        self._add_halfedge(v, e1, -1, -1)
        self._add_halfedge(d, e2, -1, -1)
        self.face[t] = f
        self.nxt[t] = e1
        self.face_he.append(t)
        for hh in range(base, base + 4):
            self._register(hh)
        for vv in (o, d, v):
            self.vertex_faces[vv].add(f)
        return f

    def insert_face_existing_vertex(self, h, vid):
        """Grow a face from boundary edge h to the existing vertex vid.

        Claims the rim of h plus any pre-existing rims toward vid
        (ear-closing); raises NonManifoldError, leaving the mesh untouched,
        when either connecting edge already has a face on the needed side.
        """
        t, o, d = self._boundary_parts(h)
        if vid == o or vid == d:
            raise ValueError("vertex %d is an endpoint of the edge" % vid)
        if not 0 <= vid < len(self.vertices):
            raise ValueError("no vertex %r" % (vid,))
        if _area2(self.vertices[d], self.vertices[o], self.vertices[vid]) <= 2.0 * _MIN_AREA:
            raise DegenerateTriangleError("face would be degenerate")
        he_ov = self.edge_map.get((o, vid))
        he_vd = self.edge_map.get((vid, d))
        if he_ov is not None and self.face[he_ov] != -1:
            raise NonManifoldError("edge %d-%d occupied in direction o->v" % (o, vid))
        if he_vd is not None and self.face[he_vd] != -1:
            raise NonManifoldError("edge %d-%d occupied in direction v->d" % (vid, d))
        f = len(self.face_he)
        created = []
        if he_ov is None:
            base = len(self.origin)
            he_ov = self._add_halfedge(o, base + 1, -1, f)
            self._add_halfedge(vid, he_ov, -1, -1)
            created.extend((base, base + 1))
        if he_vd is None:
            base = len(self.origin)
            he_vd = self._add_halfedge(vid, base + 1, -1, f)
            self._add_halfedge(d, he_vd, -1, -1)
            created.extend((base, base + 1))
        for hh in created:
            self._register(hh)
        # face cycle d -> o -> v -> d
        self.face[t] = f
        self.nxt[t] = he_ov
        self.face[he_ov] = f
        self.nxt[he_ov] = he_vd
        self.face[he_vd] = f
        self.nxt[he_vd] = t
        self.face_he.append(t)
        for vv in (o, d, vid):
            self.vertex_faces[vv].add(f)
        return f

    # ----------------------------------------------------------- boundary

    def hole_apex(self, h):
        """Vertex that would close a triangular hole at boundary edge h.

        Returns the third rim vertex when the hole bordering h is exactly
        a triangle, None otherwise.  A vertex forming a face with both
        endpoints already does not count: closing it again would fold the
        mesh into a two-faced pillow.
        """
        t, o, d = self._boundary_parts(h)
        for f in tuple(self.vertex_faces[d]):
            for y in self.face_vertex_ids(f):
                if y == o or y == d:
                    continue
                hy = self.edge_map.get((d, y))
                hz = self.edge_map.get((y, o))
                if hy is None or hz is None:
                    continue
                if not (self.is_boundary(hy) and self.is_boundary(hz)):
                    continue
                if self.vertex_faces[o] & self.vertex_faces[d] & self.vertex_faces[y]:
                    continue
                return y
        return None

    def boundary_edges(self):
        """Ids of interior halfedges whose twin is a rim, ascending."""
        return [h for h in range(len(self.origin)) if self.is_boundary(h)]

    def boundary_loops(self):
        """Boundary edge ids grouped into closed loops.

        Each loop lists interior halfedge ids in rim-walk order; at a
        vertex shared by several loops the smallest rim id continues the
        walk, which makes the grouping deterministic.
        """
        rims_at = {}
        rims = []
        for h in range(len(self.origin)):
            if self.face[h] == -1:
                rims.append(h)
                rims_at.setdefault(self.origin[h], []).append(h)
        visited = set()
        loops = []
        for start in rims:
            if start in visited:
                continue
            loop = []
            cur = start
            while True:
                visited.add(cur)
                loop.append(self.twin[cur])
                nv = self.dest(cur)
                nxt = None
                for cand in rims_at.get(nv, ()):
                    if cand == start or cand not in visited:
                        nxt = cand
                        break
                if nxt is None:
                    raise RuntimeError("boundary walk dead-ends at vertex %d" % nv)
                if nxt == start:
                    break
                cur = nxt
            loops.append(loop)
        return loops

    # --------------------------------------------------------- validation

    def validate(self):
        """Structural check; returns a list of violation strings."""
        out = []
        nh = len(self.origin)
        bad = set()
        seen = set()
        for h in range(nh):
            t = self.twin[h]
            if not (0 <= t < nh) or t == h or self.twin[t] != h:
                bad.add(h)
                key = min(h, t) if 0 <= t < nh else h
                if key not in seen:
                    seen.add(key)
                    out.append("broken twin pairing at halfedge %d" % h)
        for h in range(nh):
            if (self.face[h] == -1) != (self.nxt[h] == -1):
                out.append("rim flags disagree at halfedge %d" % h)
        checked_faces = []
        for f in range(len(self.face_he)):
            base = self.face_he[f]
            if not (0 <= base < nh) or base in bad:
                continue
            h1 = self.nxt[base]
            h2 = self.nxt[h1] if 0 <= h1 < nh else -1
            cyc = (base, h1, h2)
            if -1 in cyc:
                out.append("face %d cycle leaves the mesh" % f)
                continue
            if h1 in bad or h2 in bad:
                continue
            if self.nxt[h2] != base:
                out.append("face %d does not close in three halfedges" % f)
                continue
            ok = True
            for h in cyc:
                if self.face[h] != f:
                    out.append("halfedge %d of face %d carries face %r" % (h, f, self.face[h]))
                    ok = False
                elif self.origin[self.nxt[h]] != self.dest(h):
                    out.append("face %d chain breaks at halfedge %d" % (f, h))
                    ok = False
            if not ok:
                continue
            ids = (self.origin[base], self.origin[h1], self.origin[h2])
            if len(set(ids)) < 3:
                out.append("face %d repeats a vertex" % f)
                continue
            checked_faces.append(f)
        for h in range(nh):
            if h in bad:
                continue
            u, w = self.origin[h], self.dest(h)
            if u == w:
                out.append("halfedge %d is a self-loop" % h)
            elif self.edge_map.get((u, w)) != h:
                out.append("edge map mismatch at halfedge %d" % h)
        if not bad and len(self.edge_map) != nh:
            out.append("edge map holds %d entries for %d halfedges" % (len(self.edge_map), nh))
        for f in checked_faces:
            for v in self.face_vertex_ids(f):
                if f not in self.vertex_faces[v]:
                    out.append("vertex %d missing incidence of face %d" % (v, f))
        return out

    # ------------------------------------------------------------- export

    def to_indexed_triangles(self):
        """Snapshot as (positions (n,3) array, faces (m,3) int array)."""
        pos = np.array(self.vertices, dtype=np.float64).reshape(len(self.vertices), 3)
        faces = np.array(
            [self.face_vertex_ids(f) for f in range(len(self.face_he))],
            dtype=np.int64,
        ).reshape(len(self.face_he), 3)
        return pos, faces

    @classmethod
    def from_indexed(cls, positions, faces):
        """Build connectivity from a triangle soup.

        Raises NonManifoldError when a directed edge repeats (same
        undirected edge used twice with the same winding).
        """
        m = cls()
        for p in np.asarray(positions, dtype=np.float64).reshape(-1, 3):
            m._add_vertex(p)
        nv = m.n_vertices
        for tri in faces:
            i, j, k = (int(tri[0]), int(tri[1]), int(tri[2]))
            if len({i, j, k}) < 3:
                raise ValueError("face repeats a vertex: %r" % (tri,))
            if not all(0 <= v < nv for v in (i, j, k)):
                raise ValueError("face references missing vertex: %r" % (tri,))
            f = len(m.face_he)
            base = len(m.origin)
            m._add_halfedge(i, -1, base + 1, f)
            m._add_halfedge(j, -1, base + 2, f)
            m._add_halfedge(k, -1, base + 0, f)
            m.face_he.append(base)
            for v in (i, j, k):
                m.vertex_faces[v].add(f)
        directed = {}
        for h in range(len(m.origin)):
            key = (m.origin[h], m.origin[m.nxt[h]])
            if key in directed:
                raise NonManifoldError("directed edge %r appears twice" % (key,))
            directed[key] = h
        for h in range(len(m.origin)):
            if m.twin[h] != -1:
                continue
            u, w = m.origin[h], m.origin[m.nxt[h]]
            other = directed.get((w, u))
            if other is None:
                other = m._add_halfedge(w, h, -1, -1)
                directed[(w, u)] = other
            m.twin[h] = other
            m.twin[other] = h
        m.edge_map = directed
        return m
