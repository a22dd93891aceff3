"""Exact k-d tree over vertex positions.

Supports incremental insertion (the mesh only grows), radius queries, and
nearest-neighbor queries, both exact.  Ties at exactly the query radius
are inliers.  The tree rebuilds itself balanced whenever an insertion
drives the depth past 2*log2(n) + 8.
"""

import math


class _Node:
    __slots__ = ("x", "y", "z", "vid", "left", "right")

    def __init__(self, x, y, z, vid):
        self.x = x
        self.y = y
        self.z = z
        self.vid = vid
        self.left = None
        self.right = None


def _coord(node, axis):
    if axis == 0:
        return node.x
    if axis == 1:
        return node.y
    return node.z


class VertexKdTree:
    def __init__(self):
        self.root = None
        self._records = []  # (x, y, z, vid), source of truth for rebuilds

    def __len__(self):
        return len(self._records)

    def insert(self, position, vid):
        """Add one point; vid is returned by queries."""
        x = float(position[0])
        y = float(position[1])
        z = float(position[2])
        self._records.append((x, y, z, vid))
        node = _Node(x, y, z, vid)
        if self.root is None:
            self.root = node
            return
        cur = self.root
        axis = 0
        depth = 1
        key = (x, y, z)
        while True:
            if key[axis] < _coord(cur, axis):
                if cur.left is None:
                    cur.left = node
                    break
                cur = cur.left
            else:
                if cur.right is None:
                    cur.right = node
                    break
                cur = cur.right
            axis = axis + 1 if axis < 2 else 0
            depth += 1
        if depth > 2.0 * math.log2(len(self._records)) + 8.0:
            self.root = self._build(list(self._records), 0)

    def _build(self, records, axis):
        if not records:
            return None
        records.sort(key=lambda r: (r[axis], r[3]))
        mid = len(records) // 2
        x, y, z, vid = records[mid]
        node = _Node(x, y, z, vid)
        nxt = axis + 1 if axis < 2 else 0
        node.left = self._build(records[:mid], nxt)
        node.right = self._build(records[mid + 1 :], nxt)
        return node

    def radius_query(self, center, r):
        """Vertex ids with |p - center| <= r, ascending by id."""
        if r < 0.0:
            raise ValueError("radius must be non-negative")
        if self.root is None:
            return []
        cx = float(center[0])
        cy = float(center[1])
        cz = float(center[2])
        c = (cx, cy, cz)
        r2 = r * r
        out = []
        stack = [(self.root, 0)]
        while stack:
            node, axis = stack.pop()
            dx = node.x - cx
            dy = node.y - cy
            dz = node.z - cz
            if dx * dx + dy * dy + dz * dz <= r2:
                out.append(node.vid)
            v = _coord(node, axis)
            nxt = axis + 1 if axis < 2 else 0
            if node.left is not None and c[axis] - r <= v:
                stack.append((node.left, nxt))
            if node.right is not None and c[axis] + r >= v:
                stack.append((node.right, nxt))
        out.sort()
        return out

    def nearest(self, center):
        """(vid, distance) of the closest point, or None when empty.

        Exact distance ties resolve to the smaller id.
        """
        if self.root is None:
            return None
        cx = float(center[0])
        cy = float(center[1])
        cz = float(center[2])
        c = (cx, cy, cz)
        best = [math.inf, -1]

        def visit(node, axis):
            dx = node.x - cx
            dy = node.y - cy
            dz = node.z - cz
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < best[0] or (d2 == best[0] and node.vid < best[1]):
                best[0] = d2
                best[1] = node.vid
            v = _coord(node, axis)
            nxt = axis + 1 if axis < 2 else 0
            delta = c[axis] - v
            near, far = (node.left, node.right) if delta < 0.0 else (node.right, node.left)
            if near is not None:
                visit(near, nxt)
            if far is not None and delta * delta <= best[0]:
                visit(far, nxt)

        visit(self.root, 0)
        return best[1], math.sqrt(best[0])
