"""Pure-Python backend for the hot kernels.

Implements the same entry points as the compiled backend
(``frontmesh._kernels._native``): a stack interpreter for flat
signed-distance programs, Newton-style surface projection, the discrete
turning-angle walk, and the triangle overlap predicates.  The two backends
are interchangeable; the scalar code here is a literal transcription of the
C loops, so results agree bit for bit.

Program encoding: ``ops`` is an int32 array of (opcode, const_offset) pairs
and ``consts`` a float64 array of packed parameters.  Programs are postfix;
binary combinators pop two stack slots.
"""

import math

import numpy as np

OP_SPHERE = 0  # consts: cx, cy, cz, radius
OP_BOX = 1  # consts: cx, cy, cz, hx, hy, hz
OP_TORUS = 2  # consts: cx, cy, cz, major, minor (axis +z)
OP_PLANE = 3  # consts: px, py, pz, nx, ny, nz (unit normal)
OP_UNION = 4
OP_INTERSECT = 5
OP_SMOOTH_UNION = 6  # consts: blend

MAX_STACK = 64
_DEG2 = 1e-24  # squared gradient length below which a point is singular
_PARALLEL_EPS = 1e-12  # on sin^2 of the angle between segment directions


def eval_one(ops, consts, x, y, z):
    """Evaluate a compiled program at a single point."""
    stack = []
    for i in range(0, len(ops), 2):
        op = ops[i]
        c = ops[i + 1]
        if op == OP_SPHERE:
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            stack.append(math.sqrt(dx * dx + dy * dy + dz * dz) - consts[c + 3])
        elif op == OP_BOX:
            dx = abs(x - consts[c]) - consts[c + 3]
            dy = abs(y - consts[c + 1]) - consts[c + 4]
            dz = abs(z - consts[c + 2]) - consts[c + 5]
            qx = dx if dx > 0.0 else 0.0
            qy = dy if dy > 0.0 else 0.0
            qz = dz if dz > 0.0 else 0.0
            m = dx if dx > dy else dy
            if dz > m:
                m = dz
            if m > 0.0:
                m = 0.0
            stack.append(math.sqrt(qx * qx + qy * qy + qz * qz) + m)
        elif op == OP_TORUS:
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            rho = math.sqrt(dx * dx + dy * dy)
            u = rho - consts[c + 3]
            stack.append(math.sqrt(u * u + dz * dz) - consts[c + 4])
        elif op == OP_PLANE:
            stack.append(
                (x - consts[c]) * consts[c + 3]
                + (y - consts[c + 1]) * consts[c + 4]
                + (z - consts[c + 2]) * consts[c + 5]
            )
        elif op == OP_UNION:
            b = stack.pop()
            a = stack.pop()
            stack.append(a if a <= b else b)
        elif op == OP_INTERSECT:
            b = stack.pop()
            a = stack.pop()
            stack.append(a if a >= b else b)
        else:  # OP_SMOOTH_UNION
            k = consts[c]
            b = stack.pop()
            a = stack.pop()
            h = 0.5 + 0.5 * (b - a) / k
            if h < 0.0:
                h = 0.0
            elif h > 1.0:
                h = 1.0
            stack.append(b + (a - b) * h - k * h * (1.0 - h))
    return stack[-1]


def eval_batch(ops, consts, pts):
    """Vectorized program evaluation over an (n, 3) point array."""
    x = pts[:, 0]
    y = pts[:, 1]
    z = pts[:, 2]
    stack = []
    for i in range(0, len(ops), 2):
        op = ops[i]
        c = ops[i + 1]
        if op == OP_SPHERE:
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            stack.append(np.sqrt(dx * dx + dy * dy + dz * dz) - consts[c + 3])
        elif op == OP_BOX:
            dx = np.abs(x - consts[c]) - consts[c + 3]
            dy = np.abs(y - consts[c + 1]) - consts[c + 4]
            dz = np.abs(z - consts[c + 2]) - consts[c + 5]
            qx = np.maximum(dx, 0.0)
            qy = np.maximum(dy, 0.0)
            qz = np.maximum(dz, 0.0)
            m = np.minimum(np.maximum(dx, np.maximum(dy, dz)), 0.0)
            stack.append(np.sqrt(qx * qx + qy * qy + qz * qz) + m)
        elif op == OP_TORUS:
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            u = np.sqrt(dx * dx + dy * dy) - consts[c + 3]
            stack.append(np.sqrt(u * u + dz * dz) - consts[c + 4])
        elif op == OP_PLANE:
            stack.append(
                (x - consts[c]) * consts[c + 3]
                + (y - consts[c + 1]) * consts[c + 4]
                + (z - consts[c + 2]) * consts[c + 5]
            )
        elif op == OP_UNION:
            b = stack.pop()
            a = stack.pop()
            stack.append(np.minimum(a, b))
        elif op == OP_INTERSECT:
            b = stack.pop()
            a = stack.pop()
            stack.append(np.maximum(a, b))
        else:  # OP_SMOOTH_UNION
            k = consts[c]
            b = stack.pop()
            a = stack.pop()
            h = np.clip(0.5 + 0.5 * (b - a) / k, 0.0, 1.0)
            stack.append(b + (a - b) * h - k * h * (1.0 - h))
    return np.asarray(stack[-1], dtype=np.float64)


def grad_one(ops, consts, x, y, z):
    """Value and analytic gradient at a point.

    Returns (s, gx, gy, gz, degenerate).  At singular points (sphere center,
    torus core, box center, coincident union children) the gradient falls
    back to (1, 0, 0) with degenerate set.
    """
    sv = []
    gx = []
    gy = []
    gz = []
    deg = 0
    for i in range(0, len(ops), 2):
        op = ops[i]
        c = ops[i + 1]
        if op == OP_SPHERE:
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            if r * r < _DEG2:
                deg = 1
                sv.append(-consts[c + 3])
                gx.append(1.0)
                gy.append(0.0)
                gz.append(0.0)
            else:
                sv.append(r - consts[c + 3])
                gx.append(dx / r)
                gy.append(dy / r)
                gz.append(dz / r)
        elif op == OP_BOX:
            rx = x - consts[c]
            ry = y - consts[c + 1]
            rz = z - consts[c + 2]
            dx = abs(rx) - consts[c + 3]
            dy = abs(ry) - consts[c + 4]
            dz = abs(rz) - consts[c + 5]
            sx = 1.0 if rx >= 0.0 else -1.0
            sy = 1.0 if ry >= 0.0 else -1.0
            sz = 1.0 if rz >= 0.0 else -1.0
            if dx > 0.0 or dy > 0.0 or dz > 0.0:
                qx = dx if dx > 0.0 else 0.0
                qy = dy if dy > 0.0 else 0.0
                qz = dz if dz > 0.0 else 0.0
                L = math.sqrt(qx * qx + qy * qy + qz * qz)
                sv.append(L)
                gx.append(sx * qx / L)
                gy.append(sy * qy / L)
                gz.append(sz * qz / L)
            else:
                m = dx if dx > dy else dy
                if dz > m:
                    m = dz
                sv.append(m)
                if dx == m:
                    gx.append(sx)
                    gy.append(0.0)
                    gz.append(0.0)
                elif dy == m:
                    gx.append(0.0)
                    gy.append(sy)
                    gz.append(0.0)
                else:
                    gx.append(0.0)
                    gy.append(0.0)
                    gz.append(sz)
        elif op == OP_TORUS:
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            rho = math.sqrt(dx * dx + dy * dy)
            u = rho - consts[c + 3]
            L = math.sqrt(u * u + dz * dz)
            if L * L < _DEG2 or rho * rho < _DEG2:
                deg = 1
                sv.append(L - consts[c + 4])
                gx.append(1.0)
                gy.append(0.0)
                gz.append(0.0)
            else:
                sv.append(L - consts[c + 4])
                gx.append(u / L * (dx / rho))
                gy.append(u / L * (dy / rho))
                gz.append(dz / L)
        elif op == OP_PLANE:
            sv.append(
                (x - consts[c]) * consts[c + 3]
                + (y - consts[c + 1]) * consts[c + 4]
                + (z - consts[c + 2]) * consts[c + 5]
            )
            gx.append(consts[c + 3])
            gy.append(consts[c + 4])
            gz.append(consts[c + 5])
        elif op == OP_UNION or op == OP_INTERSECT:
            b = sv.pop()
            a = sv.pop()
            bx = gx.pop()
            ax = gx.pop()
            by = gy.pop()
            ay = gy.pop()
            bz = gz.pop()
            az = gz.pop()
            take_a = a <= b if op == OP_UNION else a >= b
            if take_a:
                sv.append(a)
                gx.append(ax)
                gy.append(ay)
                gz.append(az)
            else:
                sv.append(b)
                gx.append(bx)
                gy.append(by)
                gz.append(bz)
        else:  # OP_SMOOTH_UNION
            k = consts[c]
            b = sv.pop()
            a = sv.pop()
            bx = gx.pop()
            ax = gx.pop()
            by = gy.pop()
            ay = gy.pop()
            bz = gz.pop()
            az = gz.pop()
            h = 0.5 + 0.5 * (b - a) / k
            if h < 0.0:
                h = 0.0
            elif h > 1.0:
                h = 1.0
            sv.append(b + (a - b) * h - k * h * (1.0 - h))
            gx.append(ax * h + bx * (1.0 - h))
            gy.append(ay * h + by * (1.0 - h))
            gz.append(az * h + bz * (1.0 - h))
    return sv[-1], gx[-1], gy[-1], gz[-1], deg


def project(ops, consts, x, y, z, eps, max_iters):
    """Newton projection onto the zero set.

    Returns (x, y, z, gx, gy, gz, converged, n_sdf, n_grad, degenerate);
    the gradient is the one evaluated at the last pre-step point, which for
    true distance fields lies on the same normal ray as the result.
    """
    ns = 0
    ng = 0
    gx = gy = gz = 0.0
    have_g = False
    conv = 0
    for _ in range(max_iters):
        s = eval_one(ops, consts, x, y, z)
        ns += 1
        if abs(s) < eps:
            conv = 1
            break
        _, gx, gy, gz, deg = grad_one(ops, consts, x, y, z)
        ng += 1
        if deg:
            return x, y, z, gx, gy, gz, 0, ns, ng, 1
        L = math.sqrt(gx * gx + gy * gy + gz * gz)
        if L * L < _DEG2:
            return x, y, z, gx, gy, gz, 0, ns, ng, 1
        x -= s * gx / L
        y -= s * gy / L
        z -= s * gz / L
        have_g = True
    if conv and not have_g:
        _, gx, gy, gz, deg = grad_one(ops, consts, x, y, z)
        ng += 1
        if deg:
            return x, y, z, gx, gy, gz, 0, ns, ng, 1
    return x, y, z, gx, gy, gz, conv, ns, ng, 0


def curvature(ops, consts, qx, qy, qz, dx, dy, dz, l, substeps, eps, max_iters):
    """Turning angle after a discrete geodesic walk of length l.

    Returns (kappa, ok, n_sdf, n_grad, steps_done).  The walk advances
    l/substeps along the current tangent, re-projects, then removes the new
    normal component from the direction.  kappa is measured against the
    normal at the start point.
    """
    ns = 0
    ng = 0
    _, n1x, n1y, n1z, deg = grad_one(ops, consts, qx, qy, qz)
    ng += 1
    if deg:
        return 0.0, 0, ns, ng, 0
    L = math.sqrt(n1x * n1x + n1y * n1y + n1z * n1z)
    if L * L < _DEG2:
        return 0.0, 0, ns, ng, 0
    n1x /= L
    n1y /= L
    n1z /= L
    d = dx * n1x + dy * n1y + dz * n1z
    dx -= d * n1x
    dy -= d * n1y
    dz -= d * n1z
    L = math.sqrt(dx * dx + dy * dy + dz * dz)
    if L < 1e-9:
        return 0.0, 0, ns, ng, 0
    dx /= L
    dy /= L
    dz /= L
    step = l / substeps
    px = qx
    py = qy
    pz = qz
    for i in range(substeps):
        px += step * dx
        py += step * dy
        pz += step * dz
        px, py, pz, gx, gy, gz, conv, s1, g1, deg = project(
            ops, consts, px, py, pz, eps, max_iters
        )
        ns += s1
        ng += g1
        if not conv or deg:
            return 0.0, 0, ns, ng, i
        L = math.sqrt(gx * gx + gy * gy + gz * gz)
        if L * L < _DEG2:
            return 0.0, 0, ns, ng, i
        nx = gx / L
        ny = gy / L
        nz = gz / L
        d = dx * nx + dy * ny + dz * nz
        dx -= d * nx
        dy -= d * ny
        dz -= d * nz
        L = math.sqrt(dx * dx + dy * dy + dz * dz)
        if L < 1e-9:
            return 0.0, 0, ns, ng, i
        dx /= L
        dy /= L
        dz /= L
    d = dx * n1x + dy * n1y + dz * n1z
    if d > 1.0:
        d = 1.0
    elif d < -1.0:
        d = -1.0
    return math.acos(d) - math.pi / 2.0, 1, ns, ng, substeps


def _pit(px, py, pz, t, t_near, t_lat=None):
    """Point-in-triangle proximity core; t is a (3, 3) vertex array.

    Returns 1/0, or -1 for a degenerate triangle.  True when the vertical
    distance to the plane is under t_near and the projected point is within
    t_lat (defaults to t_near) inside of all three edge lines; t_lat=0
    demands strict lateral containment.
    """
    if t_lat is None:
        t_lat = t_near
    e0x = t[1, 0] - t[0, 0]
    e0y = t[1, 1] - t[0, 1]
    e0z = t[1, 2] - t[0, 2]
    e1x = t[2, 0] - t[1, 0]
    e1y = t[2, 1] - t[1, 1]
    e1z = t[2, 2] - t[1, 2]
    nx = e0y * e1z - e0z * e1y
    ny = e0z * e1x - e0x * e1z
    nz = e0x * e1y - e0y * e1x
    L = math.sqrt(nx * nx + ny * ny + nz * nz)
    if L < 1e-12:
        return -1
    nx /= L
    ny /= L
    nz /= L
    dv = (px - t[0, 0]) * nx + (py - t[0, 1]) * ny + (pz - t[0, 2]) * nz
    if abs(dv) >= t_near:
        return 0
    # project onto the plane, then signed distances to the edge lines
    px -= dv * nx
    py -= dv * ny
    pz -= dv * nz
    for j in range(3):
        k = j + 1 if j < 2 else 0
        ex = t[k, 0] - t[j, 0]
        ey = t[k, 1] - t[j, 1]
        ez = t[k, 2] - t[j, 2]
        # inward edge normal: n x e, unit because n is unit and n _|_ e
        ix = ny * ez - nz * ey
        iy = nz * ex - nx * ez
        iz = nx * ey - ny * ex
        Le = math.sqrt(ix * ix + iy * iy + iz * iz)
        if Le < 1e-15:
            return -1
        s = ((px - t[j, 0]) * ix + (py - t[j, 1]) * iy + (pz - t[j, 2]) * iz) / Le
        if s <= -t_lat:
            return 0
    return 1


def pit_one(p, tri, t_near):
    """Point-in-triangle proximity on array inputs."""
    return _pit(p[0], p[1], p[2], tri, t_near)


def _point_seg_dist2(px, py, pz, ax, ay, az, bx, by, bz):
    ux = bx - ax
    uy = by - ay
    uz = bz - az
    L2 = ux * ux + uy * uy + uz * uz
    t = ((px - ax) * ux + (py - ay) * uy + (pz - az) * uz) / L2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    dx = px - (ax + t * ux)
    dy = py - (ay + t * uy)
    dz = pz - (az + t * uz)
    return dx * dx + dy * dy + dz * dz


def _seg(p1x, p1y, p1z, q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z, t_near,
         scan=0):
    """Segment proximity core.  Returns 1/0, or -1 for zero-length input.

    With scan=1 the test reports only strict-interior crossings: parallel
    pairs report 0 instead of falling back to the clamped distance test,
    and closest approaches at the segment endpoints do not count.  The
    overlap scan uses that mode; stacked sheets and corner contacts are
    the vertical-proximity and vertex-proximity checks' business, not an
    edge crossing.
    """
    ux = q1x - p1x
    uy = q1y - p1y
    uz = q1z - p1z
    vx = q2x - p2x
    vy = q2y - p2y
    vz = q2z - p2z
    a = ux * ux + uy * uy + uz * uz
    c = vx * vx + vy * vy + vz * vz
    if a < 1e-30 or c < 1e-30:
        return -1
    b = ux * vx + uy * vy + uz * vz
    cosang = b / (math.sqrt(a) * math.sqrt(c))
    det_n = cosang * cosang - 1.0
    if abs(det_n) < _PARALLEL_EPS:
        if scan:
            return 0
        # parallel: clamped endpoint-to-segment distances
        d2 = _point_seg_dist2(p1x, p1y, p1z, p2x, p2y, p2z, q2x, q2y, q2z)
        e2 = _point_seg_dist2(q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z)
        if e2 < d2:
            d2 = e2
        e2 = _point_seg_dist2(p2x, p2y, p2z, p1x, p1y, p1z, q1x, q1y, q1z)
        if e2 < d2:
            d2 = e2
        e2 = _point_seg_dist2(q2x, q2y, q2z, p1x, p1y, p1z, q1x, q1y, q1z)
        if e2 < d2:
            d2 = e2
        return 1 if d2 <= t_near * t_near else 0
    wx = p2x - p1x
    wy = p2y - p1y
    wz = p2z - p1z
    wu = wx * ux + wy * uy + wz * uz
    wv = wx * vx + wy * vy + wz * vz
    det = b * b - a * c
    d1 = (b * wv - c * wu) / det
    d2 = (a * wv - b * wu) / det
    if scan:
        if d1 <= 0.0 or d1 >= 1.0 or d2 <= 0.0 or d2 >= 1.0:
            return 0
    elif d1 < 0.0 or d1 > 1.0 or d2 < 0.0 or d2 > 1.0:
        return 0
    dx = (p2x + d2 * vx) - (p1x + d1 * ux)
    dy = (p2y + d2 * vy) - (p1y + d1 * uy)
    dz = (p2z + d2 * vz) - (p1z + d1 * uz)
    return 1 if dx * dx + dy * dy + dz * dz <= t_near * t_near else 0


def seg_one(p1, q1, p2, q2, t_near):
    """Segment proximity on array inputs."""
    return _seg(
        p1[0], p1[1], p1[2], q1[0], q1[1], q1[2],
        p2[0], p2[1], p2[2], q2[0], q2[1], q2[2], t_near,
    )


_EDGES = ((0, 1), (1, 2), (2, 0))


def overlap_one(cand, tri, match, t_near, allow_e):
    """Overlap verdict kind for one candidate/face pair.

    cand and tri are (3, 3) vertex arrays, match is a (3, 3) uint8 matrix
    with match[i][j] set when candidate vertex i is face vertex j.  Checks
    run in the fixed order: predicted vertex in face (1), face vertex in
    candidate (2), edge intersection (3), parallel proximity (4, only when
    allow_e), vertex proximity (5).  Returns 0 for no overlap, -1 for a
    degenerate face.

    A face sharing the candidate apex (vertex 2) only happens when the
    apex is an existing mesh vertex being merged; both point-in-triangle
    checks are skipped against such faces, otherwise closing small holes
    would be impossible.
    """
    cand_shared = [False, False, False]
    tri_shared = [False, False, False]
    for i in range(3):
        for j in range(3):
            if match[i, j]:
                cand_shared[i] = True
                tri_shared[j] = True
    if not cand_shared[2]:
        # strict lateral containment throughout the scan: the inflated
        # band would extend across shared edges and veto thin but valid
        # neighbours; crossings are the segment checks' job and vertical
        # stacking keeps the t_near tolerance
        r = _pit(cand[2, 0], cand[2, 1], cand[2, 2], tri, t_near, 0.0)
        if r < 0:
            return -1
        if r:
            return 1
        # containment: every unshared face vertex strictly inside the
        # candidate footprint; partial pokes cross edges and are caught by
        # the segment checks, and the lateral inflation is dropped so a
        # vertex just behind a shared or nearby boundary edge cannot veto
        n_unshared = 0
        n_inside = 0
        for j in range(3):
            if tri_shared[j]:
                continue
            n_unshared += 1
            r = _pit(tri[j, 0], tri[j, 1], tri[j, 2], cand, t_near, 0.0)
            if r < 0:
                return -1
            if r:
                n_inside += 1
        if n_unshared and n_inside == n_unshared:
            return 2
    for i1, i2 in _EDGES:
        for j1, j2 in _EDGES:
            if match[i1, j1] or match[i1, j2] or match[i2, j1] or match[i2, j2]:
                continue
            r = _seg(
                cand[i1, 0], cand[i1, 1], cand[i1, 2],
                cand[i2, 0], cand[i2, 1], cand[i2, 2],
                tri[j1, 0], tri[j1, 1], tri[j1, 2],
                tri[j2, 0], tri[j2, 1], tri[j2, 2],
                t_near,
                1,
            )
            if r < 0:
                return -1
            if r:
                return 3
    if allow_e:
        # stacked-sheet test: a centroid hit counts only when it projects
        # strictly inside the other triangle (no lateral inflation), else
        # laterally adjacent patches of the same sheet would trip it
        ccx = (cand[0, 0] + cand[1, 0] + cand[2, 0]) / 3.0
        ccy = (cand[0, 1] + cand[1, 1] + cand[2, 1]) / 3.0
        ccz = (cand[0, 2] + cand[1, 2] + cand[2, 2]) / 3.0
        r = _pit(ccx, ccy, ccz, tri, t_near, 0.0)
        if r < 0:
            return -1
        if r:
            return 4
        tcx = (tri[0, 0] + tri[1, 0] + tri[2, 0]) / 3.0
        tcy = (tri[0, 1] + tri[1, 1] + tri[2, 1]) / 3.0
        tcz = (tri[0, 2] + tri[1, 2] + tri[2, 2]) / 3.0
        r = _pit(tcx, tcy, tcz, cand, t_near, 0.0)
        if r < 0:
            return -1
        if r:
            return 4
    t2 = t_near * t_near
    for j in range(3):
        if tri_shared[j]:
            continue
        dx = cand[2, 0] - tri[j, 0]
        dy = cand[2, 1] - tri[j, 1]
        dz = cand[2, 2] - tri[j, 2]
        if dx * dx + dy * dy + dz * dz < t2:
            return 5
    return 0


def overlap_scan(cand, tris, matches, allow_e, t_near):
    """First overlapping face in a stack of faces.

    tris is (n, 3, 3), matches (n, 3, 3) uint8, allow_e (n,) uint8.
    Returns (kind, index); (0, -1) when nothing overlaps, kind -1 with the
    offending index when a face is degenerate.
    """
    for f in range(tris.shape[0]):
        kind = overlap_one(cand, tris[f], matches[f], t_near, allow_e[f])
        if kind != 0:
            return kind, f
    return 0, -1
