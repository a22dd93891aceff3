# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the hot kernels.

Line-for-line transcription of ``frontmesh._kernels.fallback``; compiled
without floating-point contraction so both backends produce bit-identical
results.  See the fallback module for the program encoding and the
semantics of every entry point.
"""

from libc.math cimport sqrt, fabs, acos, M_PI
from libc.stdint cimport int32_t

import numpy as np

OP_SPHERE = 0
OP_BOX = 1
OP_TORUS = 2
OP_PLANE = 3
OP_UNION = 4
OP_INTERSECT = 5
OP_SMOOTH_UNION = 6

MAX_STACK = 64

cdef double _DEG2 = 1e-24
cdef double _PARALLEL_EPS = 1e-12


cdef double c_eval(const int32_t* ops, Py_ssize_t n_ops, const double* consts,
                   double x, double y, double z) nogil:
    cdef double stack[64]
    cdef int sp = 0
    cdef Py_ssize_t i
    cdef int32_t op, c
    cdef double dx, dy, dz, qx, qy, qz, m, rho, u, a, b, h, k
    for i in range(0, n_ops, 2):
        op = ops[i]
        c = ops[i + 1]
        if op == 0:  # sphere
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            stack[sp] = sqrt(dx * dx + dy * dy + dz * dz) - consts[c + 3]
            sp += 1
        elif op == 1:  # box
            dx = fabs(x - consts[c]) - consts[c + 3]
            dy = fabs(y - consts[c + 1]) - consts[c + 4]
            dz = fabs(z - consts[c + 2]) - consts[c + 5]
            qx = dx if dx > 0.0 else 0.0
            qy = dy if dy > 0.0 else 0.0
            qz = dz if dz > 0.0 else 0.0
            m = dx if dx > dy else dy
            if dz > m:
                m = dz
            if m > 0.0:
                m = 0.0
            stack[sp] = sqrt(qx * qx + qy * qy + qz * qz) + m
            sp += 1
        elif op == 2:  # torus
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            rho = sqrt(dx * dx + dy * dy)
            u = rho - consts[c + 3]
            stack[sp] = sqrt(u * u + dz * dz) - consts[c + 4]
            sp += 1
        elif op == 3:  # plane
            stack[sp] = ((x - consts[c]) * consts[c + 3]
                         + (y - consts[c + 1]) * consts[c + 4]
                         + (z - consts[c + 2]) * consts[c + 5])
            sp += 1
        elif op == 4:  # union
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            stack[sp - 1] = a if a <= b else b
        elif op == 5:  # intersect
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            stack[sp - 1] = a if a >= b else b
        else:  # smooth union
            k = consts[c]
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            h = 0.5 + 0.5 * (b - a) / k
            if h < 0.0:
                h = 0.0
            elif h > 1.0:
                h = 1.0
            stack[sp - 1] = b + (a - b) * h - k * h * (1.0 - h)
    return stack[sp - 1]


cdef int c_grad(const int32_t* ops, Py_ssize_t n_ops, const double* consts,
                double x, double y, double z, double* out) nogil:
    """out receives s, gx, gy, gz; returns the degenerate flag."""
    cdef double sv[64]
    cdef double gx[64]
    cdef double gy[64]
    cdef double gz[64]
    cdef int sp = 0
    cdef int deg = 0
    cdef Py_ssize_t i
    cdef int32_t op, c
    cdef int take_a
    cdef double dx, dy, dz, qx, qy, qz, m, rho, u, r, L, k, h
    cdef double rx, ry, rz, sx, sy, sz
    cdef double a, b, ax, ay, az, bx, by, bz
    for i in range(0, n_ops, 2):
        op = ops[i]
        c = ops[i + 1]
        if op == 0:  # sphere
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            r = sqrt(dx * dx + dy * dy + dz * dz)
            if r * r < _DEG2:
                deg = 1
                sv[sp] = -consts[c + 3]
                gx[sp] = 1.0
                gy[sp] = 0.0
                gz[sp] = 0.0
            else:
                sv[sp] = r - consts[c + 3]
                gx[sp] = dx / r
                gy[sp] = dy / r
                gz[sp] = dz / r
            sp += 1
        elif op == 1:  # box
            rx = x - consts[c]
            ry = y - consts[c + 1]
            rz = z - consts[c + 2]
            dx = fabs(rx) - consts[c + 3]
            dy = fabs(ry) - consts[c + 4]
            dz = fabs(rz) - consts[c + 5]
            sx = 1.0 if rx >= 0.0 else -1.0
            sy = 1.0 if ry >= 0.0 else -1.0
            sz = 1.0 if rz >= 0.0 else -1.0
            if dx > 0.0 or dy > 0.0 or dz > 0.0:
                qx = dx if dx > 0.0 else 0.0
                qy = dy if dy > 0.0 else 0.0
                qz = dz if dz > 0.0 else 0.0
                L = sqrt(qx * qx + qy * qy + qz * qz)
                sv[sp] = L
                gx[sp] = sx * qx / L
                gy[sp] = sy * qy / L
                gz[sp] = sz * qz / L
            else:
                m = dx if dx > dy else dy
                if dz > m:
                    m = dz
                sv[sp] = m
                if dx == m:
                    gx[sp] = sx
                    gy[sp] = 0.0
                    gz[sp] = 0.0
                elif dy == m:
                    gx[sp] = 0.0
                    gy[sp] = sy
                    gz[sp] = 0.0
                else:
                    gx[sp] = 0.0
                    gy[sp] = 0.0
                    gz[sp] = sz
            sp += 1
        elif op == 2:  # torus
            dx = x - consts[c]
            dy = y - consts[c + 1]
            dz = z - consts[c + 2]
            rho = sqrt(dx * dx + dy * dy)
            u = rho - consts[c + 3]
            L = sqrt(u * u + dz * dz)
            if L * L < _DEG2 or rho * rho < _DEG2:
                deg = 1
                sv[sp] = L - consts[c + 4]
                gx[sp] = 1.0
                gy[sp] = 0.0
                gz[sp] = 0.0
            else:
                sv[sp] = L - consts[c + 4]
                gx[sp] = u / L * (dx / rho)
                gy[sp] = u / L * (dy / rho)
                gz[sp] = dz / L
            sp += 1
        elif op == 3:  # plane
            sv[sp] = ((x - consts[c]) * consts[c + 3]
                      + (y - consts[c + 1]) * consts[c + 4]
                      + (z - consts[c + 2]) * consts[c + 5])
            gx[sp] = consts[c + 3]
            gy[sp] = consts[c + 4]
            gz[sp] = consts[c + 5]
            sp += 1
        elif op == 4 or op == 5:  # union / intersect
            b = sv[sp - 1]
            a = sv[sp - 2]
            bx = gx[sp - 1]
            ax = gx[sp - 2]
            by = gy[sp - 1]
            ay = gy[sp - 2]
            bz = gz[sp - 1]
            az = gz[sp - 2]
            sp -= 1
            take_a = (a <= b) if op == 4 else (a >= b)
            if take_a:
                sv[sp - 1] = a
                gx[sp - 1] = ax
                gy[sp - 1] = ay
                gz[sp - 1] = az
            else:
                sv[sp - 1] = b
                gx[sp - 1] = bx
                gy[sp - 1] = by
                gz[sp - 1] = bz
        else:  # smooth union
            k = consts[c]
            b = sv[sp - 1]
            a = sv[sp - 2]
            bx = gx[sp - 1]
            ax = gx[sp - 2]
            by = gy[sp - 1]
            ay = gy[sp - 2]
            bz = gz[sp - 1]
            az = gz[sp - 2]
            sp -= 1
            h = 0.5 + 0.5 * (b - a) / k
            if h < 0.0:
                h = 0.0
            elif h > 1.0:
                h = 1.0
            sv[sp - 1] = b + (a - b) * h - k * h * (1.0 - h)
            gx[sp - 1] = ax * h + bx * (1.0 - h)
            gy[sp - 1] = ay * h + by * (1.0 - h)
            gz[sp - 1] = az * h + bz * (1.0 - h)
    out[0] = sv[sp - 1]
    out[1] = gx[sp - 1]
    out[2] = gy[sp - 1]
    out[3] = gz[sp - 1]
    return deg


def eval_one(const int32_t[::1] ops, const double[::1] consts,
             double x, double y, double z):
    """Evaluate a compiled program at a single point."""
    return c_eval(&ops[0], ops.shape[0], &consts[0], x, y, z)


def eval_batch(const int32_t[::1] ops, const double[::1] consts,
               const double[:, ::1] pts):
    """Program evaluation over an (n, 3) point array."""
    cdef Py_ssize_t n = pts.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef const int32_t* o = &ops[0]
    cdef const double* cc = &consts[0]
    cdef Py_ssize_t n_ops = ops.shape[0]
    with nogil:
        for i in range(n):
            out[i] = c_eval(o, n_ops, cc, pts[i, 0], pts[i, 1], pts[i, 2])
    return out_arr


def grad_one(const int32_t[::1] ops, const double[::1] consts,
             double x, double y, double z):
    """Value and analytic gradient at a point; see the fallback backend."""
    cdef double out[4]
    cdef int deg = c_grad(&ops[0], ops.shape[0], &consts[0], x, y, z, out)
    return out[0], out[1], out[2], out[3], deg


def project(const int32_t[::1] ops, const double[::1] consts,
            double x, double y, double z, double eps, int max_iters):
    """Newton projection onto the zero set; see the fallback backend."""
    cdef const int32_t* o = &ops[0]
    cdef const double* cc = &consts[0]
    cdef Py_ssize_t n_ops = ops.shape[0]
    cdef int ns = 0, ng = 0, conv = 0, have_g = 0, deg = 0
    cdef double gx = 0.0, gy = 0.0, gz = 0.0
    cdef double s, L
    cdef double out[4]
    cdef int it
    for it in range(max_iters):
        s = c_eval(o, n_ops, cc, x, y, z)
        ns += 1
        if fabs(s) < eps:
            conv = 1
            break
        deg = c_grad(o, n_ops, cc, x, y, z, out)
        ng += 1
        gx = out[1]
        gy = out[2]
        gz = out[3]
        if deg:
            return x, y, z, gx, gy, gz, 0, ns, ng, 1
        L = sqrt(gx * gx + gy * gy + gz * gz)
        if L * L < _DEG2:
            return x, y, z, gx, gy, gz, 0, ns, ng, 1
        x -= s * gx / L
        y -= s * gy / L
        z -= s * gz / L
        have_g = 1
    if conv and not have_g:
        deg = c_grad(o, n_ops, cc, x, y, z, out)
        ng += 1
        gx = out[1]
        gy = out[2]
        gz = out[3]
        if deg:
            return x, y, z, gx, gy, gz, 0, ns, ng, 1
    return x, y, z, gx, gy, gz, conv, ns, ng, 0


def curvature(const int32_t[::1] ops, const double[::1] consts,
              double qx, double qy, double qz,
              double dx, double dy, double dz,
              double l, int substeps, double eps, int max_iters):
    """Turning angle after a discrete geodesic walk; see the fallback backend."""
    cdef const int32_t* o = &ops[0]
    cdef const double* cc = &consts[0]
    cdef Py_ssize_t n_ops = ops.shape[0]
    cdef int ns = 0, ng = 0
    cdef double out[4]
    cdef double n1x, n1y, n1z, L, d, step, px, py, pz, gx, gy, gz, s
    cdef double nx, ny, nz
    cdef int deg, conv, i, it, have_g
    deg = c_grad(o, n_ops, cc, qx, qy, qz, out)
    ng += 1
    if deg:
        return 0.0, 0, ns, ng, 0
    n1x = out[1]
    n1y = out[2]
    n1z = out[3]
    L = sqrt(n1x * n1x + n1y * n1y + n1z * n1z)
    if L * L < _DEG2:
        return 0.0, 0, ns, ng, 0
    n1x /= L
    n1y /= L
    n1z /= L
    d = dx * n1x + dy * n1y + dz * n1z
    dx -= d * n1x
    dy -= d * n1y
    dz -= d * n1z
    L = sqrt(dx * dx + dy * dy + dz * dz)
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
        # inline projection, counting into ns/ng
        conv = 0
        have_g = 0
        gx = 0.0
        gy = 0.0
        gz = 0.0
        deg = 0
        for it in range(max_iters):
            s = c_eval(o, n_ops, cc, px, py, pz)
            ns += 1
            if fabs(s) < eps:
                conv = 1
                break
            deg = c_grad(o, n_ops, cc, px, py, pz, out)
            ng += 1
            gx = out[1]
            gy = out[2]
            gz = out[3]
            if deg:
                break
            L = sqrt(gx * gx + gy * gy + gz * gz)
            if L * L < _DEG2:
                deg = 1
                break
            px -= s * gx / L
            py -= s * gy / L
            pz -= s * gz / L
            have_g = 1
        if conv and not have_g and not deg:
            deg = c_grad(o, n_ops, cc, px, py, pz, out)
            ng += 1
            gx = out[1]
            gy = out[2]
            gz = out[3]
        if not conv or deg:
            return 0.0, 0, ns, ng, i
        L = sqrt(gx * gx + gy * gy + gz * gz)
        if L * L < _DEG2:
            return 0.0, 0, ns, ng, i
        nx = gx / L
        ny = gy / L
        nz = gz / L
        d = dx * nx + dy * ny + dz * nz
        dx -= d * nx
        dy -= d * ny
        dz -= d * nz
        L = sqrt(dx * dx + dy * dy + dz * dz)
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
    return acos(d) - M_PI / 2.0, 1, ns, ng, substeps


cdef int c_pit(double px, double py, double pz, const double* t,
               double t_near, double t_lat) nogil:
    cdef double e0x = t[3] - t[0]
    cdef double e0y = t[4] - t[1]
    cdef double e0z = t[5] - t[2]
    cdef double e1x = t[6] - t[3]
    cdef double e1y = t[7] - t[4]
    cdef double e1z = t[8] - t[5]
    cdef double nx = e0y * e1z - e0z * e1y
    cdef double ny = e0z * e1x - e0x * e1z
    cdef double nz = e0x * e1y - e0y * e1x
    cdef double L = sqrt(nx * nx + ny * ny + nz * nz)
    cdef double dv, ex, ey, ez, ix, iy, iz, Le, s
    cdef int j, k
    if L < 1e-12:
        return -1
    nx /= L
    ny /= L
    nz /= L
    dv = (px - t[0]) * nx + (py - t[1]) * ny + (pz - t[2]) * nz
    if fabs(dv) >= t_near:
        return 0
    px -= dv * nx
    py -= dv * ny
    pz -= dv * nz
    for j in range(3):
        k = j + 1 if j < 2 else 0
        ex = t[3 * k] - t[3 * j]
        ey = t[3 * k + 1] - t[3 * j + 1]
        ez = t[3 * k + 2] - t[3 * j + 2]
        ix = ny * ez - nz * ey
        iy = nz * ex - nx * ez
        iz = nx * ey - ny * ex
        Le = sqrt(ix * ix + iy * iy + iz * iz)
        if Le < 1e-15:
            return -1
        s = ((px - t[3 * j]) * ix + (py - t[3 * j + 1]) * iy
             + (pz - t[3 * j + 2]) * iz) / Le
        if s <= -t_lat:
            return 0
    return 1


def pit_one(const double[::1] p, const double[:, ::1] tri, double t_near):
    """Point-in-triangle proximity on array inputs."""
    return c_pit(p[0], p[1], p[2], &tri[0, 0], t_near, t_near)


cdef double c_point_seg_dist2(double px, double py, double pz,
                              double ax, double ay, double az,
                              double bx, double by, double bz) nogil:
    cdef double ux = bx - ax
    cdef double uy = by - ay
    cdef double uz = bz - az
    cdef double L2 = ux * ux + uy * uy + uz * uz
    cdef double t = ((px - ax) * ux + (py - ay) * uy + (pz - az) * uz) / L2
    cdef double dx, dy, dz
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    dx = px - (ax + t * ux)
    dy = py - (ay + t * uy)
    dz = pz - (az + t * uz)
    return dx * dx + dy * dy + dz * dz


cdef int c_seg(double p1x, double p1y, double p1z,
               double q1x, double q1y, double q1z,
               double p2x, double p2y, double p2z,
               double q2x, double q2y, double q2z, double t_near,
               int scan) nogil:
    cdef double ux = q1x - p1x
    cdef double uy = q1y - p1y
    cdef double uz = q1z - p1z
    cdef double vx = q2x - p2x
    cdef double vy = q2y - p2y
    cdef double vz = q2z - p2z
    cdef double a = ux * ux + uy * uy + uz * uz
    cdef double c = vx * vx + vy * vy + vz * vz
    cdef double b, cosang, det_n, d2, e2, wx, wy, wz, wu, wv, det, d1, dd2
    cdef double dx, dy, dz
    if a < 1e-30 or c < 1e-30:
        return -1
    b = ux * vx + uy * vy + uz * vz
    cosang = b / (sqrt(a) * sqrt(c))
    det_n = cosang * cosang - 1.0
    if fabs(det_n) < _PARALLEL_EPS:
        # scan mode counts only strict-interior crossings: stacked sheets
        # and corner contacts belong to the vertical-proximity and
        # vertex-proximity checks (see the fallback kernel)
        if scan:
            return 0
        d2 = c_point_seg_dist2(p1x, p1y, p1z, p2x, p2y, p2z, q2x, q2y, q2z)
        e2 = c_point_seg_dist2(q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z)
        if e2 < d2:
            d2 = e2
        e2 = c_point_seg_dist2(p2x, p2y, p2z, p1x, p1y, p1z, q1x, q1y, q1z)
        if e2 < d2:
            d2 = e2
        e2 = c_point_seg_dist2(q2x, q2y, q2z, p1x, p1y, p1z, q1x, q1y, q1z)
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
    dd2 = (a * wv - b * wu) / det
    if scan:
        if d1 <= 0.0 or d1 >= 1.0 or dd2 <= 0.0 or dd2 >= 1.0:
            return 0
    elif d1 < 0.0 or d1 > 1.0 or dd2 < 0.0 or dd2 > 1.0:
        return 0
    dx = (p2x + dd2 * vx) - (p1x + d1 * ux)
    dy = (p2y + dd2 * vy) - (p1y + d1 * uy)
    dz = (p2z + dd2 * vz) - (p1z + d1 * uz)
    return 1 if dx * dx + dy * dy + dz * dz <= t_near * t_near else 0


def seg_one(const double[::1] p1, const double[::1] q1,
            const double[::1] p2, const double[::1] q2, double t_near):
    """Segment proximity on array inputs."""
    return c_seg(p1[0], p1[1], p1[2], q1[0], q1[1], q1[2],
                 p2[0], p2[1], p2[2], q2[0], q2[1], q2[2], t_near, 0)


cdef int c_overlap_one(const double* cand, const double* tri,
                       const unsigned char* match, double t_near,
                       int allow_e) nogil:
    cdef int cand_shared[3]
    cdef int tri_shared[3]
    cdef int i, j, r, i1, i2, j1, j2
    cdef int n_unshared, n_inside
    cdef double ccx, ccy, ccz, tcx, tcy, tcz, dx, dy, dz, t2
    for i in range(3):
        cand_shared[i] = 0
        tri_shared[i] = 0
    for i in range(3):
        for j in range(3):
            if match[3 * i + j]:
                cand_shared[i] = 1
                tri_shared[j] = 1
    if not cand_shared[2]:
        # strict lateral containment throughout the scan (see fallback)
        r = c_pit(cand[6], cand[7], cand[8], tri, t_near, 0.0)
        if r < 0:
            return -1
        if r:
            return 1
        # faces sharing the apex (merge path) skip both PIT checks;
        # containment needs every unshared face vertex strictly inside
        # (no lateral inflation, see the fallback kernel)
        n_unshared = 0
        n_inside = 0
        for j in range(3):
            if not tri_shared[j]:
                n_unshared += 1
                r = c_pit(tri[3 * j], tri[3 * j + 1], tri[3 * j + 2], cand,
                          t_near, 0.0)
                if r < 0:
                    return -1
                if r:
                    n_inside += 1
        if n_unshared and n_inside == n_unshared:
            return 2
    for i1 in range(3):
        i2 = i1 + 1 if i1 < 2 else 0
        for j1 in range(3):
            j2 = j1 + 1 if j1 < 2 else 0
            if (match[3 * i1 + j1] or match[3 * i1 + j2]
                    or match[3 * i2 + j1] or match[3 * i2 + j2]):
                continue
            r = c_seg(cand[3 * i1], cand[3 * i1 + 1], cand[3 * i1 + 2],
                      cand[3 * i2], cand[3 * i2 + 1], cand[3 * i2 + 2],
                      tri[3 * j1], tri[3 * j1 + 1], tri[3 * j1 + 2],
                      tri[3 * j2], tri[3 * j2 + 1], tri[3 * j2 + 2],
                      t_near, 1)
            if r < 0:
                return -1
            if r:
                return 3
    if allow_e:
        ccx = (cand[0] + cand[3] + cand[6]) / 3.0
        ccy = (cand[1] + cand[4] + cand[7]) / 3.0
        ccz = (cand[2] + cand[5] + cand[8]) / 3.0
        r = c_pit(ccx, ccy, ccz, tri, t_near, 0.0)
        if r < 0:
            return -1
        if r:
            return 4
        tcx = (tri[0] + tri[3] + tri[6]) / 3.0
        tcy = (tri[1] + tri[4] + tri[7]) / 3.0
        tcz = (tri[2] + tri[5] + tri[8]) / 3.0
        r = c_pit(tcx, tcy, tcz, cand, t_near, 0.0)
        if r < 0:
            return -1
        if r:
            return 4
    t2 = t_near * t_near
    for j in range(3):
        if tri_shared[j]:
            continue
        dx = cand[6] - tri[3 * j]
        dy = cand[7] - tri[3 * j + 1]
        dz = cand[8] - tri[3 * j + 2]
        if dx * dx + dy * dy + dz * dz < t2:
            return 5
    return 0


def overlap_one(const double[:, ::1] cand, const double[:, ::1] tri,
                const unsigned char[:, ::1] match, double t_near, int allow_e):
    """Overlap verdict kind for one candidate/face pair."""
    return c_overlap_one(&cand[0, 0], &tri[0, 0], &match[0, 0], t_near, allow_e)


def overlap_scan(const double[:, ::1] cand, const double[:, :, ::1] tris,
                 const unsigned char[:, :, ::1] matches,
                 const unsigned char[::1] allow_e, double t_near):
    """First overlapping face in a stack of faces; see the fallback backend."""
    cdef Py_ssize_t n = tris.shape[0]
    cdef Py_ssize_t f
    cdef int kind = 0
    cdef Py_ssize_t hit = -1
    cdef const double* cp = &cand[0, 0]
    if n == 0:
        return 0, -1
    with nogil:
        for f in range(n):
            kind = c_overlap_one(cp, &tris[f, 0, 0], &matches[f, 0, 0],
                                 t_near, allow_e[f])
            if kind != 0:
                hit = f
                break
    if hit < 0:
        return 0, -1
    return kind, hit
