"""Micro-benchmark of the compiled kernels against the pure-Python fallback.

Runs the four hot operations (batch SDF evaluation, Newton projection,
turning-angle walks, overlap scans) through both backends and prints a
timing table.  The native extension is skipped with a notice when it is
not built.

    python3 benchmarks/bench_kernels.py [--points N] [--repeats K]
"""

import argparse
import time

import numpy as np

from frontmesh._kernels import fallback
from frontmesh.fields import (
    EPS_SURFACE,
    PROJECT_MAX_ITERS,
    WALK_SUBSTEPS,
    Box,
    SmoothUnion,
    Sphere,
    Torus,
)

try:
    from frontmesh._kernels import _native
except ImportError:
    _native = None


def _field():
    return SmoothUnion(
        Torus(major_radius=0.4, minor_radius=0.15),
        Sphere(center=(0.45, 0.0, 0.25), radius=0.2),
        Box(center=(-0.45, 0.0, -0.2), half_extents=(0.2, 0.15, 0.1)),
        blend=0.08,
    )


def _overlap_stack(rng, n_faces=64):
    """A candidate triangle plus a plausible local face stack."""
    tris = np.empty((n_faces, 3, 3))
    for i in range(n_faces):
        base = rng.uniform(-0.05, 0.05, size=3)
        tris[i] = base + rng.uniform(-0.02, 0.02, size=(3, 3))
    cand = rng.uniform(-0.02, 0.02, size=(3, 3))
    matches = np.zeros((n_faces, 3, 3), dtype=np.uint8)
    allow_e = np.ones(n_faces, dtype=np.uint8)
    return cand, tris, matches, allow_e


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _bench_backend(impl, ops, consts, pts, starts, walks, scans, repeats):
    out = {}
    out["eval_batch"] = _time(lambda: impl.eval_batch(ops, consts, pts), repeats)

    def run_project():
        for x, y, z in starts:
            impl.project(ops, consts, x, y, z, EPS_SURFACE, PROJECT_MAX_ITERS)

    out["project"] = _time(run_project, repeats)

    def run_curvature():
        for qx, qy, qz, dx, dy, dz in walks:
            impl.curvature(ops, consts, qx, qy, qz, dx, dy, dz,
                           0.005, WALK_SUBSTEPS, EPS_SURFACE, PROJECT_MAX_ITERS)

    out["curvature"] = _time(run_curvature, repeats)

    def run_scan():
        for cand, tris, matches, allow_e in scans:
            impl.overlap_scan(cand, tris, matches, allow_e, 0.005)

    out["overlap_scan"] = _time(run_scan, repeats)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200000,
                    help="batch evaluation size (default 200000)")
    ap.add_argument("--repeats", type=int, default=3,
                    help="repeats per measurement, best is kept (default 3)")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    field = _field()
    ops, consts = field.ops, field.consts

    pts = rng.uniform(-1.0, 1.0, size=(args.points, 3))
    starts = rng.uniform(-0.7, 0.7, size=(500, 3))
    walks = []
    for _ in range(200):
        q = rng.uniform(-0.7, 0.7, size=3)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        walks.append((*q, *d))
    scans = [_overlap_stack(rng) for _ in range(300)]

    work = {
        "eval_batch": "%d pts" % args.points,
        "project": "500 starts",
        "curvature": "200 walks",
        "overlap_scan": "300 x 64 faces",
    }

    py = _bench_backend(fallback, ops, consts, pts, starts, walks, scans, args.repeats)
    nat = None
    if _native is not None:
        nat = _bench_backend(_native, ops, consts, pts, starts, walks, scans, args.repeats)
    else:
        print("note: native extension not built; showing the fallback only\n")

    print("%-14s %-16s %12s %12s %10s" % ("op", "work", "python", "native", "speedup"))
    print("-" * 68)
    for op in ("eval_batch", "project", "curvature", "overlap_scan"):
        row = [op, work[op], "%.4f s" % py[op]]
        if nat is not None:
            row += ["%.4f s" % nat[op], "%.1fx" % (py[op] / nat[op])]
        else:
            row += ["-", "-"]
        print("%-14s %-16s %12s %12s %10s" % tuple(row))


if __name__ == "__main__":
    main()
