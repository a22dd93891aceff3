"""Mesh quality and surface fidelity measurements.

Point-to-point queries (chamfer, f-score, normal consistency) go through
scipy's cKDTree; everything else is plain numpy over the triangle soup.
"""

import numpy as np
from scipy.spatial import cKDTree

F_SCORE_THRESHOLDS = (0.001, 0.005, 0.01)
ANGLE_BINS = 36
AREA_BINS = 50


def _tri_geometry(positions, faces):
    a = positions[faces[:, 0]]
    b = positions[faces[:, 1]]
    c = positions[faces[:, 2]]
    cr = np.cross(b - a, c - a)
    double_area = np.sqrt(np.sum(cr * cr, axis=1))
    return a, b, c, cr, double_area


def face_normals(positions, faces):
    """Unit normals; zero vector for degenerate faces."""
    _, _, _, cr, da = _tri_geometry(positions, faces)
    n = np.zeros_like(cr)
    ok = da > 0.0
    n[ok] = cr[ok] / da[ok, None]
    return n


def face_areas(positions, faces):
    return 0.5 * _tri_geometry(positions, faces)[4]


def sample_surface(positions, faces, n, rng):
    """n area-weighted surface samples; returns (points, unit normals)."""
    if len(faces) == 0:
        raise ValueError("cannot sample an empty mesh")
    areas = face_areas(positions, faces)
    total = float(areas.sum())
    if total <= 0.0:
        raise ValueError("mesh has zero total area")
    fi = rng.choice(len(faces), size=n, p=areas / total)
    u = rng.random(n)
    v = rng.random(n)
    su = np.sqrt(u)
    b0 = 1.0 - su
    b1 = su * (1.0 - v)
    b2 = su * v
    f = faces[fi]
    pts = (b0[:, None] * positions[f[:, 0]]
           + b1[:, None] * positions[f[:, 1]]
           + b2[:, None] * positions[f[:, 2]])
    return pts, face_normals(positions, faces)[fi]


def chamfer_one_sided(src, dst):
    """Mean Euclidean distance from each src point to its nearest dst point."""
    d, _ = cKDTree(dst).query(src)
    return float(np.mean(d))


def chamfer(a, b):
    return 0.5 * (chamfer_one_sided(a, b) + chamfer_one_sided(b, a))


def f_score(a, b, thresholds=F_SCORE_THRESHOLDS):
    """Precision/recall/F1 at each distance threshold (inclusive)."""
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    out = {}
    for t in thresholds:
        precision = float(np.mean(da <= t))
        recall = float(np.mean(db <= t))
        f = 0.0 if precision + recall == 0.0 else 2.0 * precision * recall / (precision + recall)
        out[t] = {"precision": precision, "recall": recall, "f1": f}
    return out


def normal_consistency(a_pts, a_nrm, b_pts, b_nrm):
    """Symmetrized mean |n_a . n_b| over nearest-point pairs."""
    _, ia = cKDTree(b_pts).query(a_pts)
    _, ib = cKDTree(a_pts).query(b_pts)
    ab = np.mean(np.abs(np.sum(a_nrm * b_nrm[ia], axis=1)))
    ba = np.mean(np.abs(np.sum(b_nrm * a_nrm[ib], axis=1)))
    return float(0.5 * (ab + ba))


def triangle_angles(positions, faces):
    """Interior angles, one row of three per face, radians."""
    a, b, c, _, _ = _tri_geometry(positions, faces)
    out = np.empty((len(faces), 3), dtype=np.float64)
    for i, (p, q, r) in enumerate(((a, b, c), (b, c, a), (c, a, b))):
        u = q - p
        v = r - p
        nu = np.linalg.norm(u, axis=1)
        nv = np.linalg.norm(v, axis=1)
        denom = np.where(nu * nv > 0.0, nu * nv, 1.0)
        cosang = np.clip(np.sum(u * v, axis=1) / denom, -1.0, 1.0)
        out[:, i] = np.arccos(cosang)
    return out


def angle_histogram(positions, faces, bins=ANGLE_BINS):
    """Counts of all interior angles over [0, pi]; returns (counts, edges)."""
    ang = triangle_angles(positions, faces).ravel()
    return np.histogram(ang, bins=bins, range=(0.0, np.pi))


def area_histogram(positions, faces, bins=AREA_BINS):
    """Counts of log10 face areas; zero-area faces are dropped."""
    areas = face_areas(positions, faces)
    areas = areas[areas > 0.0]
    if areas.size == 0:
        return np.zeros(bins, dtype=np.int64), np.linspace(0.0, 1.0, bins + 1)
    la = np.log10(areas)
    lo, hi = float(la.min()), float(la.max())
    if hi <= lo:
        hi = lo + 1e-9
    return np.histogram(la, bins=bins, range=(lo, hi))


def _undirected_edges(faces):
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0, return_counts=True)


def mesh_stats(positions, faces):
    """Counts, Euler characteristic, area, edge lengths, angle extremes."""
    v = int(len(positions))
    f = int(len(faces))
    if f:
        edges, counts = _undirected_edges(faces)
        e = int(len(edges))
        nb = int(np.sum(counts == 1))
        lengths = np.linalg.norm(positions[edges[:, 0]] - positions[edges[:, 1]], axis=1)
        ang = triangle_angles(positions, faces)
        stats = {
            "min_angle": float(ang.min()),
            "max_angle": float(ang.max()),
            "mean_edge_length": float(lengths.mean()),
        }
    else:
        e = nb = 0
        stats = {"min_angle": 0.0, "max_angle": 0.0, "mean_edge_length": 0.0}
    out = {
        "n_vertices": v,
        "n_faces": f,
        "n_edges": e,
        "euler": v - e + f,
        "n_boundary_edges": nb,
        "total_area": float(face_areas(positions, faces).sum()) if f else 0.0,
    }
    out.update(stats)
    return out


def hole_metrics(positions, faces):
    """Boundary structure summary, or None for a closed mesh.

    Returns {"boundary_ratio", "n_loops", "loops": [{"edges", "radius"}]}
    where radius is half the max pairwise distance of a loop's vertices.
    """
    if len(faces) == 0:
        return None
    edges, counts = _undirected_edges(faces)
    nb = int(np.sum(counts == 1))
    if nb == 0:
        return None
    boundary = edges[counts == 1]
    # walk loops over the boundary graph; open chains count as loops too
    adj = {}
    for u, w in boundary:
        adj.setdefault(int(u), []).append(int(w))
        adj.setdefault(int(w), []).append(int(u))
    seen = set()
    loops = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        comp_set = set(comp)
        n_edges = int(sum(1 for u, w in boundary if int(u) in comp_set and int(w) in comp_set))
        pts = positions[np.array(comp)]
        if len(pts) > 1:
            d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
            radius = 0.5 * float(np.sqrt(d2.max()))
        else:
            radius = 0.0
        loops.append({"edges": n_edges, "radius": radius})
    loops.sort(key=lambda L: -L["edges"])
    return {
        "boundary_ratio": nb / float(len(edges)),
        "n_loops": len(loops),
        "loops": loops,
    }


def mean_abs_sdf(field, points):
    return float(np.mean(np.abs(field.eval_batch(points))))


def evaluate_mesh(field, positions, faces, n_samples=20000, seed=0, reference=None):
    """Full quality report for one mesh, optionally against a reference.

    reference is a (positions, faces) pair; when given, chamfer, f-scores
    and normal consistency are computed over n_samples surface samples
    from each mesh.
    """
    rng = np.random.default_rng(seed)
    pts, nrm = sample_surface(positions, faces, n_samples, rng)
    counts_a, edges_a = angle_histogram(positions, faces)
    counts_r, edges_r = area_histogram(positions, faces)
    report = {
        "stats": mesh_stats(positions, faces),
        "mean_abs_sdf": mean_abs_sdf(field, pts),
        "angle_histogram": {"counts": counts_a.tolist(), "edges": edges_a.tolist()},
        "area_histogram": {"counts": counts_r.tolist(), "edges": edges_r.tolist()},
        "holes": hole_metrics(positions, faces),
    }
    if reference is not None:
        rpos, rfaces = reference
        rpts, rnrm = sample_surface(rpos, rfaces, n_samples, rng)
        report["chamfer"] = chamfer(pts, rpts)
        report["f_score"] = {str(t): v for t, v in f_score(pts, rpts).items()}
        report["normal_consistency"] = normal_consistency(pts, nrm, rpts, rnrm)
    return report
