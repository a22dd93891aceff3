"""Triangle mesh file I/O: ASCII OBJ and binary little-endian PLY.

OBJ vertices are written with 17 significant digits so that
write -> read round-trips reproduce float64 coordinates exactly.
"""

import numpy as np


def write_obj(path, positions, faces):
    positions = np.asarray(positions, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    lines = []
    for p in positions:
        lines.append("v %.17g %.17g %.17g" % (p[0], p[1], p[2]))
    for f in faces:
        lines.append("f %d %d %d" % (f[0] + 1, f[1] + 1, f[2] + 1))
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
        if lines:
            fh.write("\n")


def read_obj(path):
    """Returns (positions, faces); only triangular faces are accepted."""
    positions = []
    faces = []
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError("%s:%d: malformed vertex" % (path, ln))
                positions.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif parts[0] == "f":
                verts = [p.split("/")[0] for p in parts[1:]]
                if len(verts) != 3:
                    raise ValueError("%s:%d: face with %d vertices, only triangles supported"
                                     % (path, ln, len(verts)))
                idx = [int(v) for v in verts]
                if any(i < 1 for i in idx):
                    raise ValueError("%s:%d: face indices must be positive" % (path, ln))
                faces.append([i - 1 for i in idx])
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) and faces.max() >= len(positions):
        raise ValueError("%s: face references missing vertex %d" % (path, int(faces.max()) + 1))
    return positions, faces


def write_ply(path, positions, faces):
    positions = np.ascontiguousarray(positions, dtype="<f8")
    faces = np.ascontiguousarray(faces, dtype="<u4")
    header = "\n".join([
        "ply",
        "format binary_little_endian 1.0",
        "element vertex %d" % len(positions),
        "property double x",
        "property double y",
        "property double z",
        "element face %d" % len(faces),
        "property list uchar uint vertex_indices",
        "end_header",
        "",
    ])
    counts = np.full(len(faces), 3, dtype="<u1")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(positions.tobytes())
        # each face record is a uint8 count followed by three uint32 ids
        rec = np.empty(len(faces), dtype=[("n", "<u1"), ("idx", "<u4", (3,))])
        rec["n"] = counts
        rec["idx"] = faces
        fh.write(rec.tobytes())


def normalize_mesh(positions):
    """Center on the vertex mean and scale the largest extent to 1.

    Returns (new_positions, center, scale); raises ValueError when the
    mesh is empty or has no spatial extent.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.size == 0:
        raise ValueError("cannot normalize an empty mesh")
    center = positions.mean(axis=0)
    shifted = positions - center
    extent = float(np.max(shifted.max(axis=0) - shifted.min(axis=0)))
    if extent <= 0.0 or not np.isfinite(extent):
        raise ValueError("degenerate mesh: zero spatial extent")
    return shifted / extent, center, extent
