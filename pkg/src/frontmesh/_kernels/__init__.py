"""Kernel backend selection.

Prefers the compiled extension and falls back to the pure-Python module
when it is missing.  Set FRONTMESH_KERNELS=python or =native to force a
backend; forcing native raises if the extension did not build.
"""

import os

from . import fallback

_choice = os.environ.get("FRONTMESH_KERNELS", "")
if _choice == "python":
    impl = fallback
    BACKEND = "python"
else:
    try:
        from . import _native as impl
        BACKEND = "native"
    except ImportError:
        if _choice == "native":
            raise
        impl = fallback
        BACKEND = "python"

OP_SPHERE = fallback.OP_SPHERE
OP_BOX = fallback.OP_BOX
OP_TORUS = fallback.OP_TORUS
OP_PLANE = fallback.OP_PLANE
OP_UNION = fallback.OP_UNION
OP_INTERSECT = fallback.OP_INTERSECT
OP_SMOOTH_UNION = fallback.OP_SMOOTH_UNION
MAX_STACK = fallback.MAX_STACK

eval_one = impl.eval_one
eval_batch = impl.eval_batch
grad_one = impl.grad_one
project = impl.project
curvature = impl.curvature
pit_one = impl.pit_one
seg_one = impl.seg_one
overlap_one = impl.overlap_one
overlap_scan = impl.overlap_scan


def backend_name():
    """Name of the backend in use, "native" or "python"."""
    return BACKEND
