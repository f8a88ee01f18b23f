"""Backend selection for the grid kernels.

The compiled extension is used when importable; setting the environment
variable ``SLAMSTOP_PURE_PYTHON=1`` forces the Python fallback.
"""
import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

_compiled = None
if os.environ.get("SLAMSTOP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable, using pure Python")

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND = "compiled" if _compiled is not None else "python"

cast_rays = _impl.cast_rays
scan_marks = _impl.scan_marks
count_unknown_visible = _impl.count_unknown_visible
astar = _impl.astar


def backends():
    """Available implementations, compiled first."""
    out = {}
    if _compiled is not None:
        out["compiled"] = _compiled
    out["python"] = _kernels_py
    return out
