"""Kernel selection: the compiled extension when available, numpy otherwise.

Set ``LYAPWANDER_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("LYAPWANDER_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

trace_lognorm = _impl.trace_lognorm
iterate_points = _impl.iterate_points
first_hits = _impl.first_hits
cell_index = _kernels_py.cell_index
OK, BOUNDARY, OUTSIDE = _kernels_py.OK, _kernels_py.BOUNDARY, _kernels_py.OUTSIDE


def backends():
    """Available implementations by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
