"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``ISOFLOW_PURE_PYTHON=1`` is set, the pure-Python reference is used.
``BACKEND`` names the active one.
"""
import os

from . import _kernels_py

EUCLIDEAN = _kernels_py.EUCLIDEAN
SPHERICAL = _kernels_py.SPHERICAL

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("ISOFLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

root_sums = _impl.root_sums
field = _impl.field
dp5_step = _impl.dp5_step


def backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
