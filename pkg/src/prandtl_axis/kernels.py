"""Backend selection for the time-stepping kernels.

The compiled Cython module is used when it has been built; otherwise the
numpy implementations are used. Setting ``PRANDTL_AXIS_KERNELS=python``
forces the fallback.
"""
import os

from . import _kernels_py

_forced = os.environ.get("PRANDTL_AXIS_KERNELS", "").strip().lower()

if _forced == "python":
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

cumtrapz = _impl.cumtrapz
d1 = _impl.d1
d2 = _impl.d2
transport_b = _impl.transport_b
implicit_solve = _impl.implicit_solve

__all__ = ["BACKEND", "cumtrapz", "d1", "d2", "transport_b", "implicit_solve"]
