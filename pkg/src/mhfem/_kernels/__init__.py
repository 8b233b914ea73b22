"""Hot loops with a compiled implementation and a NumPy fallback.

The compiled module is used when it was built and ``MHFEM_PURE_PYTHON`` is
not set to a true value.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("MHFEM_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

locate_points = _impl.locate_points
fd_march = _impl.fd_march

__all__ = ["BACKEND", "locate_points", "fd_march"]
