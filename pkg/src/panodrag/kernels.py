"""Backend selection for the sampling kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``PANODRAG_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy fallback is used. ``BACKEND`` names the active
one.
"""
import os

from . import _kernels_py

_force_pure = os.environ.get("PANODRAG_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

bilinear_remap = _impl.bilinear_remap
nearest_remap = _impl.nearest_remap
region_l1 = _impl.region_l1

__all__ = ["BACKEND", "bilinear_remap", "nearest_remap", "region_l1"]
