"""Kernel backend selection: compiled extension with pure-numpy fallback.

The compiled ``_kernels`` extension is preferred when importable; set
``PVDAY_PURE_PYTHON=1`` to force the pure backend (used by the benchmark
and the backend-equivalence tests).
"""

import os

from pvday.decomp import _kernels_py

if os.environ.get("PVDAY_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from pvday.decomp import _kernels as _impl  # compiled extension
    except ImportError:
        _impl = _kernels_py

loess_fit = _impl.loess_fit
natural_cubic = _impl.natural_cubic


def backend_name() -> str:
    """Active kernel implementation: 'cython' or 'python'."""
    return _impl.IMPL
