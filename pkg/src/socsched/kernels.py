"""Hot-loop backend selection.

The compiled ``_ckernels`` extension is preferred; set ``SOCSCHED_PURE_PYTHON=1``
to force the pure-Python fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("SOCSCHED_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

insertion_start = _impl.insertion_start
span_returns = _impl.span_returns
horizon_returns = _impl.horizon_returns

__all__ = ["BACKEND", "insertion_start", "span_returns", "horizon_returns"]
