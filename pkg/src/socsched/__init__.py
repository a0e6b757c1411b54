"""Heterogeneous SoC scheduling simulator with heuristic and learned schedulers."""
from .kernel import Kernel, Trace, run
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["Kernel", "Trace", "run", "KERNEL_BACKEND", "__version__"]
