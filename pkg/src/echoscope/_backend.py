"""Select compiled or pure-Python kernels at import time."""
import os

if os.environ.get("ECHOSCOPE_PURE_PYTHON"):
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
