"""Select the interval kernel backend at import time.

Set ``TIMINGCERT_PURE_PYTHON=1`` to force the numpy fallback even when the
compiled extension is available.
"""
import os

from . import _pykernels

if os.environ.get("TIMINGCERT_PURE_PYTHON"):
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        kernels = _pykernels
        BACKEND = "python"
    else:
        BACKEND = "cython"

__all__ = ["BACKEND", "kernels"]
