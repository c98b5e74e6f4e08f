"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``ONESTEP_PURE_PYTHON=1`` to force the fallback.
"""

import os

from onestep import _fallback

if os.environ.get("ONESTEP_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from onestep import _ext as kernels
    except ImportError:
        kernels = _fallback
        BACKEND = "python"
    else:
        BACKEND = "cython"
