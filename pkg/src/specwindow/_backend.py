"""Select the cycle kernel: compiled extension if importable, else pure Python.

Set SPECWINDOW_PURE=1 to force the pure-Python kernel.
"""
import os

from . import _kernel_py

if os.environ.get("SPECWINDOW_PURE", "") not in ("", "0"):
    kernel = _kernel_py
else:
    try:
        from . import _ckernel as kernel
    except ImportError:
        kernel = _kernel_py

BACKEND = kernel.BACKEND
