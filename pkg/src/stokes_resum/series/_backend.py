"""Select the convolution kernel: compiled if available, else pure Python.

Set ``STOKES_RESUM_PURE=1`` to force the pure-Python kernel.
"""

import os

from . import _kernels_py

kernel = _kernels_py
if os.environ.get("STOKES_RESUM_PURE") != "1":
    try:
        from . import _kernels as kernel
    except ImportError:
        kernel = _kernels_py

convolve = kernel.convolve
BACKEND = kernel.BACKEND
