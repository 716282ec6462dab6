"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the NumPy
implementation takes over. Set VIBFAULT_BACKEND=numpy or =compiled to force
one (forcing the compiled backend raises if the extension is missing).
"""

import os

from . import _numpy_core

_requested = os.environ.get("VIBFAULT_BACKEND", "").strip().lower()

if _requested == "numpy":
    _impl = _numpy_core
    BACKEND = "numpy"
else:
    try:
        from . import _compiled as _impl
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _numpy_core
        BACKEND = "numpy"

conv1d_forward = _impl.conv1d_forward
conv1d_backward = _impl.conv1d_backward
maxpool1d_forward = _impl.maxpool1d_forward
maxpool1d_backward = _impl.maxpool1d_backward
