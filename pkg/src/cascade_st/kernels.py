"""Kernel selection.

The compiled ``_kernels`` extension is used when it was built; otherwise the
pure-Python module is loaded. Set ``CASCADE_ST_PURE_PYTHON=1`` to force the
fallback (useful for benchmarking and for debugging with a Python tracer).
"""

from __future__ import annotations

import os

from . import _kernels_py

IMPLEMENTATION = "python"
_impl = _kernels_py

if os.environ.get("CASCADE_ST_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        IMPLEMENTATION = "cython"

edit_ops = _impl.edit_ops
rms_dbfs = _impl.rms_dbfs

__all__ = ["IMPLEMENTATION", "edit_ops", "rms_dbfs"]
