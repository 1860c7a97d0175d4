"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback.  Setting the environment variable ``MRF_PURE_PYTHON=1`` before
import forces the fallback (used by the benchmark and for debugging).
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("MRF_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
HAVE_EXTENSION: bool = BACKEND == "cython"

count_subset = _impl.count_subset
pair_counts = _impl.pair_counts
enum_log_weights = _impl.enum_log_weights
gibbs_sweeps = _impl.gibbs_sweeps
