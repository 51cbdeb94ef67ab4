"""Scalar precision selection.

The default floating-point type is fixed at import time from the
``QPADMM_PRECISION`` environment variable (``double`` or ``single``).
All kernels follow the dtype of the data they receive, so a problem
converted with :meth:`QpProblem.astype` runs in that precision.
"""
import os

import numpy as np

_NAMES = {"double": np.float64, "single": np.float32}


def dtype_for(name):
    try:
        return np.dtype(_NAMES[name])
    except KeyError:
        raise ValueError(f"unknown precision {name!r}, expected 'single' or 'double'") from None


DEFAULT_DTYPE = dtype_for(os.environ.get("QPADMM_PRECISION", "double"))
