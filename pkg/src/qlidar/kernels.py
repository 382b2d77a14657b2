"""Select the trial kernel at import time.

The compiled extension is used when it is built and importable, unless the
environment variable ``QLIDAR_PURE_PYTHON`` is set to a non-empty value other
than ``0``. Both backends produce identical results.
"""

import os

from . import _kernels_py

pure_simulate_counts = _kernels_py.simulate_counts

try:
    from ._kernels import simulate_counts as compiled_simulate_counts
except ImportError:  # extension not built
    compiled_simulate_counts = None

if compiled_simulate_counts is not None and os.environ.get("QLIDAR_PURE_PYTHON", "0") in ("", "0"):
    simulate_counts = compiled_simulate_counts
    BACKEND = "cython"
else:
    simulate_counts = pure_simulate_counts
    BACKEND = "python"
