"""Kernel backend selection.

The hot numeric loops (all-pairs steering solves, schedule propagation on
dt grids, point-feasibility sweeps, circularization-cost scans) exist in two
interchangeable implementations:

* :mod:`cwhfmt.kernels_numba` -- ``@njit``-compiled loops (default when numba
  imports cleanly),
* :mod:`cwhfmt.kernels_numpy` -- vectorized pure-numpy fallback.

Selection is controlled by the ``CWHFMT_BACKEND`` environment variable
(``numba`` or ``numpy``).  ``CWHFMT_THREADS`` caps the numba threading layer
as well as any process pools spawned by the CLI.  Both backends implement the
same function signatures and agree to floating-point noise; see
``scripts/benchmark_backends.py`` for the comparison harness.
"""

from __future__ import annotations

import os

_BACKEND = None
_BACKEND_NAME = None


def thread_cap() -> int:
    """Worker/thread budget from CWHFMT_THREADS (0 or unset = all cores)."""
    raw = os.environ.get("CWHFMT_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    n = int(raw)
    if n <= 0:
        return os.cpu_count() or 1
    return n


def _resolve():
    global _BACKEND, _BACKEND_NAME
    if _BACKEND is not None:
        return _BACKEND
    choice = os.environ.get("CWHFMT_BACKEND", "numba").strip().lower()
    if choice not in ("numba", "numpy"):
        raise ValueError(f"CWHFMT_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numba":
        try:
            from . import kernels_numba as impl

            impl.configure_threads(thread_cap())
        except ImportError:
            from . import kernels_numpy as impl

            choice = "numpy"
    else:
        from . import kernels_numpy as impl
    _BACKEND = impl
    _BACKEND_NAME = choice
    return impl


def get_kernels():
    """Return the active kernel module (resolved once per process)."""
    return _resolve()


def backend_name() -> str:
    _resolve()
    return _BACKEND_NAME
