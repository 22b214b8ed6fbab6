"""Backend selection for the accelerated kernels.

Two environment variables control execution:

* ``THO_BACKEND`` -- ``auto`` (default, use numba when importable),
  ``numba`` (require numba), or ``numpy`` (force the pure-numpy fallback).
* ``THO_THREADS`` -- caps the numba thread pool for parallel kernels.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def resolve_backend(mode: str) -> bool:
    """Return True when the numba path should be used for ``mode``."""
    mode = mode.strip().lower()
    if mode not in ("auto", "numba", "numpy"):
        raise ValueError(f"THO_BACKEND must be auto|numba|numpy, got {mode!r}")
    if mode == "numba" and not HAVE_NUMBA:
        raise ImportError("THO_BACKEND=numba but numba is not importable")
    if mode == "auto":
        return HAVE_NUMBA
    return mode == "numba"


USE_NUMBA = resolve_backend(os.environ.get("THO_BACKEND", "auto"))


def apply_thread_cap() -> int | None:
    """Apply the THO_THREADS cap to numba's thread pool.

    Returns the applied thread count, or None when the variable is unset
    or numba is unavailable.
    """
    raw = os.environ.get("THO_THREADS")
    if not raw or not HAVE_NUMBA:
        return None
    n = max(1, int(raw))
    n = min(n, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(n)
    return n


apply_thread_cap()
