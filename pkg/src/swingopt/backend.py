"""Backend selection: numba-jitted kernels vs pure-numpy fallbacks.

The lane is picked once at import from the environment variable
``SWINGOPT_BACKEND``:

* ``numba``  - require numba, fail loudly if it cannot be imported
* ``numpy``  - pure-numpy kernels only (no JIT compilation at all)
* ``auto``   - numba when importable, numpy otherwise (default)

Numeric results are identical across thread counts within a lane; the two
lanes agree to floating-point tolerance (they share the same algorithms but
vectorized numpy transcendentals are not bit-for-bit libm).
"""

from __future__ import annotations

import os

_choice = os.environ.get("SWINGOPT_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"SWINGOPT_BACKEND must be auto|numba|numpy, got {_choice!r}")

if _choice == "numpy":
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _choice != "numpy"


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """numba.njit when the numba lane is active, identity decorator otherwise."""
    if USE_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def deco(fn):
        return fn

    return deco


def set_num_threads(n: int) -> None:
    """Cap numba's thread pool. No-op on the numpy lane; never changes results."""
    if USE_NUMBA and n > 0:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
