"""Backend switch for the compiled kernels.

Set ``FTNET_NUMBA=0`` in the environment before import to run every hot
kernel through its pure-numpy implementation instead of numba.
"""
import os

_FLAG = os.environ.get("FTNET_NUMBA", "1").strip().lower()
USE_NUMBA = _FLAG not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False
    else:
        # the bundled TBB is often too old; try OpenMP first
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op when numba is off.

    The decorated function is always importable; callers decide which
    implementation to dispatch to through :data:`USE_NUMBA`.
    """
    if not USE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return numba.njit(*args, **kwargs)


def backend():
    return "numba" if USE_NUMBA else "numpy"
