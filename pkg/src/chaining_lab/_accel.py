"""Backend selection for the hot kernels.

Set ``CHAINING_LAB_BACKEND=numpy`` to force the pure-numpy code paths even when
numba is importable. Any other value (or unset) uses numba when available.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None

HAS_NUMBA = numba is not None


def _wanted_backend() -> str:
    name = os.environ.get("CHAINING_LAB_BACKEND", "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"CHAINING_LAB_BACKEND must be 'numba' or 'numpy', got {name!r}")
    return name


USE_NUMBA = HAS_NUMBA and _wanted_backend() == "numba"


def backend() -> str:
    """Name of the backend currently in effect."""
    return "numba" if USE_NUMBA else "numpy"


def set_backend(name: str) -> None:
    """Switch backend at runtime (used by tests and the benchmark)."""
    global USE_NUMBA
    if name == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba is not installed")
        USE_NUMBA = True
    elif name == "numpy":
        USE_NUMBA = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise the identity decorator."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    return numba.njit(*args, **kwargs)
