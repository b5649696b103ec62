"""Numba switch.

Hot loop kernels are compiled with ``numba.njit`` when numba imports and the
environment variable ``SCHMIDTPREP_DISABLE_NUMBA`` is unset (or falsy).
Otherwise every caller takes its vectorised numpy path. The flag is read once
at import time.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

DISABLED_BY_ENV = os.environ.get("SCHMIDTPREP_DISABLE_NUMBA", "").strip().lower() not in _FALSY

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(func):
        return func

    if args and callable(args[0]):
        return args[0]
    return wrap
