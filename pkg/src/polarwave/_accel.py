"""numba switch.

Set ``POLARWAVE_DISABLE_NUMBA=1`` to force the pure-numpy kernels.
"""

import functools
import os

_flag = os.environ.get("POLARWAVE_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    if DISABLED:
        raise ImportError
    import numba as nb

    # skip the TBB probe (the system TBB is too old and numba warns about it)
    if nb.config.THREADING_LAYER == "default":
        nb.config.THREADING_LAYER = "omp"
    HAVE_NUMBA = True
    njit = functools.partial(nb.njit, cache=True, nogil=True)
    prange = nb.prange
except ImportError:
    HAVE_NUMBA = False
    nb = None
    prange = range

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def set_threads(n):
    if HAVE_NUMBA and n and n > 0:
        nb.set_num_threads(min(int(n), nb.config.NUMBA_NUM_THREADS))
