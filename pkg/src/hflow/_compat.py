"""Kernel lane selection: numba @njit loops vs pure-numpy fallbacks.

Every hot kernel in ``hflow._kernels`` ships in two implementations. The
numba lane is used whenever numba imports cleanly; set ``HFLOW_NO_NUMBA=1``
to force the vectorized numpy lane (debugging, or environments without a
working JIT). ``benchmarks/bench_kernels.py`` times the two lanes against
each other.
"""

import os

_flag = os.environ.get("HFLOW_NO_NUMBA", "").strip().lower()
NUMPY_LANE_FORCED = _flag in {"1", "true", "yes", "on"}

HAVE_NUMBA = False
if not NUMPY_LANE_FORCED:
    try:
        from numba import njit  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False

if not HAVE_NUMBA:

    def njit(*args, **kwargs):  # noqa: F811
        """Decorator stand-in so @njit-decorated code imports on the numpy lane."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


USE_NUMBA = HAVE_NUMBA
