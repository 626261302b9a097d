"""Runtime switches for the JIT-compiled kernels.

Set ``ONEWAY_CQED_DISABLE_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``)
to route every hot loop through the pure-numpy implementations instead.
"""

import os


def _flag(name: str) -> bool:
    return os.getenv(name, "0").strip().lower() not in ("", "0", "false", "no")


DISABLE_NUMBA = _flag("ONEWAY_CQED_DISABLE_NUMBA") or _flag("NUMBA_DISABLE_JIT")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLE_NUMBA


def njit_opts() -> dict:
    # fastmath off: the integrators are checked against 1e-12 identities
    return dict(cache=True, nogil=True, fastmath=False, error_model="numpy")
