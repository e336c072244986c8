"""Backend selection for the hot reduction kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback. Set ``RUINOPT_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

_requested = os.environ.get("RUINOPT_BACKEND", "auto").lower()

if _requested == "python":
    backend = _pykernels
else:
    try:
        from . import _ckernels as backend
    except ImportError:
        if _requested == "cython":
            raise
        backend = _pykernels

BACKEND = backend.NAME


def available_backends():
    """Map of backend name to module for every backend importable here."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found


def inflated_totals(offsets, times, sizes, r):
    return backend.inflated_totals(offsets, times, sizes, float(r))


def malliavin_sums(offsets, times, sizes, r, a, horizon):
    return backend.malliavin_sums(offsets, times, sizes, float(r), float(a), float(horizon))


def path_ruin(offsets, times, sizes, r, u, drift, b):
    return backend.path_ruin(offsets, times, sizes, float(r), float(u), float(drift), float(b))


def inverse_w4_sums(offsets, times, a, horizon):
    return backend.inverse_w4_sums(offsets, times, float(a), float(horizon))
