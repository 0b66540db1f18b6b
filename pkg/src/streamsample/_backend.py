"""Pick the kernel backend at import time.

The compiled core is used when it was built and ``STREAMSAMPLE_PURE_PYTHON``
is unset; otherwise the pure-Python kernels are used. Each RNG class is
bound to its own kernel module, so samplers dispatch on the type of the
generator they hold and both backends can coexist in one process.
"""

from __future__ import annotations

import os

from . import _pykernels
from .rng import PyRng

_KERNELS = {PyRng: _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    _KERNELS[_ckernels.CRng] = _ckernels

if _ckernels is not None and os.environ.get("STREAMSAMPLE_PURE_PYTHON", "") in ("", "0"):
    Rng = _ckernels.CRng
    kernels = _ckernels
else:
    Rng = PyRng
    kernels = _pykernels

BACKEND = kernels.BACKEND
RNG_TYPES = tuple(_KERNELS)


def kernels_for(rng):
    try:
        return _KERNELS[type(rng)]
    except KeyError:
        raise TypeError(
            f"expected a generator from streamsample.rng_new, got {type(rng).__name__}"
        ) from None


def compiled_available() -> bool:
    return _ckernels is not None
