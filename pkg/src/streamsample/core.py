from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from . import _backend


def rng_new(seed: int = 0, backend: str | None = None):
    """Return a seeded generator for the active (or the named) backend.

    ``backend`` is ``"python"`` or ``"cython"``; the same seed gives the same
    variate stream on both.
    """
    if backend is None:
        return _backend.Rng(seed)
    if backend == "python":
        return _backend.PyRng(seed)
    if backend == "cython":
        if not _backend.compiled_available():
            raise RuntimeError("the compiled core is not built")
        return _backend._ckernels.CRng(seed)
    raise ValueError(f"unknown backend {backend!r}")


def as_rng(rng):
    if rng is None:
        return rng_new(0)
    if isinstance(rng, int) and not isinstance(rng, bool):
        return rng_new(rng)
    _backend.kernels_for(rng)
    return rng


@dataclass
class SampleResult:
    """A drawn sample plus the counters it was drawn from."""

    items: list
    method: str
    n_seen: int = 0
    w_seen: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)
