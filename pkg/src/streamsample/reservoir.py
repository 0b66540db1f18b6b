"""Fixed-size samplers updated one element at a time.

A :class:`ReservoirSampler` holds a sample that is valid for the prefix of
the stream seen so far. Six methods are available:

============== ========== =========== ==========================
method         weighted   replacement per-element cost
============== ========== =========== ==========================
AlgR           no         without     one variate per element
AlgL           no         without     skips, O(K log(N/K)) total
AlgRSWRSKIP    no         with        skips, O(K log N) total
AlgARes        yes        without     one key per element
AlgAExpJ       yes        without     exponential jumps
AlgWRSWRSKIP   yes        with        weight-threshold jumps
============== ========== =========== ==========================

Samplers built over disjoint partitions of a stream can be combined with
:func:`merge`; the result has the law of one sampler run over the
concatenation.
"""

from __future__ import annotations

from array import array
from enum import Enum
from heapq import nlargest
from itertools import chain
from operator import itemgetter
from math import exp, log

from . import _backend
from .core import SampleResult, as_rng
from .errors import IncompatibleSamplerError, InvalidCapacityError, UsageError
from .rng import _splitmix64


class ReservoirMethod(str, Enum):
    R = "AlgR"
    L = "AlgL"
    RSWRSKIP = "AlgRSWRSKIP"
    ARES = "AlgARes"
    AEXPJ = "AlgAExpJ"
    WRSWRSKIP = "AlgWRSWRSKIP"

    @property
    def weighted(self) -> bool:
        return self in (ReservoirMethod.ARES, ReservoirMethod.AEXPJ, ReservoirMethod.WRSWRSKIP)

    @property
    def replace(self) -> bool:
        return self in (ReservoirMethod.RSWRSKIP, ReservoirMethod.WRSWRSKIP)

    @property
    def keyed(self) -> bool:
        return self in (ReservoirMethod.ARES, ReservoirMethod.AEXPJ)

    def __str__(self):
        return self.value


_KERNEL_NAME = {
    ReservoirMethod.R: "fit_r",
    ReservoirMethod.L: "fit_l",
    ReservoirMethod.RSWRSKIP: "fit_rswr",
    ReservoirMethod.ARES: "fit_ares",
    ReservoirMethod.AEXPJ: "fit_aexpj",
    ReservoirMethod.WRSWRSKIP: "fit_wrswr",
}


def parse_method(method) -> ReservoirMethod:
    try:
        return ReservoirMethod(str(method))
    except ValueError:
        names = ", ".join(m.value for m in ReservoirMethod)
        raise ValueError(f"unknown reservoir method {method!r} (choose from {names})") from None


class ReservoirSampler:
    """Single-pass sampler of ``k`` items from a stream of unknown length.

    Weighted methods take ``fit(item, weight)``; ``fit_many`` takes an
    iterable of items, or of ``(item, weight)`` pairs for weighted methods,
    and runs the whole loop inside the kernel.

    >>> s = ReservoirSampler(3, "AlgL", rng=7)
    >>> s.fit_many(range(1000)).value().n_seen
    1000
    """

    def __init__(self, k: int, method="AlgL", rng=None):
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise InvalidCapacityError(f"reservoir capacity must be a positive integer, got {k!r}")
        self.method = parse_method(method)
        self.k = k
        self.rng = as_rng(rng)
        self.buffer: list = []
        # keyed methods: min-heap of log keys, parallel to ``buffer``
        self.keys = array("d", bytes(8 * k)) if self.method.keyed else None
        self.n_seen = 0
        self.w_seen = 0.0
        # skip counter (AlgL, AlgRSWRSKIP), weight still to jump (AlgAExpJ),
        # or cumulative-weight target (AlgWRSWRSKIP)
        self.skip = 0.0 if self.method.weighted else 0
        self.aux_w = 0.0
        self._kernels = _backend.kernels_for(self.rng)
        self._fit = getattr(self._kernels, _KERNEL_NAME[self.method])

    def __repr__(self):
        return (f"ReservoirSampler(k={self.k}, method={self.method.value!r}, "
                f"n_seen={self.n_seen})")

    @property
    def weighted(self) -> bool:
        return self.method.weighted

    @property
    def replace(self) -> bool:
        return self.method.replace

    def fit(self, item, weight=None) -> ReservoirSampler:
        if self.method.weighted:
            if weight is None:
                raise UsageError(f"{self.method.value} is weighted; fit(item, weight) needs a weight")
            self._fit(self, ((item, weight),))
        else:
            if weight is not None:
                raise UsageError(f"{self.method.value} is unweighted; do not pass a weight")
            self._fit(self, (item,))
        return self

    def fit_many(self, stream) -> ReservoirSampler:
        self._fit(self, stream)
        return self

    def value(self) -> SampleResult:
        return SampleResult(
            items=list(self.buffer),
            method=self.method.value,
            n_seen=self.n_seen,
            w_seen=self.w_seen if self.method.weighted else None,
        )

    def log_keys(self) -> list[float]:
        """Log priority keys of the retained items (keyed methods only)."""
        return list(self.keys[:len(self.buffer)]) if self.method.keyed else []

    def __len__(self):
        return len(self.buffer)

    def merge(self, *others, rng=None) -> ReservoirSampler:
        return merge(self, *others, rng=rng)


def _derived_rng(samplers):
    x = 0
    for s in samplers:
        for word in s.rng.getstate()[:4]:
            x, _ = _splitmix64(x ^ word)
    _, seed = _splitmix64(x)
    return type(samplers[0].rng)(seed)


def _take_without_replacement(pool: list, m: int, rng) -> list:
    pool = list(pool)
    out = []
    for i in range(m):
        j = i + rng.randbelow(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
        out.append(pool[i])
    return out


def _blank_like(s: ReservoirSampler, rng) -> ReservoirSampler:
    return ReservoirSampler(s.k, s.method, rng=rng)


def _merge_uniform(a, b, out, rng, kern):
    n = a.n_seen + b.n_seen
    m = min(out.k, n)
    red, total, from_a = a.n_seen, n, 0
    for _ in range(m):
        if rng.randbelow(total) < red:
            from_a += 1
            red -= 1
        total -= 1
    out.buffer = (_take_without_replacement(a.buffer, from_a, rng)
                  + _take_without_replacement(b.buffer, m - from_a, rng))
    out.n_seen = n
    if out.method is ReservoirMethod.L and n >= out.k:
        # Algorithm L's running quantity is the K-th smallest of n uniforms,
        # independent of which items are held
        c = 1.0
        for j in range(out.k):
            c *= exp(log(rng.uniform01()) / (n - j))
        out.aux_w = 1.0 - c
        out.skip = kern.geometric_skip(rng, out.aux_w)


def _merge_replacement(a, b, out, rng, kern):
    k = out.k
    weighted = out.method.weighted
    mass_a = a.w_seen if weighted else a.n_seen
    mass_b = b.w_seen if weighted else b.n_seen
    pools = [list(a.buffer), list(b.buffer)]
    left = [len(pools[0]), len(pools[1])]
    buf = []
    for _ in range(k):
        if weighted:
            src = 0 if rng.uniform01() * (mass_a + mass_b) < mass_a else 1
        else:
            src = 0 if rng.randbelow(mass_a + mass_b) < mass_a else 1
        # distinct source slots keep the merged slots independent draws
        pool = pools[src]
        j = rng.randbelow(left[src])
        buf.append(pool[j])
        left[src] -= 1
        pool[j] = pool[left[src]]
    out.buffer = buf
    out.n_seen = a.n_seen + b.n_seen
    out.w_seen = a.w_seen + b.w_seen
    if weighted:
        out.skip = kern.wrswr_target(rng, out.w_seen, k)
    else:
        out.skip = kern.rswr_skip(rng, out.n_seen, k)


def _merge_keyed(a, b, out, rng, kern):
    pairs = chain(zip(a.keys, a.buffer), zip(b.keys, b.buffer))
    # ascending key order is a valid min-heap
    top = sorted(nlargest(out.k, pairs, key=itemgetter(0)), key=itemgetter(0))
    for i, (key, item) in enumerate(top):
        out.keys[i] = key
        out.buffer.append(item)
    out.n_seen = a.n_seen + b.n_seen
    out.w_seen = a.w_seen + b.w_seen
    if out.method is ReservoirMethod.AEXPJ and len(top) == out.k:
        out.skip = kern.expj_jump(rng, out.keys[0])


def _copy(s: ReservoirSampler, rng) -> ReservoirSampler:
    out = _blank_like(s, rng)
    out.buffer = list(s.buffer)
    if s.keys is not None:
        out.keys = array("d", s.keys)
    out.n_seen, out.w_seen, out.skip, out.aux_w = s.n_seen, s.w_seen, s.skip, s.aux_w
    return out


def _merge2(a, b, rng):
    if a.n_seen == 0:
        return _copy(b, rng)
    if b.n_seen == 0:
        return _copy(a, rng)
    out = _blank_like(a, rng)
    kern = out._kernels
    if a.method.keyed:
        _merge_keyed(a, b, out, rng, kern)
    elif a.method.replace:
        _merge_replacement(a, b, out, rng, kern)
    else:
        _merge_uniform(a, b, out, rng, kern)
    return out


def merge(*samplers: ReservoirSampler, rng=None) -> ReservoirSampler:
    """Combine samplers run over disjoint partitions into a fresh sampler.

    Inputs are left untouched. The merged sampler keeps the method and
    capacity of its inputs and can go on fitting. When ``rng`` is omitted the
    merged generator is seeded from the inputs' generator states.
    """
    if not samplers:
        raise UsageError("merge needs at least one sampler")
    first = samplers[0]
    for s in samplers[1:]:
        if s.method is not first.method or s.k != first.k:
            raise IncompatibleSamplerError(
                f"cannot merge {s.method.value}(k={s.k}) into {first.method.value}(k={first.k})"
            )
    rng = _derived_rng(samplers) if rng is None else as_rng(rng)
    out = _copy(first, rng)
    for s in samplers[1:]:
        out = _merge2(out, s, rng)
    return out
