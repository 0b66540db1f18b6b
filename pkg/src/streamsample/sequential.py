"""Sequential samplers: ordered samples from streams of known size or weight.

A :class:`SequentialSampler` wraps an iterator and yields
``(item, multiplicity)`` pairs in stream order, reading only as far as the
last selected element. Its live state is a handful of scalars regardless of
``k`` and the population size.
"""

from __future__ import annotations

from bisect import bisect_right
from enum import Enum
from itertools import accumulate
from math import exp, inf, log, log1p

from . import _backend
from .core import SampleResult, as_rng
from .errors import (
    ImpossibleSamplingError,
    IncompatibleSamplerError,
    InvalidCapacityError,
    InvalidRequestError,
    InvalidWeightError,
    UsageError,
)
from .reservoir import ReservoirMethod, ReservoirSampler

# Relative slack granted to a weighted stream whose float sum falls a hair
# short of the declared total.
WEIGHT_SLACK = 1e-9


class SequentialMethod(str, Enum):
    D = "AlgD"
    HIDDEN_SHUFFLE = "AlgHiddenShuffle"
    ORDSWR = "AlgORDSWR"
    ORDWSWR = "AlgORDWSWR"

    @property
    def weighted(self) -> bool:
        return self is SequentialMethod.ORDWSWR

    @property
    def replace(self) -> bool:
        return self in (SequentialMethod.ORDSWR, SequentialMethod.ORDWSWR)

    def __str__(self):
        return self.value


def default_sequential_method(weighted: bool, replace: bool) -> SequentialMethod:
    if weighted and not replace:
        raise ImpossibleSamplingError()
    if weighted:
        return SequentialMethod.ORDWSWR
    return SequentialMethod.ORDSWR if replace else SequentialMethod.D


def default_reservoir_method(weighted: bool, replace: bool) -> ReservoirMethod:
    if weighted:
        return ReservoirMethod.WRSWRSKIP if replace else ReservoirMethod.AEXPJ
    return ReservoirMethod.RSWRSKIP if replace else ReservoirMethod.L


def resolve_method(name):
    """Map a method name to its :class:`ReservoirMethod` or :class:`SequentialMethod`."""
    if isinstance(name, (ReservoirMethod, SequentialMethod)):
        return name
    for enum in (ReservoirMethod, SequentialMethod):
        try:
            return enum(name)
        except ValueError:
            pass
    names = [m.value for m in ReservoirMethod] + [m.value for m in SequentialMethod]
    raise ValueError(f"unknown method {name!r} (choose from {', '.join(names)})")


def skip_without_replacement(k: int, n: int, rng) -> int:
    """Draw how many of ``n`` remaining elements to pass before the next of ``k`` picks.

    P(S >= s) = prod_{i<s} (1 - k / (n - i)). Uses Vitter's rejection method
    when ``k`` is sparse in ``n`` and sequential search otherwise.
    """
    if not 1 <= k <= n:
        raise InvalidRequestError(f"need 1 <= k <= n, got k={k}, n={n}")
    return _backend.kernels_for(rng).skip_wor(k, n, rng)


class SortedUniforms:
    """Ascending order statistics of ``k`` iid Uniform(0, 1) draws, one at a time.

    Keeps only the running complement ``1 - u`` and the count left, so the
    state is O(1).
    """

    __slots__ = ("remaining", "_c", "_rng")

    def __init__(self, k: int, rng):
        self.remaining = k
        self._c = 1.0
        self._rng = rng

    def __iter__(self):
        return self

    def __next__(self) -> float:
        if self.remaining <= 0:
            raise StopIteration
        self._c *= exp(log(self._rng.uniform01()) / self.remaining)
        self.remaining -= 1
        return 1.0 - self._c


def next_sorted_threshold(thresholds: SortedUniforms) -> float:
    return next(thresholds)


def _positions_hidden_shuffle(sampler):
    # Backward Fisher-Yates over n slots keeping the last k: step i swaps
    # into the k "high" slots from a uniform index among the first n - i.
    # The low items that end up selected are exactly the distinct low
    # indices hit; the high items kept are a uniform subset of the rest.
    kern, rng = sampler._kernels, sampler.rng
    k, n = sampler.k, sampler.total
    low = n - k
    high_hits = k
    if low > 0:
        high_hits = 0
        i = 0
        while i < k:
            q = (k - i) / (n - i)
            g = log(rng.uniform01()) / log1p(-q)
            if g >= k - i:
                break
            i += int(g)
            # thin the rate-q candidates down to this step's hit probability
            if rng.uniform01() * q < (k - i) / (n - i):
                high_hits += 1
            i += 1
    distinct = 0
    last = -1
    c = 1.0
    for r in range(k - high_hits, 0, -1):
        c *= exp(log(rng.uniform01()) / r)
        pos = min(int((1.0 - c) * low), low - 1)
        if pos != last:
            yield pos
            last = pos
            distinct += 1
    m, avail, pos = k - distinct, k, low
    while m > 0:
        s = kern.skip_wor(m, avail, rng)
        pos += s
        yield pos
        pos += 1
        avail -= s + 1
        m -= 1


_KERNEL_SUFFIX = {
    SequentialMethod.D: "d",
    SequentialMethod.ORDSWR: "ordswr",
    SequentialMethod.ORDWSWR: "ordwswr",
}


class SequentialSampler:
    """Iterator adapter emitting a sample of ``k`` in stream order.

    ``total`` is the population size for unweighted methods and the total
    weight for ``AlgORDWSWR``, whose stream yields ``(item, weight)`` pairs.
    Iteration yields ``(item, multiplicity)``; multiplicities sum to ``k``.
    Once exhausted, or after raising, the sampler stays exhausted.
    """

    def __init__(self, stream, k: int, total, *, method=None, weighted=None, replace=None, rng=None):
        if method is None:
            method = default_sequential_method(bool(weighted), bool(replace))
        else:
            method = resolve_method(method)
            if isinstance(method, ReservoirMethod):
                raise InvalidRequestError(f"{method.value} is a reservoir method")
            if weighted is not None and bool(weighted) != method.weighted:
                if weighted and not (replace if replace is not None else method.replace):
                    raise ImpossibleSamplingError()
                raise InvalidRequestError(f"{method.value} weighted={method.weighted}, got weighted={weighted}")
            if replace is not None and bool(replace) != method.replace:
                raise InvalidRequestError(f"{method.value} replace={method.replace}, got replace={replace}")
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise InvalidCapacityError(f"sample size must be a positive integer, got {k!r}")
        if method.weighted:
            total = float(total)
            if not 0.0 < total < inf:
                raise InvalidWeightError(f"total weight must be positive and finite, got {total!r}")
        else:
            if isinstance(total, bool) or not isinstance(total, int) or total < 1:
                raise InvalidRequestError(f"population size must be a positive integer, got {total!r}")
            if not method.replace and k > total:
                raise InvalidRequestError(f"cannot draw {k} without replacement from {total} elements")
        self.method = method
        self.k = k
        self.total = total
        self.rng = as_rng(rng)
        kern = self._kernels = _backend.kernels_for(self.rng)
        if method.weighted:
            self._st = kern.SeqState(iter(stream), self.rng, k, total_w=total, slack=WEIGHT_SLACK)
        else:
            self._st = kern.SeqState(iter(stream), self.rng, k, total_n=total)
        if method is SequentialMethod.HIDDEN_SHUFFLE:
            self._positions = _positions_hidden_shuffle(self)
            self._step = self._step_positions
            self._drain = None
        else:
            suffix = _KERNEL_SUFFIX[method]
            self._step = getattr(kern, "step_" + suffix)
            self._drain = getattr(kern, "drain_" + suffix)
        self._done = False

    def __repr__(self):
        return (f"SequentialSampler(k={self.k}, total={self.total}, "
                f"method={self.method.value!r}, k_remaining={self.k_remaining})")

    @property
    def k_remaining(self) -> int:
        """Selections not yet emitted."""
        return self._st.k_remaining

    @property
    def n_consumed(self) -> int:
        return self._st.n_consumed

    @property
    def w_consumed(self) -> float:
        return self._st.acc

    @property
    def position(self) -> int:
        """0-based stream position of the last emitted element (-1 before the first)."""
        return self._st.position

    def _step_positions(self, st):
        pos = next(self._positions, None)
        if pos is None:
            return None
        item = self._kernels.fetch(st, pos)
        st.k_remaining -= 1
        return item, 1

    def _finish(self):
        self._done = True
        self._st.stream = iter(())

    def __iter__(self):
        return self

    def __next__(self):
        if self._done:
            raise StopIteration
        try:
            got = self._step(self._st)
        except BaseException:
            self._finish()
            raise
        if got is None:
            self._finish()
            raise StopIteration
        return got

    def sample(self) -> SampleResult:
        """Drain the remaining emissions into a :class:`SampleResult`, multiplicities expanded."""
        items = []
        if not self._done:
            try:
                if self._drain is not None:
                    self._drain(self._st, items)
                else:
                    for item, mult in self:
                        items.extend([item] * mult)
            finally:
                self._finish()
        return SampleResult(
            items=items,
            method=self.method.value,
            n_seen=self.n_consumed,
            w_seen=self.w_consumed if self.method.weighted else None,
        )


def _sample_items(sample) -> list:
    return list(sample.items) if isinstance(sample, SampleResult) else list(sample)


def combine(samples, partition_weights, k: int | None = None, rng=None) -> SampleResult:
    """Merge with-replacement samples from disjoint partitions into one sample.

    Each output draw lands in partition ``j`` with probability proportional
    to ``partition_weights[j]`` (the partition's total weight, or its item
    count when unweighted), and takes one of that partition's local draws.
    Draws taken from a partition are distinct local draws, so the output is
    ``k`` iid draws from the whole stream. The output keeps stream order.
    """
    samples = list(samples)
    weights = [float(w) for w in partition_weights]
    if len(samples) != len(weights):
        raise UsageError(f"{len(samples)} samples but {len(weights)} partition weights")
    if not samples:
        raise UsageError("combine needs at least one partition")
    for w in weights:
        if not 0.0 < w < inf:
            raise InvalidWeightError(f"partition weights must be positive and finite, got {w!r}")
    local = [_sample_items(s) for s in samples]
    sizes = {len(x) for x in local}
    if len(sizes) != 1:
        raise IncompatibleSamplerError(f"local samples must share one size, got sizes {sorted(sizes)}")
    size = sizes.pop()
    k = size if k is None else k
    if not 1 <= k <= size:
        raise InvalidRequestError(f"combine can emit 1..{size} draws from local samples of size {size}, got {k}")
    rng = as_rng(rng)
    cum = list(accumulate(weights))
    grand = cum[-1]
    counts = [0] * len(local)
    for _ in range(k):
        j = min(bisect_right(cum, rng.uniform01() * grand), len(local) - 1)
        counts[j] += 1
    items = []
    for pool, c in zip(local, counts):
        idx = list(range(size))
        for i in range(c):
            j = i + rng.randbelow(size - i)
            idx[i], idx[j] = idx[j], idx[i]
        items.extend(pool[i] for i in sorted(idx[:c]))
    n_seen = sum(s.n_seen for s in samples if isinstance(s, SampleResult))
    return SampleResult(items=items, method="combine", n_seen=n_seen, w_seen=grand,
                        meta={"partition_counts": counts})


def itsample(stream, k: int, *, weighted: bool = False, replace: bool = False,
             total=None, method=None, rng=None) -> SampleResult:
    """Sample ``k`` elements from any iterable in one pass.

    With ``total`` (population size, or total weight when ``weighted``) a
    sequential method is used; otherwise a reservoir method. Weighted streams
    yield ``(item, weight)`` pairs.
    """
    rng = as_rng(rng)
    if method is not None:
        m = resolve_method(method)
        if isinstance(m, SequentialMethod):
            if total is None:
                raise InvalidRequestError(f"{m.value} needs the population size or total weight")
            return SequentialSampler(stream, k, total, method=m, rng=rng).sample()
        return ReservoirSampler(k, m, rng=rng).fit_many(stream).value()
    if total is not None:
        return SequentialSampler(stream, k, total, weighted=weighted, replace=replace, rng=rng).sample()
    m = default_reservoir_method(weighted, replace)
    return ReservoirSampler(k, m, rng=rng).fit_many(stream).value()
