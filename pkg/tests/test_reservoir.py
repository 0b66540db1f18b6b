import math
import random

import pytest

from streamsample import (
    IncompatibleSamplerError,
    InvalidCapacityError,
    InvalidWeightError,
    ReservoirMethod,
    ReservoirSampler,
    UsageError,
    merge,
)
from streamsample.core import rng_new
from streamsample.oracle import check_law, exact_law_with_replacement, exact_law_without_replacement

UNWEIGHTED = ["AlgR", "AlgL", "AlgRSWRSKIP"]
WEIGHTED = ["AlgARes", "AlgAExpJ", "AlgWRSWRSKIP"]
TRIALS = 20_000


def _weighted(ws, offset=0):
    return [(offset + i, w) for i, w in enumerate(ws)]


def _law_runner(method, k, stream, backend):
    def run(seed):
        s = ReservoirSampler(k, method, rng=rng_new(seed, backend)).fit_many(stream)
        return tuple(sorted(s.value().items))
    return run


@pytest.mark.parametrize("k", [0, -3, 2.5, True, "3"])
def test_invalid_capacity(k):
    with pytest.raises(InvalidCapacityError):
        ReservoirSampler(k, "AlgL")


def test_unknown_method():
    with pytest.raises(ValueError, match="unknown reservoir method"):
        ReservoirSampler(3, "AlgZ")


def test_method_properties():
    assert ReservoirMethod("AlgAExpJ").weighted and ReservoirMethod("AlgAExpJ").keyed
    assert ReservoirMethod("AlgRSWRSKIP").replace and not ReservoirMethod("AlgRSWRSKIP").weighted
    assert str(ReservoirMethod.L) == "AlgL"


@pytest.mark.parametrize("method", WEIGHTED)
def test_weighted_fit_needs_weight(method):
    s = ReservoirSampler(2, method)
    with pytest.raises(UsageError):
        s.fit("a")


@pytest.mark.parametrize("method", UNWEIGHTED)
def test_unweighted_fit_rejects_weight(method):
    with pytest.raises(UsageError):
        ReservoirSampler(2, method).fit("a", 2.0)


@pytest.mark.parametrize("method", WEIGHTED)
@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf, "x"])
def test_invalid_weights(method, bad, backend):
    s = ReservoirSampler(2, method, rng=rng_new(0, backend))
    with pytest.raises((InvalidWeightError, ValueError)):
        s.fit_many([("a", 1.0), ("b", bad)])
    assert s.n_seen == 1


@pytest.mark.parametrize("method", ["AlgR", "AlgL", "AlgARes", "AlgAExpJ"])
def test_short_stream_returns_everything(method, backend):
    stream = _weighted([1.0, 2.0, 3.0]) if method.startswith("AlgA") else [0, 1, 2]
    s = ReservoirSampler(5, method, rng=rng_new(1, backend)).fit_many(stream)
    assert sorted(s.value().items) == [0, 1, 2]
    assert s.value().n_seen == 3 and len(s) == 3


@pytest.mark.parametrize("method", ["AlgRSWRSKIP", "AlgWRSWRSKIP"])
def test_replacement_fills_every_slot(method, backend):
    stream = _weighted([1.0, 2.0]) if method == "AlgWRSWRSKIP" else [0, 1]
    s = ReservoirSampler(6, method, rng=rng_new(1, backend)).fit_many(stream)
    items = s.value().items
    assert len(items) == 6 and set(items) <= {0, 1}


def test_empty_sampler_value():
    res = ReservoirSampler(3, "AlgL").value()
    assert res.items == [] and res.n_seen == 0 and res.w_seen is None


def test_weight_seen_reported(backend):
    s = ReservoirSampler(2, "AlgAExpJ", rng=rng_new(0, backend)).fit_many(_weighted([0.5, 1.5, 2.0]))
    assert s.value().w_seen == pytest.approx(4.0)


@pytest.mark.parametrize("method", UNWEIGHTED + WEIGHTED)
def test_fit_many_equals_repeated_fit(method, backend):
    stream = _weighted([1 + (i % 5) for i in range(300)]) if method in WEIGHTED else list(range(300))
    a = ReservoirSampler(7, method, rng=rng_new(4, backend)).fit_many(stream)
    b = ReservoirSampler(7, method, rng=rng_new(4, backend))
    for rec in stream:
        b.fit(*rec) if method in WEIGHTED else b.fit(rec)
    assert a.value().items == b.value().items


def test_fit_many_resumes(backend):
    a = ReservoirSampler(5, "AlgL", rng=rng_new(2, backend)).fit_many(range(1000))
    b = ReservoirSampler(5, "AlgL", rng=rng_new(2, backend)).fit_many(range(400)).fit_many(range(400, 1000))
    assert a.value().items == b.value().items


@pytest.mark.parametrize("method", ["AlgARes", "AlgAExpJ"])
def test_keys_form_min_heap(method, backend):
    s = ReservoirSampler(50, method, rng=rng_new(8, backend)).fit_many(_weighted([1 + i % 7 for i in range(5000)]))
    keys = s.log_keys()
    assert len(keys) == 50 and all(k < 0 for k in keys)
    assert all(keys[(i - 1) // 2] <= keys[i] for i in range(1, len(keys)))


def test_unkeyed_methods_have_no_keys():
    assert ReservoirSampler(3, "AlgL").fit_many(range(10)).log_keys() == []


# -- distribution checks against the enumeration oracle --------------------

@pytest.mark.parametrize("method", ["AlgR", "AlgL"])
def test_uniform_subset_law(method, backend):
    law = exact_law_without_replacement(7, 3)
    assert check_law(_law_runner(method, 3, range(7), backend), law, TRIALS).passed


@pytest.mark.parametrize("method", ["AlgARes", "AlgAExpJ"])
def test_weighted_without_replacement_law(method, backend):
    ws = [0.5, 1.0, 2.0, 4.0, 1.5]
    law = exact_law_without_replacement(ws, 3)
    assert check_law(_law_runner(method, 3, _weighted(ws), backend), law, TRIALS).passed


def test_weighted_with_replacement_law(backend):
    ws = [2.0, 1.0, 5.0]
    law = exact_law_with_replacement(ws, 3)
    assert check_law(_law_runner("AlgWRSWRSKIP", 3, _weighted(ws), backend), law, TRIALS).passed


def test_rswr_law_longer_stream(backend):
    law = exact_law_with_replacement(6, 2)
    assert check_law(_law_runner("AlgRSWRSKIP", 2, range(6), backend), law, TRIALS).passed


def test_inclusion_probability_large_n(backend):
    # every item of 40 kept with probability 5/40 by AlgL
    n, k, trials = 40, 5, 8000
    counts = [0] * n
    for seed in range(trials):
        for x in ReservoirSampler(k, "AlgL", rng=rng_new(seed, backend)).fit_many(range(n)).value().items:
            counts[x] += 1
    p = k / n
    sd = math.sqrt(trials * p * (1 - p))
    assert max(abs(c - trials * p) for c in counts) < 4.5 * sd


def test_aexpj_variate_economy_iid_weights(backend):
    # O(K log(N/K)) variates when weights are iid
    gen = random.Random(0)
    stream = [(i, gen.uniform(0.5, 1.5)) for i in range(100_000)]
    rng = rng_new(0, backend)
    ReservoirSampler(10, "AlgAExpJ", rng=rng).fit_many(stream)
    assert rng.draws < 10_000
    rng = rng_new(0, backend)
    ReservoirSampler(10, "AlgARes", rng=rng).fit_many(stream)
    assert rng.draws == 100_000


def test_rswr_variate_economy(backend):
    rng = rng_new(0, backend)
    ReservoirSampler(10, "AlgRSWRSKIP", rng=rng).fit_many(range(100_000))
    assert rng.draws < 10_000


# -- merge -------------------------------------------------------------------

def test_merge_leaves_inputs_untouched(backend):
    a = ReservoirSampler(3, "AlgL", rng=rng_new(1, backend)).fit_many(range(10))
    b = ReservoirSampler(3, "AlgL", rng=rng_new(2, backend)).fit_many(range(10, 30))
    before = (list(a.buffer), a.n_seen, a.rng.getstate(), list(b.buffer), b.n_seen)
    m = merge(a, b)
    assert (list(a.buffer), a.n_seen, a.rng.getstate(), list(b.buffer), b.n_seen) == before
    assert m.n_seen == 30 and len(m) == 3 and m is not a


def test_merge_is_deterministic(backend):
    def build():
        a = ReservoirSampler(3, "AlgAExpJ", rng=rng_new(1, backend)).fit_many(_weighted([1, 2, 3, 4]))
        b = ReservoirSampler(3, "AlgAExpJ", rng=rng_new(2, backend)).fit_many(_weighted([5, 6], 4))
        return a.merge(b).value().items
    assert build() == build()


def test_merge_incompatible():
    with pytest.raises(IncompatibleSamplerError):
        merge(ReservoirSampler(3, "AlgL"), ReservoirSampler(3, "AlgR"))
    with pytest.raises(IncompatibleSamplerError):
        merge(ReservoirSampler(3, "AlgL"), ReservoirSampler(4, "AlgL"))
    with pytest.raises(UsageError):
        merge()


def test_merge_with_empty(backend):
    a = ReservoirSampler(2, "AlgRSWRSKIP", rng=rng_new(1, backend)).fit_many(range(5))
    m = merge(a, ReservoirSampler(2, "AlgRSWRSKIP", rng=rng_new(2, backend)))
    assert m.value().items == a.value().items and m.n_seen == 5


def test_merge_short_partitions(backend):
    # partitions shorter than K: the merge keeps everything it can
    a = ReservoirSampler(4, "AlgR", rng=rng_new(1, backend)).fit_many([0])
    b = ReservoirSampler(4, "AlgR", rng=rng_new(2, backend)).fit_many([1, 2])
    assert sorted(merge(a, b).value().items) == [0, 1, 2]


def _merge_then_fit(method, k, parts, tail, backend):
    def run(seed):
        ss = [ReservoirSampler(k, method, rng=rng_new(seed * 4 + j, backend)).fit_many(p)
              for j, p in enumerate(parts)]
        m = merge(*ss, rng=rng_new(seed * 4 + 3, backend)).fit_many(tail)
        return tuple(sorted(m.value().items))
    return run


@pytest.mark.parametrize("method", ["AlgR", "AlgL"])
def test_merge_then_continue_fitting(method, backend):
    run = _merge_then_fit(method, 2, [range(0, 3), range(3, 5)], range(5, 8), backend)
    assert check_law(run, exact_law_without_replacement(8, 2), TRIALS).passed


def test_merge_then_continue_weighted(backend):
    run = _merge_then_fit("AlgWRSWRSKIP", 2, [_weighted([1.0, 3.0]), _weighted([2.0], 2)],
                          _weighted([4.0], 3), backend)
    assert check_law(run, exact_law_with_replacement([1.0, 3.0, 2.0, 4.0], 2), TRIALS).passed
    run = _merge_then_fit("AlgAExpJ", 2, [_weighted([1.0, 3.0]), _weighted([2.0], 2)],
                          _weighted([4.0, 0.5], 3), backend)
    assert check_law(run, exact_law_without_replacement([1.0, 3.0, 2.0, 4.0, 0.5], 2), TRIALS).passed


def test_merge_then_continue_rswr(backend):
    run = _merge_then_fit("AlgRSWRSKIP", 2, [range(0, 2), range(2, 3)], range(3, 5), backend)
    assert check_law(run, exact_law_with_replacement(5, 2), TRIALS).passed


def test_merge_associativity(backend):
    parts = [range(0, 2), range(2, 4), range(4, 6)]

    def grouped(left):
        def run(seed):
            a, b, c = (ReservoirSampler(2, "AlgL", rng=rng_new(seed * 8 + j, backend)).fit_many(p)
                       for j, p in enumerate(parts))
            r1, r2 = rng_new(seed * 8 + 5, backend), rng_new(seed * 8 + 6, backend)
            m = merge(merge(a, b, rng=r1), c, rng=r2) if left else merge(a, merge(b, c, rng=r1), rng=r2)
            return tuple(sorted(m.value().items))
        return run

    law = exact_law_without_replacement(6, 2)
    assert check_law(grouped(True), law, TRIALS).passed
    assert check_law(grouped(False), law, TRIALS).passed


def test_repr():
    assert "AlgL" in repr(ReservoirSampler(2, "AlgL"))
