"""Statistical verification matrix: every sampler against its exact law."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Hashable

from .core import rng_new
from .oracle import ChiSquareResult, check_law, exact_law_with_replacement, exact_law_without_replacement
from .reservoir import ReservoirSampler, merge
from .sequential import SequentialSampler, combine


@dataclass
class VerifyCase:
    name: str
    group: str
    factory: Callable[[int], Hashable]
    law: dict


def _sorted(items) -> tuple:
    return tuple(sorted(items))


def reservoir_outcome(method, k, stream, backend=None):
    def run(seed):
        s = ReservoirSampler(k, method, rng=rng_new(seed, backend))
        return _sorted(s.fit_many(stream).value().items)
    return run


def sequential_outcome(method, k, stream, total, backend=None):
    def run(seed):
        s = SequentialSampler(stream, k, total, method=method, rng=rng_new(seed, backend))
        return _sorted(s.sample().items)
    return run


def merged_outcome(method, k, parts, backend=None):
    def run(seed):
        samplers = []
        for j, part in enumerate(parts):
            rng = rng_new((seed << 3) | j, backend)
            samplers.append(ReservoirSampler(k, method, rng=rng).fit_many(part))
        merged = merge(*samplers, rng=rng_new((seed << 3) | 7, backend))
        return _sorted(merged.value().items)
    return run


def combined_outcome(k, parts, backend=None):
    """ORDWSWR on each weighted partition, then combine."""
    def run(seed):
        samples, totals = [], []
        for j, part in enumerate(parts):
            total = sum(w for _, w in part)
            rng = rng_new((seed << 3) | j, backend)
            samples.append(SequentialSampler(part, k, total, method="AlgORDWSWR", rng=rng).sample())
            totals.append(total)
        out = combine(samples, totals, k, rng=rng_new((seed << 3) | 7, backend))
        return _sorted(out.items)
    return run


def slot_outcome(method, k, stream, slot, backend=None):
    def run(seed):
        s = ReservoirSampler(k, method, rng=rng_new(seed, backend)).fit_many(stream)
        return (s.value().items[slot],)
    return run


def _weighted(weights, offset=0):
    return [(offset + i, w) for i, w in enumerate(weights)]


def build_cases(backend=None) -> list[VerifyCase]:
    cases = []
    # 1. uniform k-subsets
    for n, k in ((5, 2), (6, 3)):
        law = exact_law_without_replacement(n, k)
        for m in ("AlgR", "AlgL"):
            cases.append(VerifyCase(f"{m} N={n} K={k}", "uniform-subset",
                                    reservoir_outcome(m, k, range(n), backend), law))
        for m in ("AlgD", "AlgHiddenShuffle"):
            cases.append(VerifyCase(f"{m} N={n} K={k}", "uniform-subset",
                                    sequential_outcome(m, k, range(n), n, backend), law))
    # 2. weighted laws
    w3 = [1.0, 2.0, 3.0]
    law = exact_law_without_replacement(w3, 2)
    for m in ("AlgARes", "AlgAExpJ"):
        cases.append(VerifyCase(f"{m} w={w3} K=2", "weighted",
                                reservoir_outcome(m, 2, _weighted(w3), backend), law))
    w4 = [1.0, 2.0, 3.0, 4.0]
    for k in (1, 2):
        law = exact_law_with_replacement(w4, k)
        cases.append(VerifyCase(f"AlgWRSWRSKIP w={w4} K={k}", "weighted",
                                reservoir_outcome("AlgWRSWRSKIP", k, _weighted(w4), backend), law))
        cases.append(VerifyCase(f"AlgORDWSWR w={w4} K={k}", "weighted",
                                sequential_outcome("AlgORDWSWR", k, _weighted(w4), sum(w4), backend), law))
    # 3. with-replacement slot law
    cases.append(VerifyCase("AlgRSWRSKIP N=4 K=3 joint", "with-replacement",
                            reservoir_outcome("AlgRSWRSKIP", 3, range(4), backend),
                            exact_law_with_replacement(4, 3)))
    for slot in range(3):
        cases.append(VerifyCase(f"AlgRSWRSKIP N=4 K=3 slot {slot}", "with-replacement",
                                slot_outcome("AlgRSWRSKIP", 3, range(4), slot, backend),
                                exact_law_with_replacement(4, 1)))
    # 4. merge consistency
    cases.append(VerifyCase("merge AlgL [0..2]+[3..5] K=2", "merge",
                            merged_outcome("AlgL", 2, [range(0, 3), range(3, 6)], backend),
                            exact_law_without_replacement(6, 2)))
    wa, wb = [1.0, 2.0], [3.0, 4.0]
    cases.append(VerifyCase(f"merge AlgWRSWRSKIP {wa}+{wb} K=2", "merge",
                            merged_outcome("AlgWRSWRSKIP", 2, [_weighted(wa), _weighted(wb, 2)], backend),
                            exact_law_with_replacement(wa + wb, 2)))
    wa, wb = [1.0, 2.0, 3.0], [4.0, 5.0]
    cases.append(VerifyCase(f"merge AlgAExpJ {wa}+{wb} K=2", "merge",
                            merged_outcome("AlgAExpJ", 2, [_weighted(wa), _weighted(wb, 3)], backend),
                            exact_law_without_replacement(wa + wb, 2)))
    # 5. combine consistency
    wa, wb = [1.0, 2.0], [3.0, 4.0]
    for k in (1, 2):
        cases.append(VerifyCase(f"combine AlgORDWSWR {wa}+{wb} K={k}", "combine",
                                combined_outcome(k, [_weighted(wa), _weighted(wb, 2)], backend),
                                exact_law_with_replacement(wa + wb, k)))
    return cases


def run_case(case: VerifyCase, trials: int = 100_000, alpha: float = 0.001) -> tuple[ChiSquareResult, float]:
    t0 = time.perf_counter()
    result = check_law(case.factory, case.law, trials=trials, alpha=alpha)
    return result, time.perf_counter() - t0


def run_matrix(trials: int = 100_000, alpha: float = 0.001, groups=None, backend=None, out=print) -> bool:
    ok = True
    for case in build_cases(backend):
        if groups and case.group not in groups:
            continue
        result, secs = run_case(case, trials, alpha)
        ok &= result.passed
        out(f"{'PASS' if result.passed else 'FAIL'}  {case.group:<16} {case.name:<44} "
            f"chi2={result.statistic:9.3f} df={result.df:<3} crit={result.critical:8.3f} {secs:6.1f}s")
    return ok
