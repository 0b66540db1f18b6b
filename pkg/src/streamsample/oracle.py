"""Exact sampling laws for small instances and a chi-square harness.

The laws here are built by brute-force enumeration of draw sequences and
share no code with the samplers they check. Outcomes are sorted tuples of
item indices: sets for sampling without replacement, multisets with it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations, permutations, product
from math import comb, prod
from typing import Callable, Hashable, Mapping, Sequence

from scipy.stats import chi2

from .errors import OracleCapacityError

MAX_ITEMS_WITHOUT_REPLACEMENT = 8
MAX_OUTCOMES_WITH_REPLACEMENT = 10**6

ExactLaw = dict[tuple, float]


def _normalize_weights(weights) -> tuple[list[float], bool]:
    if isinstance(weights, int):
        if weights < 1:
            raise ValueError("population size must be positive")
        return [1.0] * weights, True
    ws = [float(w) for w in weights]
    if not ws or any(not w > 0 for w in ws):
        raise ValueError("weights must be positive")
    return ws, False


def exact_law_without_replacement(weights: Sequence[float] | int, k: int) -> ExactLaw:
    """Law of the unordered set drawn by ``k`` successive weighted draws.

    Each draw picks a remaining item with probability proportional to its
    weight among the items still left. Passing an int ``n`` gives the
    uniform law over ``k``-subsets of ``range(n)``.
    """
    ws, uniform = _normalize_weights(weights)
    n = len(ws)
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= {n}")
    if uniform:
        p = 1.0 / comb(n, k)
        return {c: p for c in combinations(range(n), k)}
    if n > MAX_ITEMS_WITHOUT_REPLACEMENT:
        raise OracleCapacityError(f"enumeration bound is {MAX_ITEMS_WITHOUT_REPLACEMENT} items, got {n}")
    total = sum(ws)
    law: ExactLaw = {}
    for seq in permutations(range(n), k):
        p = 1.0
        left = total
        for i in seq:
            p *= ws[i] / left
            left -= ws[i]
        key = tuple(sorted(seq))
        law[key] = law.get(key, 0.0) + p
    return law


def exact_law_with_replacement(weights: Sequence[float] | int, k: int) -> ExactLaw:
    """Law of the multiset of ``k`` iid draws with P(i) = w_i / sum(w)."""
    ws, _ = _normalize_weights(weights)
    n = len(ws)
    if n**k > MAX_OUTCOMES_WITH_REPLACEMENT:
        raise OracleCapacityError(f"{n}**{k} draw sequences exceeds the enumeration bound")
    total = sum(ws)
    law: ExactLaw = {}
    for seq in product(range(n), repeat=k):
        p = prod(ws[i] / total for i in seq)
        key = tuple(sorted(seq))
        law[key] = law.get(key, 0.0) + p
    return law


def inclusion_probabilities(law: Mapping[tuple, float], n: int) -> list[float]:
    """P(item i appears in the sample) for each of ``n`` items."""
    out = [0.0] * n
    for outcome, p in law.items():
        for i in set(outcome):
            out[i] += p
    return out


def empirical_counts(factory: Callable[[int], Hashable], trials: int, first_seed: int = 0) -> Counter:
    """Run ``factory(seed)`` for seeds ``first_seed .. first_seed + trials - 1`` and count outcomes."""
    return Counter(factory(seed) for seed in range(first_seed, first_seed + trials))


def empirical_law(factory: Callable[[int], Hashable], trials: int, first_seed: int = 0) -> dict:
    if trials < 1:
        raise ValueError("trials must be positive")
    counts = empirical_counts(factory, trials, first_seed)
    return {outcome: c / trials for outcome, c in counts.items()}


@dataclass
class ChiSquareResult:
    passed: bool
    statistic: float
    df: int
    critical: float
    alpha: float
    trials: int

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (f"{verdict}: chi2={self.statistic:.3f} df={self.df} "
                f"critical={self.critical:.3f} alpha={self.alpha} trials={self.trials}")


def critical_value(df: int, alpha: float) -> float:
    return float(chi2.isf(alpha, df))


def chi_square_test(observed: Mapping, law: Mapping, alpha: float = 0.001, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson goodness of fit of outcome counts against an exact law.

    Outcomes with expected count below ``min_expected`` are pooled into one
    bin (and that bin into its smallest neighbour if it is still too thin).
    An observed outcome the law gives zero probability fails outright.
    """
    trials = sum(observed.values())
    if trials <= 0:
        raise ValueError("no observations")
    stray = [o for o, c in observed.items() if c and law.get(o, 0.0) <= 0.0]
    if stray:
        return ChiSquareResult(False, float("inf"), 0, 0.0, alpha, trials)
    bins = []
    pooled_exp = pooled_obs = 0.0
    for outcome, p in sorted(law.items(), key=lambda kv: kv[1], reverse=True):
        if p <= 0.0:
            continue
        e = p * trials
        if e >= min_expected:
            bins.append((observed.get(outcome, 0), e))
        else:
            pooled_exp += e
            pooled_obs += observed.get(outcome, 0)
    if pooled_exp > 0.0:
        if pooled_exp < min_expected and bins:
            o, e = bins.pop()
            pooled_obs += o
            pooled_exp += e
        bins.append((pooled_obs, pooled_exp))
    df = len(bins) - 1
    if df < 1:
        return ChiSquareResult(True, 0.0, 0, 0.0, alpha, trials)
    stat = sum((o - e) ** 2 / e for o, e in bins)
    crit = critical_value(df, alpha)
    return ChiSquareResult(stat <= crit, stat, df, crit, alpha, trials)


def check_law(factory: Callable[[int], Hashable], law: Mapping, trials: int = 100_000,
              alpha: float = 0.001, reseeds: int = 1) -> ChiSquareResult:
    """Chi-square a seeded sampler against ``law`` with a bounded flake budget.

    A failing run is repeated on the next, disjoint block of seeds, up to
    ``reseeds`` times; the last result is returned.
    """
    for block in range(reseeds + 1):
        result = chi_square_test(empirical_counts(factory, trials, block * trials), law, alpha)
        if result.passed:
            return result
    return result
