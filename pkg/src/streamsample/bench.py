"""Benchmarks: stream strategies against materializing the whole population.

Every strategy reads the same iterator over a pre-built tuple of the
integers ``1..N`` (weighted scenarios zip each with a weight from a
repeating dyadic pattern, so the total weight is known exactly). Building
the tuple is generator setup and is excluded: iterating it allocates
nothing per element, so time and memory reflect the strategy alone. Time
is the median wall time over ``reps`` untraced runs; memory is the peak of
``tracemalloc`` during one extra traced run, above the pre-run baseline.
"""

from __future__ import annotations

import csv
import gc
import os
import statistics
import time
import tracemalloc
from dataclasses import asdict, dataclass
from itertools import cycle
from operator import itemgetter
from typing import Callable

import numpy as np

from . import _backend
from .core import rng_new
from .reservoir import ReservoirSampler
from .sequential import SequentialSampler

WEIGHT_PATTERN = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 0.25, 1.25)

SCENARIOS = ("unweighted-wor", "unweighted-wr", "weighted-wor", "weighted-wr")
STRATEGIES = ("population", "reservoir", "sequential-one-pass", "sequential-two-pass")

RESERVOIR_METHOD = {
    "unweighted-wor": "AlgL",
    "unweighted-wr": "AlgRSWRSKIP",
    "weighted-wor": "AlgAExpJ",
    "weighted-wr": "AlgWRSWRSKIP",
}
SEQUENTIAL_METHOD = {
    "unweighted-wor": "AlgD",
    "unweighted-wr": "AlgORDSWR",
    "weighted-wr": "AlgORDWSWR",
}


@dataclass
class BenchCase:
    scenario: str
    strategy: str
    n: int
    k: int
    reps: int
    median_ms: float
    min_ms: float
    peak_aux_bytes: int


def k_grid(n: int) -> list[int]:
    """Sample sizes from 0.01% to 10% of ``n``."""
    return sorted({max(1, n // d) for d in (10_000, 1_000, 100, 10)})


_POPULATION: dict[int, tuple] = {}


def population_items(n: int) -> tuple:
    """The shared items ``1..n``; only the most recent ``n`` is cached.

    A tuple of ints drops out of garbage-collector tracking after one
    collection, so the per-rep ``gc.collect()`` does not walk it.
    """
    if n not in _POPULATION:
        _POPULATION.clear()
        _POPULATION[n] = tuple(range(1, n + 1))
        gc.collect()
    return _POPULATION[n]


def make_stream(scenario: str, n: int):
    items = population_items(n)
    if scenario.startswith("weighted"):
        return zip(items, cycle(WEIGHT_PATTERN))
    return iter(items)


def total_weight(n: int) -> float:
    full, part = divmod(n, len(WEIGHT_PATTERN))
    return full * sum(WEIGHT_PATTERN) + sum(WEIGHT_PATTERN[:part])


def _count(stream) -> int:
    return _backend.kernels.consume(stream, 1 << 62)


def _sum_weights(stream) -> float:
    return sum(map(itemgetter(1), stream))


# -- strategies: each takes (scenario, n, k, seed, stream_factory) and returns the sample

def population(scenario, n, k, seed, streams):
    gen = np.random.default_rng(seed)
    weighted = scenario.startswith("weighted")
    raw_items, raw_weights = _backend.kernels.materialize(streams(), weighted)
    items = np.frombuffer(raw_items, np.int64)
    if weighted:
        weights = np.frombuffer(raw_weights, np.float64)
        if scenario == "weighted-wr":
            return items[gen.choice(items.size, k, replace=True, p=weights / weights.sum())]
        keys = np.log(gen.random(items.size)) / weights
        return items[np.argpartition(keys, items.size - k)[items.size - k:]]
    return gen.choice(items, k, replace=scenario == "unweighted-wr")


def reservoir(scenario, n, k, seed, streams):
    s = ReservoirSampler(k, RESERVOIR_METHOD[scenario], rng=rng_new(seed))
    return s.fit_many(streams()).value().items


def _sequential(scenario, total, k, seed, stream):
    s = SequentialSampler(stream, k, total, method=SEQUENTIAL_METHOD[scenario], rng=rng_new(seed))
    return s.sample().items


def sequential_one_pass(scenario, n, k, seed, streams):
    total = total_weight(n) if scenario.startswith("weighted") else n
    return _sequential(scenario, total, k, seed, streams())


def sequential_two_pass(scenario, n, k, seed, streams):
    if scenario.startswith("weighted"):
        total = _sum_weights(streams())
    else:
        total = _count(streams())
    return _sequential(scenario, total, k, seed, streams())


STRATEGY_FUNCS: dict[str, Callable] = {
    "population": population,
    "reservoir": reservoir,
    "sequential-one-pass": sequential_one_pass,
    "sequential-two-pass": sequential_two_pass,
}


def applicable(scenario: str, strategy: str) -> bool:
    return not (strategy.startswith("sequential") and scenario not in SEQUENTIAL_METHOD)


def time_strategy(scenario, strategy, n, k, reps, seed=0) -> list[float]:
    func = STRATEGY_FUNCS[strategy]
    times = []
    for rep in range(reps):
        streams = lambda: make_stream(scenario, n)  # noqa: E731
        gc.collect()
        t0 = time.perf_counter()
        func(scenario, n, k, seed + rep, streams)
        times.append(time.perf_counter() - t0)
    return times


def peak_memory(scenario, strategy, n, k, seed=0) -> int:
    """Peak bytes allocated by one traced run, above the pre-run baseline."""
    func = STRATEGY_FUNCS[strategy]
    streams = lambda: make_stream(scenario, n)  # noqa: E731
    gc.collect()
    tracemalloc.start()
    try:
        base = tracemalloc.get_traced_memory()[0]
        tracemalloc.reset_peak()
        sample = func(scenario, n, k, seed, streams)
        peak = tracemalloc.get_traced_memory()[1]
        del sample
    finally:
        tracemalloc.stop()
    return max(0, peak - base)


def run_suite(n: int, k_list, reps: int, out_dir: str | None = "report",
              scenarios=SCENARIOS, strategies=STRATEGIES, memory: bool = True,
              log=print) -> list[BenchCase]:
    k_list = sorted(k_list)
    if n < 10 * max(k_list):
        raise ValueError(f"N must be at least 10x the largest K (N={n}, K={max(k_list)})")
    rows = []
    for scenario in scenarios:
        for strategy in strategies:
            if not applicable(scenario, strategy):
                continue
            for k in k_list:
                times = time_strategy(scenario, strategy, n, k, reps)
                mem = peak_memory(scenario, strategy, n, k) if memory else -1
                row = BenchCase(scenario, strategy, n, k, reps,
                                1e3 * statistics.median(times), 1e3 * min(times), mem)
                rows.append(row)
                log(f"{scenario:<15} {strategy:<20} K={k:<9} median={row.median_ms:10.2f} ms "
                    f"peak_aux={mem / 1e6:10.3f} MB")
    if out_dir:
        write_csv(rows, os.path.join(out_dir, "results.csv"))
        plot_suite(rows, out_dir)
    return rows


def write_csv(rows, path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fields = list(BenchCase.__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(asdict(row))


def plot_suite(rows, out_dir: str) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    for scenario in dict.fromkeys(r.scenario for r in rows):
        fig, (ax_t, ax_m) = plt.subplots(1, 2, figsize=(10, 4))
        for strategy in dict.fromkeys(r.strategy for r in rows if r.scenario == scenario):
            pts = [r for r in rows if r.scenario == scenario and r.strategy == strategy]
            ks = [r.k for r in pts]
            ax_t.plot(ks, [r.median_ms for r in pts], marker="o", label=strategy)
            mem = [r.peak_aux_bytes / 1e6 for r in pts]
            if any(m > 0 for m in mem):
                ax_m.plot(ks, mem, marker="o", label=strategy)
        for ax, ylabel in ((ax_t, "median time (ms)"), (ax_m, "peak auxiliary memory (MB)")):
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel("sample size K")
            ax.set_ylabel(ylabel)
            ax.legend(fontsize=8)
        fig.suptitle(f"{scenario}, N = {rows[0].n:,}")
        fig.tight_layout()
        path = os.path.join(out_dir, f"fig_iter_{scenario}.svg")
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths


# -- compiled core vs. pure-Python kernels ---------------------------------

def run_backends(n: int = 1_000_000, reps: int = 5, k: int = 100, out_dir: str | None = "report",
                 log=print) -> list[dict]:
    """Time every reservoir method on both backends over the same stream."""
    backends = ["python"] + (["cython"] if _backend.compiled_available() else [])
    rows = []
    for method, scenario in (("AlgR", "unweighted"), ("AlgL", "unweighted"),
                             ("AlgRSWRSKIP", "unweighted"), ("AlgARes", "weighted"),
                             ("AlgAExpJ", "weighted"), ("AlgWRSWRSKIP", "weighted")):
        medians = {}
        for backend in backends:
            times = []
            for rep in range(reps):
                stream = make_stream("weighted-wr" if scenario == "weighted" else "unweighted-wor", n)
                s = ReservoirSampler(k, method, rng=rng_new(rep, backend))
                t0 = time.perf_counter()
                s.fit_many(stream)
                times.append(time.perf_counter() - t0)
            medians[backend] = statistics.median(times)
            rows.append({"method": method, "backend": backend, "n": n, "k": k,
                         "median_ms": 1e3 * medians[backend]})
        speedup = medians["python"] / medians["cython"] if "cython" in medians else float("nan")
        log(f"{method:<14} " + "  ".join(f"{b}={1e3 * t:9.1f} ms" for b, t in medians.items())
            + f"  speedup={speedup:5.1f}x")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "backends.csv"), "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return rows
