import csv
import io
from collections import Counter

import pytest

from streamsample import bench
from streamsample.cli import main


def test_k_grid():
    assert bench.k_grid(10_000_000) == [1_000, 10_000, 100_000, 1_000_000]
    assert bench.k_grid(100) == [1, 10]


def test_total_weight_is_exact():
    for n in (1, 7, 8, 9, 1001):
        assert bench.total_weight(n) == sum(w for _, w in bench.make_stream("weighted-wr", n))


def test_streams_are_identical_per_scenario():
    a = list(bench.make_stream("unweighted-wor", 50))
    assert a == list(range(1, 51)) == list(bench.make_stream("unweighted-wr", 50))


def test_applicable():
    assert not bench.applicable("weighted-wor", "sequential-one-pass")
    assert bench.applicable("weighted-wr", "sequential-two-pass")


@pytest.mark.parametrize("scenario,strategy", [
    (sc, stg) for sc in bench.SCENARIOS for stg in bench.STRATEGIES if bench.applicable(sc, stg)
])
def test_strategies_return_k_items(scenario, strategy):
    out = bench.STRATEGY_FUNCS[strategy](scenario, 500, 20, 0, lambda: bench.make_stream(scenario, 500))
    assert len(out) == 20
    if scenario.endswith("wor"):
        assert len(set(int(x) for x in out)) == 20


def test_suite_rejects_small_n():
    with pytest.raises(ValueError):
        bench.run_suite(100, [20], 1, out_dir=None, log=lambda m: None)


def test_run_suite_report(tmp_path):
    rows = bench.run_suite(20_000, [2, 200], 2, out_dir=str(tmp_path), log=lambda m: None)
    with open(tmp_path / "results.csv") as fh:
        table = list(csv.DictReader(fh))
    assert list(table[0]) == ["scenario", "strategy", "n", "k", "reps", "median_ms", "min_ms", "peak_aux_bytes"]
    assert len(table) == len(rows) == 2 * (4 + 4 + 2 + 4)
    assert Counter(r["scenario"] for r in table) == {"unweighted-wor": 8, "unweighted-wr": 8,
                                                      "weighted-wor": 4, "weighted-wr": 8}
    for scenario in bench.SCENARIOS:
        svg = tmp_path / f"fig_iter_{scenario}.svg"
        assert svg.exists() and svg.read_text().lstrip().startswith("<?xml")
    mem = {(r.scenario, r.strategy, r.k): r.peak_aux_bytes for r in rows}
    for scenario in bench.SCENARIOS:
        assert mem[(scenario, "population", 2)] > 5 * mem[(scenario, "reservoir", 2)]


def test_report_structure_is_deterministic(tmp_path):
    a = bench.run_suite(5_000, [5], 1, out_dir=None, memory=False, log=lambda m: None)
    b = bench.run_suite(5_000, [5], 1, out_dir=None, memory=False, log=lambda m: None)
    assert [(r.scenario, r.strategy, r.k) for r in a] == [(r.scenario, r.strategy, r.k) for r in b]
    assert all(r.peak_aux_bytes == -1 for r in a)


def test_bench_run_cli(tmp_path):
    out = io.StringIO()
    code = main(["bench", "run", "--n", "5000", "--reps", "1", "--k", "10", "--out", str(tmp_path)], stdout=out)
    assert code == 0 and (tmp_path / "results.csv").exists() and "wrote 14 rows" in out.getvalue()


def test_run_backends(tmp_path):
    rows = bench.run_backends(5_000, 1, 10, out_dir=None, log=lambda m: None)
    assert {r["method"] for r in rows} == {"AlgR", "AlgL", "AlgRSWRSKIP", "AlgARes", "AlgAExpJ", "AlgWRSWRSKIP"}
