import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from streamsample.core import as_rng, rng_new
from streamsample.rng import PyRng, seed_state

# xoshiro256** reference state after seeding 0 through splitmix64, and its
# first outputs, computed independently with plain integer arithmetic below.
MASK = (1 << 64) - 1


def _ref_splitmix(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return x, z ^ (z >> 31)


def _ref_stream(seed, count):
    x, s = seed, []
    for _ in range(4):
        x, z = _ref_splitmix(x)
        s.append(z)
    rotl = lambda v, r: ((v << r) | (v >> (64 - r))) & MASK  # noqa: E731
    out = []
    for _ in range(count):
        out.append((rotl((s[1] * 5) & MASK, 7) * 9) & MASK)
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
    return out


@pytest.mark.parametrize("seed", [0, 1, 7, 2**64 - 1])
def test_matches_reference_xoshiro(backend, seed):
    rng = rng_new(seed, backend)
    assert [rng.next_u64() for _ in range(8)] == _ref_stream(seed, 8)


def test_seed_state_is_nonzero():
    assert any(seed_state(0))


def test_same_seed_same_stream(backend):
    a, b = rng_new(42, backend), rng_new(42, backend)
    assert [a.uniform01() for _ in range(100)] == [b.uniform01() for _ in range(100)]


def test_different_seeds_differ(backend):
    a, b = rng_new(1, backend), rng_new(2, backend)
    assert [a.next_u64() for _ in range(4)] != [b.next_u64() for _ in range(4)]


def test_uniform_is_open_interval_and_uniform(backend):
    rng = rng_new(3, backend)
    xs = [rng.uniform01() for _ in range(50_000)]
    assert all(0.0 < x < 1.0 for x in xs)
    assert stats.kstest(xs, "uniform").pvalue > 1e-4


def test_randbelow_uniform(backend):
    rng = rng_new(5, backend)
    n = 7
    counts = [0] * n
    for _ in range(70_000):
        counts[rng.randbelow(n)] += 1
    assert stats.chisquare(counts).pvalue > 1e-4


def test_randbelow_large_bound(backend):
    rng = rng_new(9, backend)
    bound = 3 * 2**61 + 5
    xs = [rng.randbelow(bound) for _ in range(2000)]
    assert all(0 <= x < bound for x in xs)
    assert stats.kstest([x / bound for x in xs], "uniform").pvalue > 1e-4


def test_randbelow_rejects_nonpositive(backend):
    with pytest.raises(ValueError):
        rng_new(0, backend).randbelow(0)


def test_draw_counter(backend):
    rng = rng_new(0, backend)
    rng.uniform01()
    rng.randbelow(10)
    rng.next_u64()
    assert rng.draws >= 3


def test_state_roundtrip(backend):
    rng = rng_new(11, backend)
    rng.next_u64()
    saved = rng.getstate()
    first = [rng.next_u64() for _ in range(5)]
    rng.setstate(saved)
    assert [rng.next_u64() for _ in range(5)] == first


def test_as_rng():
    assert isinstance(as_rng(None), type(rng_new(0)))
    assert as_rng(5).getstate() == rng_new(5).getstate()
    r = PyRng(1)
    assert as_rng(r) is r
    with pytest.raises(TypeError):
        as_rng("seed")


def test_unknown_backend():
    with pytest.raises(ValueError):
        rng_new(0, "fortran")


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=2**64 - 1))
def test_randbelow_in_range(bound):
    rng = PyRng(bound)
    assert all(0 <= rng.randbelow(bound) < bound for _ in range(5))


def test_uniform_mean_and_variance():
    rng = PyRng(123)
    xs = [rng.uniform01() for _ in range(100_000)]
    mean = math.fsum(xs) / len(xs)
    var = math.fsum((x - mean) ** 2 for x in xs) / len(xs)
    assert abs(mean - 0.5) < 4 * math.sqrt(1 / 12 / len(xs))
    assert abs(var - 1 / 12) < 2e-3
