"""Seedable xoshiro256** generator (pure-Python implementation).

The compiled core ships a bit-identical twin in ``_ckernels``; both are
seeded through splitmix64 so a seed maps to the same variate stream on
either backend.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_INV53 = 2.0**-53


def _splitmix64(x: int) -> tuple[int, int]:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, z ^ (z >> 31)


def seed_state(seed: int) -> tuple[int, int, int, int]:
    if not 0 <= seed <= _MASK:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    words = []
    x = seed
    for _ in range(4):
        x, z = _splitmix64(x)
        words.append(z)
    return tuple(words)


class PyRng:
    """xoshiro256** with a draw counter.

    ``draws`` counts raw 64-bit outputs; every public variate method
    consumes at least one.
    """

    __slots__ = ("seed", "draws", "_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._s0, self._s1, self._s2, self._s3 = seed_state(seed)
        self.draws = 0

    def __repr__(self):
        return f"PyRng(seed={self.seed}, draws={self.draws})"

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        x = (s1 * 5) & _MASK
        result = ((((x << 7) | (x >> 57)) & _MASK) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        self.draws += 1
        return result

    def uniform01(self) -> float:
        """Uniform variate on the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * _INV53

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) (Lemire's multiply-shift with rejection)."""
        if n <= 0:
            raise ValueError("randbelow requires n > 0")
        m = self.next_u64() * n
        lo = m & _MASK
        if lo < n:
            t = ((1 << 64) - n) % n
            while lo < t:
                m = self.next_u64() * n
                lo = m & _MASK
        return m >> 64

    def getstate(self) -> tuple:
        return (self._s0, self._s1, self._s2, self._s3, self.draws)

    def setstate(self, state: tuple) -> None:
        self._s0, self._s1, self._s2, self._s3, self.draws = state
