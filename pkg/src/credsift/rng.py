"""Portable deterministic shuffling.

Dataset splits must reproduce bit-for-bit across platforms and processes,
so they are driven by SplitMix64 (Steele/Lea/Flood), a fixed-increment
counter passed through two xorshift-multiply rounds. The generator and the
Fisher-Yates draw below are the documented split algorithm; nothing else
in the package may reseed or advance a shared generator.
"""

from .errors import DomainError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream seeded with an unsigned 64-bit integer."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Integer in [0, n) via modulo reduction (bias < 2**-40 for n < 2**24)."""
        if n <= 0:
            raise DomainError("bound must be positive")
        return self.next_u64() % n

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53


def shuffled(items, seed: int) -> list:
    """Fisher-Yates shuffle driven by SplitMix64; a pure function of (items, seed)."""
    out = list(items)
    rng = SplitMix64(seed)
    for i in range(len(out) - 1, 0, -1):
        j = rng.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
