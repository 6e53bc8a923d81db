"""Pure-Python implementations of the synthetic numeric kernels.

This is the fallback backend when the compiled extension is unavailable. The
algorithms here are the reference semantics: the Cython twin must produce
bit-identical values (same operation order, same libm calls), which the test
suite verifies whenever both backends are importable.
"""

from __future__ import annotations

from math import asin, cos, pi, sin, sqrt

BACKEND = "python"

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53
_EARTH_RADIUS_KM = 6371.0088
_FIB_MOD = 2305843009213693951  # 2**61 - 1


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Tiny deterministic PRNG shared verbatim by both kernel backends."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _SPLITMIX_GAMMA) & _MASK64
        return _mix(self.state)

    def next_double(self) -> float:
        # 53-bit mantissa uniform in [0, 1)
        return (self.next_u64() >> 11) * _INV_2_53


def arc_dist_sum(size: int, seed: int) -> float:
    """Sum of great-circle distances over `size` seeded random coordinate pairs."""
    rng = SplitMix64(seed)
    total = 0.0
    for _ in range(size):
        lat1 = rng.next_double() * pi - pi / 2.0
        lon1 = rng.next_double() * (2.0 * pi) - pi
        lat2 = rng.next_double() * pi - pi / 2.0
        lon2 = rng.next_double() * (2.0 * pi) - pi
        sdlat = sin((lat2 - lat1) / 2.0)
        sdlon = sin((lon2 - lon1) / 2.0)
        a = sdlat * sdlat + cos(lat1) * cos(lat2) * sdlon * sdlon
        if a > 1.0:
            a = 1.0
        total += 2.0 * _EARTH_RADIUS_KM * asin(sqrt(a))
    return total


def rosen_sum(size: int, seed: int) -> float:
    """Rosenbrock-valley evaluation over `size` seeded random points."""
    rng = SplitMix64(seed)
    total = 0.0
    for _ in range(size):
        x = rng.next_double() * 4.0 - 2.0
        y = rng.next_double() * 4.0 - 2.0
        t1 = y - x * x
        t2 = 1.0 - x
        total += 100.0 * t1 * t1 + t2 * t2
    return total


def fib_mod(size: int, seed: int) -> int:
    """`size` steps of a seeded Fibonacci-style recurrence mod 2**61-1 (exact)."""
    rng = SplitMix64(seed)
    a = rng.next_u64() % _FIB_MOD
    b = rng.next_u64() % _FIB_MOD
    for _ in range(size):
        a, b = b, (a + b) % _FIB_MOD
    return b
