"""Seeded SplitMix64 generator used for every random sample.

The constants are the published SplitMix64 ones: the state advances by
0x9E3779B97F4A7C15 and the output is mixed with multipliers
0xBF58476D1CE4E5B9 and 0x94D049BB133111EB after xor-shifts of 30, 27 and 31.
"""

from fractions import Fraction

from twistorkit.scalars import Backend

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """64-bit SplitMix generator."""

    def __init__(self, seed: int = 0):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        span = hi - lo + 1
        # rejection sampling keeps the draw unbiased
        limit = (MASK64 + 1) - ((MASK64 + 1) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % span

    def choice(self, items):
        return items[self.randint(0, len(items) - 1)]

    def fork(self) -> "SplitMix64":
        """Independent child stream."""
        return SplitMix64(self.next_u64())

    def rational(self, bound: int = 5, max_den: int = 4) -> Fraction:
        return Fraction(self.randint(-bound * max_den, bound * max_den), self.randint(1, max_den))

    def scalar(self, backend: Backend, bound: int = 5, max_den: int = 4):
        """Random scalar: small Gaussian rational (exact) or complex in a box (float)."""
        if backend.exact:
            return backend.from_parts(self.rational(bound, max_den), self.rational(bound, max_den))
        return backend.from_parts(self.uniform(-bound, bound), self.uniform(-bound, bound))

    def nonzero_scalar(self, backend: Backend, bound: int = 5, max_den: int = 4):
        while True:
            z = self.scalar(backend, bound, max_den)
            if not backend.is_zero(z, 1e-3):
                return z

    def vector(self, backend: Backend, n: int, bound: int = 5, max_den: int = 4):
        return backend.array([self.scalar(backend, bound, max_den) for _ in range(n)])

    def matrix(self, backend: Backend, rows: int, cols: int, bound: int = 5, max_den: int = 4):
        return backend.array(
            [[self.scalar(backend, bound, max_den) for _ in range(cols)] for _ in range(rows)]
        )
