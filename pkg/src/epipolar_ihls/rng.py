"""PCG32 (XSH-RR 64/32) pseudo-random generator.

Seeding follows ``pcg32_srandom(initstate=seed, initseq=stream)`` from the
reference C implementation so that sequences are reproducible in any
language. Uniforms use one 32-bit draw; normals use Box-Muller with the
cosine branch only, consuming two draws each.
"""

import math

_MASK64 = (1 << 64) - 1
_MULT = 6364136223846793005
_TWO32 = 4294967296.0


class PCG32:
    def __init__(self, seed=0, stream=0):
        self.state = 0
        self.inc = ((stream << 1) | 1) & _MASK64
        self.next_u32()
        self.state = (self.state + (seed & _MASK64)) & _MASK64
        self.next_u32()

    def next_u32(self):
        old = self.state
        self.state = (old * _MULT + self.inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def uniform(self, low=0.0, high=1.0):
        """Uniform on ``[low, high)``."""
        return low + (high - low) * (self.next_u32() / _TWO32)

    def bounded(self, bound):
        """Unbiased integer in ``[0, bound)``."""
        threshold = (-bound) % (1 << 32) % bound
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % bound

    def normal(self):
        u1 = (self.next_u32() + 1.0) / _TWO32  # (0, 1], keeps log finite
        u2 = self.next_u32() / _TWO32
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def sample_without_replacement(self, n, k):
        """``k`` distinct indices from ``range(n)`` by partial Fisher-Yates."""
        pool = list(range(n))
        for i in range(k):
            j = i + self.bounded(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
