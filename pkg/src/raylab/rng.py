"""Seedable counter-based PRNG used for every random draw in the engine.

The generator is a splitmix-style 64-bit mixer: the state advances by a
fixed odd increment ("gamma") and each output is a bijective hash of the
new state.  The whole engine shares this one generator so that episodes
are reproducible bit-for-bit across processes and platforms; the Python
stdlib ``random`` module is deliberately not used anywhere in the
simulation path.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance ``state`` by one step and return (new_state, output)."""
    state = (state + GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int) -> int:
    """One splitmix output of ``seed``; used for seed sequencing on reset."""
    return splitmix64(seed & MASK64)[1]


class Rng:
    """Deterministic RNG with a single 64-bit word of state."""

    __slots__ = ("state", "_spare_gauss")

    def __init__(self, seed: int):
        self.state = seed & MASK64
        self._spare_gauss: float | None = None

    def next_u64(self) -> int:
        self.state, out = splitmix64(self.state)
        return out

    def uniform(self) -> float:
        """Float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randrange(self, n: int) -> int:
        """Integer in [0, n).  Modulo reduction; the tiny bias is irrelevant
        here and keeps the draw a single state advance."""
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        return self.next_u64() % n

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Box-Muller normal deviate; caches the spare for the next call."""
        if self._spare_gauss is not None:
            z = self._spare_gauss
            self._spare_gauss = None
        else:
            u1 = self.uniform()
            u2 = self.uniform()
            while u1 <= 1e-300:
                u1 = self.uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(2.0 * math.pi * u2)
            self._spare_gauss = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * z

    def fork(self) -> "Rng":
        """Child generator decorrelated from this one."""
        return Rng(self.next_u64())

    def copy(self) -> "Rng":
        c = Rng(self.state)
        c._spare_gauss = self._spare_gauss
        return c
