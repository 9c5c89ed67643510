"""SplitMix64 pseudo random stream.

Every random decision in the package is drawn from this generator so that a
(seed, parameters) pair fully determines an output, independent of numpy's
bit generator versions.
"""
import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    """SplitMix64 finaliser, usable as a stateless 64-bit hash."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed=0):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        return mix64(self.state)

    def random(self):
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n):
        """Uniform integer in [0, n) by 128-bit multiply-shift."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def uniform(self, a, b):
        return a + (b - a) * self.random()

    def gauss(self, mu=0.0, sigma=1.0):
        # Box-Muller, one draw per call; u1 in (0, 1]
        u1 = 1.0 - self.random()
        u2 = self.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def spawn(self, tag):
        """Independent child stream keyed by an integer tag."""
        return SplitMix64(mix64(self.next_u64() ^ mix64(int(tag) + _GOLDEN)))


def random_positions(n, seed):
    """n uniform points in the unit square, row-major draw order."""
    import numpy as np

    rng = SplitMix64(seed)
    pos = np.empty((n, 2))
    for i in range(n):
        pos[i, 0] = rng.random()
        pos[i, 1] = rng.random()
    return pos
