"""Deterministic random number generation for reproducible symbol draws.

A seeded splitmix64 stream feeding a Box-Muller transform.  We keep this
in-house (rather than using numpy's generators) so that a symbol generated
from a given seed is bit-for-bit stable across numpy versions; the generated
coefficients end up frozen in output files and in tests.
"""

import math

_MASK = (1 << 64) - 1


class SplitMix64:
    """splitmix64 integer stream with a float and a gaussian tap.

    next_u64 follows the reference constants.  uniform() maps the top 53
    bits to (0, 1] (never zero, so it is safe inside a logarithm), and
    gaussian() applies the basic Box-Muller transform, handing out the two
    variates of each pair in order.
    """

    def __init__(self, seed):
        self.state = int(seed) & _MASK
        self._spare = None

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self):
        # top 53 bits, shifted into (0, 1]
        return ((self.next_u64() >> 11) + 1) * 2.0 ** -53

    def gaussian(self):
        if self._spare is not None:
            g, self._spare = self._spare, None
            return g
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)
