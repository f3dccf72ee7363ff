"""
Portable deterministic random numbers

A SplitMix64 counter stream: draw i of a stream seeded with s is
mix(s + (i + 1) * GOLDEN), so draws can be produced in vectorized blocks
and any implementation following the same recipe reproduces them.

    uniform  = (z >> 11) * 2^-53                  in [0, 1)
    gaussian = Box-Muller on consecutive uniform pairs,
               r = sqrt(-2 ln(1 - u1)), (r cos 2 pi u2, r sin 2 pi u2)
"""

from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

MASK64 = (1 << 64) - 1
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
CHILD_SALT = 0xD1B54A32D192ED03
INV_2_53 = 1.0 / float(1 << 53)

Shape = Union[int, Tuple[int, ...]]


def _mix(z: npt.NDArray[np.uint64]) -> npt.NDArray[np.uint64]:
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def _count(shape: Shape) -> int:
    return int(np.prod(shape)) if not isinstance(shape, int) else shape


class SplitMix64:
    """Counter-based SplitMix64 stream with uniform and Gaussian draws"""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def next_u64(self, n: int) -> npt.NDArray[np.uint64]:
        """The next n raw 64-bit outputs"""
        index = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        return _mix(np.uint64(self.seed) + index * GOLDEN)

    def uniform(self, shape: Shape = 1) -> npt.NDArray[np.float64]:
        n = _count(shape)
        z = self.next_u64(n)
        return ((z >> np.uint64(11)).astype(np.float64) * INV_2_53).reshape(shape)

    def uniform_range(self, low: float, high: float, shape: Shape = 1) -> npt.NDArray[np.float64]:
        return low + (high - low) * self.uniform(shape)

    def normal(self, shape: Shape = 1) -> npt.NDArray[np.float64]:
        """Standard normal draws, two per uniform pair; odd counts drop the last"""
        n = _count(shape)
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = 2.0 * np.pi * u2
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n].reshape(shape)

    def integers(self, high: int, shape: Shape = 1) -> npt.NDArray[np.int64]:
        """Integers in [0, high)"""
        return np.minimum((self.uniform(shape) * high).astype(np.int64), high - 1)

    def sample_indices(self, population: int, count: int) -> npt.NDArray[np.intp]:
        """count distinct indices from range(population), sorted"""
        if count >= population:
            return np.arange(population)
        keys = self.uniform(population)
        return np.sort(np.argsort(keys, kind="stable")[:count])

    def child(self, index: int) -> "SplitMix64":
        """Independent stream derived from this seed and an index"""
        salted = np.array([(self.seed ^ (CHILD_SALT * (index + 1))) & MASK64], dtype=np.uint64)
        return SplitMix64(int(_mix(salted)[0]))
