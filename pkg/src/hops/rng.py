"""Pinned pseudo-random number source.

Projection matrices and synthetic benchmarks must be reproducible bit-for-bit
from a 64-bit seed, across runs and platforms and independent of whatever
sampling tricks a numpy release happens to use. So the algorithm is fixed
here, in full:

1. Word stream: the PCG XSL RR 128/64 generator ("PCG64") as shipped by
   numpy, seeded via ``numpy.random.PCG64(seed)`` (which expands the seed
   through numpy's SeedSequence). numpy guarantees the raw output stream of a
   named bit generator never changes between releases. Words are consumed in
   order w0, w1, w2, ...
2. Uniforms: a word w maps to the 53-bit uniform (w >> 11) * 2**-53. For the
   radius word the mapping is ((w >> 11) + 1) * 2**-53 so the value lies in
   (0, 1] and log() is always finite.
3. Gaussian transform: the Box-Muller map. Words are taken in pairs
   (w_{2j}, w_{2j+1}); with u1 from the first (radius mapping) and u2 from
   the second, r = sqrt(-2 ln u1), theta = 2*pi*u2, and the pair emits
   z_{2j} = r cos(theta), z_{2j+1} = r sin(theta), in that order.
4. An odd-count request consumes a full final pair and discards the trailing
   sine value.

Any implementation following these four rules against the same PCG64 stream
reproduces identical doubles up to the platform's libm rounding of log, sqrt,
cos and sin.
"""

from __future__ import annotations

import numpy as np

_INV_2_53 = 2.0**-53


def _box_muller(words: np.ndarray) -> np.ndarray:
    # words has even length; pairs -> (r cos, r sin)
    u1 = ((words[0::2] >> np.uint64(11)) + np.uint64(1)) * _INV_2_53
    u2 = (words[1::2] >> np.uint64(11)) * _INV_2_53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    out = np.empty(words.shape[0], dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out


class PinnedStream:
    """Sequential Gaussian stream over a single seeded PCG64 word stream.

    Consecutive draws continue the word stream; each draw consumes an even
    number of words (odd-count draws discard their trailing normal).
    """

    def __init__(self, seed: int):
        if not (0 <= int(seed) < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")
        self._bitgen = np.random.PCG64(int(seed))

    def normal(self, count: int) -> np.ndarray:
        """Next `count` standard normal doubles from the stream."""
        pairs = (int(count) + 1) // 2
        if pairs == 0:
            return np.empty(0, dtype=np.float64)
        words = self._bitgen.random_raw(2 * pairs)
        return _box_muller(words)[:count]

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        """Next rows*cols normals, filled row-major."""
        return self.normal(rows * cols).reshape(rows, cols)


def standard_normal(seed: int, count: int) -> np.ndarray:
    """Standard normal doubles from a fresh stream for `seed`."""
    return PinnedStream(seed).normal(count)
