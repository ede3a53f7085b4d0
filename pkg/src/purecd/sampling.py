"""Coordinate sampling laws with O(1) draws.

Random numbers come from xoshiro256** seeded through splitmix64, written out
here so that traces are bit-reproducible across platforms and numpy
versions.  A generator state is a ``uint64`` array of length 4 owned by the
caller; one state per solver run.
"""
import logging

import numba
import numpy as np

__all__ = ["SamplingLaw", "make_rng", "next_u64", "uniform", "draw", "draw_inverse_cdf"]

logger = logging.getLogger(__name__)

_MASK = (1 << 64) - 1


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def make_rng(seed):
    """Seed a xoshiro256** state from a 64-bit unsigned integer."""
    seed = int(seed)
    if not 0 <= seed <= _MASK:
        raise ValueError("seed must fit in 64 unsigned bits")
    words = []
    for _ in range(4):
        seed, z = _splitmix64(seed)
        words.append(z)
    return np.array(words, dtype=np.uint64)


@numba.njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@numba.njit(cache=True)
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@numba.njit(cache=True)
def uniform(s):
    """Double in ``[0, 1)`` from the top 53 bits."""
    return np.float64(next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def alias_draw(prob, alias, s):
    n = prob.shape[0]
    i = int(uniform(s) * n)
    if i >= n:
        i = n - 1
    if uniform(s) < prob[i]:
        return i
    return alias[i]


@numba.njit(cache=True)
def _inverse_cdf_draw(cdf, s):
    u = uniform(s) * cdf[-1]
    i = np.searchsorted(cdf, u, side="right")
    return min(i, cdf.shape[0] - 1)


def _alias_table(p):
    """Vose's alias method."""
    n = p.size
    scaled = p * n
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        lo = small.pop()
        hi = large.pop()
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        if scaled[hi] < 1.0:
            small.append(hi)
        else:
            large.append(hi)
    # leftovers are 1 up to rounding
    return prob, alias


class SamplingLaw:
    """Fixed distribution over primal coordinates and its derived weights.

    Attributes
    ----------
    p : ndarray
        Normalized probabilities, length ``n``.
    p_min : float
        Smallest probability.
    pi : ndarray
        ``pi_j = sum of p_i over the columns i with A[j, i] != 0``, length ``m``.
    theta : ndarray
        Dual extrapolation weights ``pi_j / p_min``; at least 1.
    expected_cost : float
        Expected number of dual coordinates touched per draw.
    """

    def __init__(self, p, A):
        p = np.asarray(p, dtype=np.float64)
        if p.shape != (A.n,):
            raise ValueError("p has shape %r, matrix has %d columns" % (p.shape, A.n))
        if not (p > 0).all():
            raise ValueError("all sampling probabilities must be positive")
        total = p.sum()
        if abs(total - 1.0) > 1e-12:
            logger.warning("sampling probabilities sum to %r; normalizing", total)
        self.p = p / total
        self.p_min = float(self.p.min())

        pi = np.zeros(A.m)
        rows_of = np.repeat(self.p, A.col_support)
        np.add.at(pi, A.csc_indices, rows_of)
        if (A.row_support == 0).any():
            raise ValueError("matrix has empty rows; run preprocess first")
        self.pi = pi
        # summing p_i / p_min keeps theta integral (exact) under uniform p
        theta = np.zeros(A.m)
        np.add.at(theta, A.csc_indices, rows_of / self.p_min)
        self.theta = theta
        self.expected_cost = float(np.dot(self.p, A.col_support))
        self.alias_prob, self.alias_index = _alias_table(self.p)
        for arr in (self.p, self.pi, self.theta, self.alias_prob, self.alias_index):
            arr.setflags(write=False)

    @classmethod
    def uniform(cls, A):
        return cls(np.full(A.n, 1.0 / A.n), A)

    @property
    def n(self):
        return self.p.size

    def __repr__(self):
        return "SamplingLaw(n=%d, p_min=%.3g)" % (self.n, self.p_min)


def draw(law, rng):
    """Draw a column index with probability ``law.p[i]``; advances ``rng``."""
    return int(alias_draw(law.alias_prob, law.alias_index, rng))


def draw_inverse_cdf(law, rng):
    """Reference sampler by binary search on the cumulative distribution."""
    return int(_inverse_cdf_draw(np.cumsum(law.p), rng))
