"""Separable convex functions: proximal maps, values and conjugate values.

Every function is a sum of scalar terms ``phi_i(u_i)`` of a single kind with
per-coordinate parameters.  The scalar kernels are compiled with numba so the
solver loops can call them directly through the integer ``code`` of a kind.
"""
import math

import numba
import numpy as np

__all__ = [
    "SeparableFunction",
    "prox",
    "value",
    "conjugate_value",
    "conjugate_pair_check",
    "KINDS",
]

ZERO, L1, SQ_L2, LS_CONJ, LINEAR_CONJ, BOX = range(6)

KINDS = {
    "zero": ZERO,
    "l1": L1,
    "sq_l2": SQ_L2,
    "ls_conjugate": LS_CONJ,
    "linear_conjugate": LINEAR_CONJ,
    "box_indicator": BOX,
}


@numba.njit(cache=True)
def prox_scalar(kind, p1, p2, gamma, v):
    if kind == ZERO:
        return v
    if kind == L1:
        t = gamma * p1
        if v > t:
            return v - t
        if v < -t:
            return v + t
        return 0.0
    if kind == SQ_L2:
        return v / (1.0 + gamma * p1)
    if kind == LS_CONJ:
        return (v - gamma * p1) / (1.0 + gamma)
    if kind == LINEAR_CONJ:
        return v - gamma * p1
    # BOX
    if v < p1:
        return p1
    if v > p2:
        return p2
    return v


@numba.njit(cache=True)
def value_scalar(kind, p1, p2, u):
    if kind == ZERO:
        return 0.0
    if kind == L1:
        return p1 * abs(u)
    if kind == SQ_L2:
        return 0.5 * p1 * u * u
    if kind == LS_CONJ:
        return 0.5 * u * u + p1 * u
    if kind == LINEAR_CONJ:
        return p1 * u
    if p1 <= u <= p2:
        return 0.0
    return np.inf


@numba.njit(cache=True)
def conjugate_value_scalar(kind, p1, p2, t):
    """``sup_u t*u - phi(u)`` in closed form."""
    if kind == ZERO:
        return 0.0 if t == 0.0 else np.inf
    if kind == L1:
        return 0.0 if abs(t) <= p1 else np.inf
    if kind == SQ_L2:
        if p1 > 0.0:
            return 0.5 * t * t / p1
        return 0.0 if t == 0.0 else np.inf
    if kind == LS_CONJ:
        return 0.5 * (t - p1) * (t - p1)
    if kind == LINEAR_CONJ:
        return 0.0 if t == p1 else np.inf
    return p2 * t if t >= 0.0 else p1 * t


@numba.njit(cache=True)
def _clamp(u, lo, hi):
    return min(max(u, lo), hi)


@numba.njit(cache=True)
def _concave_at(kind, p1, p2, c, d, u):
    return c * u - value_scalar(kind, p1, p2, u) - 0.5 * d * u * u


@numba.njit(cache=True)
def sup_scalar(kind, p1, p2, c, d, lo, hi):
    """``sup { c*u - phi(u) - d*u^2/2 : lo <= u <= hi }`` for ``d >= 0``.

    The objective is concave in one variable, so its maximum over an interval
    sits at the clamped unconstrained maximizer, at an endpoint, or at a kink
    of ``phi``; every such candidate is evaluated.
    """
    if kind == BOX:
        lo = max(lo, p1)
        hi = min(hi, p2)
        if lo > hi:
            return -np.inf
    best = max(_concave_at(kind, p1, p2, c, d, lo), _concave_at(kind, p1, p2, c, d, hi))
    best = max(best, _concave_at(kind, p1, p2, c, d, _clamp(0.0, lo, hi)))
    if d > 0.0:
        u = _clamp(prox_scalar(kind, p1, p2, 1.0 / d, c / d), lo, hi)
        best = max(best, _concave_at(kind, p1, p2, c, d, u))
    elif kind == SQ_L2 and p1 > 0.0:
        best = max(best, _concave_at(kind, p1, p2, c, d, _clamp(c / p1, lo, hi)))
    elif kind == LS_CONJ:
        best = max(best, _concave_at(kind, p1, p2, c, d, _clamp(c - p1, lo, hi)))
    return best


@numba.njit(cache=True)
def prox_array(kind, p1, p2, gamma, v, out):
    for i in range(v.shape[0]):
        out[i] = prox_scalar(kind, p1[i], p2[i], gamma[i], v[i])
    return out


@numba.njit(cache=True)
def value_array(kind, p1, p2, u, out):
    for i in range(u.shape[0]):
        out[i] = value_scalar(kind, p1[i], p2[i], u[i])
    return out


@numba.njit(cache=True)
def conjugate_value_array(kind, p1, p2, t, out):
    for i in range(t.shape[0]):
        out[i] = conjugate_value_scalar(kind, p1[i], p2[i], t[i])
    return out


@numba.njit(cache=True)
def sup_array(kind, p1, p2, c, d, lo, hi, out):
    for i in range(c.shape[0]):
        out[i] = sup_scalar(kind, p1[i], p2[i], c[i], d[i], lo[i], hi[i])
    return out


def _broadcast(x, size, name):
    arr = np.broadcast_to(np.asarray(x, dtype=np.float64), (size,)).copy()
    if np.isnan(arr).any():
        raise ValueError("%s contains NaN" % name)
    return arr


class SeparableFunction:
    """``phi(u) = sum_i phi_i(u_i)`` with every term of the same kind.

    Use the named constructors rather than ``__init__``:

    ============================  ==============================  ==========
    constructor                   ``phi_i(u)``                    parameters
    ============================  ==============================  ==========
    ``zero(n)``                   ``0``
    ``l1(lam, n)``                ``lam_i |u|``                   ``lam >= 0``
    ``sq_l2(lam, n)``             ``lam_i u^2 / 2``               ``lam >= 0``
    ``ls_conjugate(b)``           ``u^2 / 2 + b_i u``
    ``linear_conjugate(b)``       ``b_i u``
    ``box_indicator(lo, hi, n)``  ``0`` on ``[lo_i, hi_i]``       ``lo <= hi``
    ============================  ==============================  ==========

    ``ls_conjugate(b)`` is the conjugate of ``(t - b)^2 / 2`` and
    ``linear_conjugate(b)`` the conjugate of the indicator of ``{b}``.
    """

    def __init__(self, kind, p1, p2):
        if kind not in KINDS:
            raise ValueError("unknown kind %r" % kind)
        self.kind = kind
        self.code = KINDS[kind]
        self.p1 = np.ascontiguousarray(p1, dtype=np.float64)
        self.p2 = np.ascontiguousarray(p2, dtype=np.float64)
        if self.p1.shape != self.p2.shape or self.p1.ndim != 1:
            raise ValueError("parameter arrays must be 1-d and of equal length")
        if kind in ("l1", "sq_l2") and (self.p1 < 0).any():
            raise ValueError("%s weight must be nonnegative" % kind)
        if kind == "box_indicator" and (self.p1 > self.p2).any():
            raise ValueError("box requires lo <= hi")
        self.p1.setflags(write=False)
        self.p2.setflags(write=False)

    @classmethod
    def zero(cls, n):
        return cls("zero", np.zeros(n), np.zeros(n))

    @classmethod
    def l1(cls, lam, n):
        return cls("l1", _broadcast(lam, n, "lam"), np.zeros(n))

    @classmethod
    def sq_l2(cls, lam, n):
        return cls("sq_l2", _broadcast(lam, n, "lam"), np.zeros(n))

    @classmethod
    def ls_conjugate(cls, b):
        b = np.atleast_1d(np.asarray(b, dtype=np.float64))
        return cls("ls_conjugate", b, np.zeros(b.size))

    @classmethod
    def linear_conjugate(cls, b):
        b = np.atleast_1d(np.asarray(b, dtype=np.float64))
        return cls("linear_conjugate", b, np.zeros(b.size))

    @classmethod
    def box_indicator(cls, lo, hi, n):
        return cls("box_indicator", _broadcast(lo, n, "lo"), _broadcast(hi, n, "hi"))

    @property
    def size(self):
        return self.p1.size

    def prox(self, gamma, v):
        """Coordinatewise prox with step ``gamma`` (scalar or per-coordinate)."""
        v = np.asarray(v, dtype=np.float64)
        gamma = _broadcast(gamma, self.size, "gamma")
        if (gamma <= 0).any():
            raise ValueError("prox step must be positive")
        if np.isnan(v).any():
            raise ValueError("prox input contains NaN")
        return prox_array(self.code, self.p1, self.p2, gamma, v, np.empty(self.size))

    def values(self, u):
        u = np.asarray(u, dtype=np.float64)
        return value_array(self.code, self.p1, self.p2, u, np.empty(self.size))

    def __call__(self, u):
        return float(self.values(u).sum())

    def conjugate_values(self, t):
        t = np.asarray(t, dtype=np.float64)
        return conjugate_value_array(self.code, self.p1, self.p2, t, np.empty(self.size))

    def conjugate(self, t):
        """Value of the Fenchel conjugate ``phi*(t)``."""
        return float(self.conjugate_values(t).sum())

    def sup_linear(self, c, lo, hi, d=0.0):
        """Per-coordinate ``sup_{lo<=u<=hi} c*u - phi_i(u) - d*u^2/2``."""
        n = self.size
        return sup_array(
            self.code, self.p1, self.p2,
            _broadcast(c, n, "c"), _broadcast(d, n, "d"),
            _broadcast(lo, n, "lo"), _broadcast(hi, n, "hi"),
            np.empty(n),
        )

    def __repr__(self):
        return "SeparableFunction(%r, size=%d)" % (self.kind, self.size)


def prox(fun, coord, gamma, v):
    """Scalar prox of term ``coord``: ``argmin_u phi_coord(u) + (u - v)^2 / (2 gamma)``."""
    if not gamma > 0:
        raise ValueError("prox step must be positive, got %r" % gamma)
    if math.isnan(v):
        raise ValueError("prox input is NaN")
    return prox_scalar(fun.code, fun.p1[coord], fun.p2[coord], float(gamma), float(v))


def value(fun, coord, u):
    """``phi_coord(u)``; ``inf`` outside the domain of an indicator."""
    return value_scalar(fun.code, fun.p1[coord], fun.p2[coord], float(u))


def conjugate_value(fun, coord, t):
    return conjugate_value_scalar(fun.code, fun.p1[coord], fun.p2[coord], float(t))


def conjugate_pair_check(primal, dual, samples, subgradient=None, tol=1e-8):
    """Sampled Fenchel-Young check for a scalar conjugate pair.

    Parameters
    ----------
    primal, dual : callable
        Scalar functions ``h`` and ``h*``.
    samples : array-like, shape (k, 2)
        Points ``(t, y)`` at which ``h(t) + h*(y) >= t*y`` must hold.
    subgradient : callable, optional
        Maps ``t`` to some ``y`` in the subdifferential of ``h`` at ``t``;
        when given, equality ``h(t) + h*(y) = t*y`` is also required there.
    tol : float
        Slack allowed in both tests.

    Returns
    -------
    bool
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    for t, y in samples:
        lhs = primal(t) + dual(y)
        if lhs < t * y - tol * (1.0 + abs(t * y)):
            return False
        if subgradient is not None:
            s = subgradient(t)
            gap = primal(t) + dual(s) - t * s
            if not abs(gap) <= tol * (1.0 + abs(t * s)):
                return False
    return True
