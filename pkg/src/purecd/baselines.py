"""Full-vector baselines: the deterministic primal-dual (Vu-Condat) iteration
and its randomized block-coordinate variant TriPD-BC.

Both cost ``O(nnz)`` per iteration.  They share the problem data layout and
the trace format of :mod:`purecd.solver`.
"""
import time
from dataclasses import dataclass

import numba
import numpy as np

from . import metrics
from .prox import prox_scalar
from .sampling import SamplingLaw, alias_draw, make_rng
from .sparse import matTvec, matvec
from .solver import RunResult, _checkpoint_plan

__all__ = [
    "BaselineState",
    "estimate_norm",
    "baseline_steps",
    "vu_condat_step",
    "tripd_bc_step",
    "run_baseline",
]


@dataclass
class BaselineState:
    x: np.ndarray
    y: np.ndarray
    yhat: np.ndarray
    counters: np.ndarray  # [iteration k, matrix entries read]

    @classmethod
    def initial(cls, spec, x0=None, y0=None):
        x = np.zeros(spec.n) if x0 is None else np.array(x0, dtype=np.float64)
        y = np.zeros(spec.m) if y0 is None else np.array(y0, dtype=np.float64)
        return cls(x, y, y.copy(), np.zeros(2, dtype=np.int64))

    @property
    def k(self):
        return int(self.counters[0])

    @property
    def touched(self):
        return int(self.counters[1])


def estimate_norm(A, max_iter=50, tol=1e-6):
    """Spectral norm of ``A`` by power iteration on ``A'A``."""
    if A.nnz == 0:
        return 0.0
    v = np.ones(A.n) / np.sqrt(A.n)
    est = 0.0
    for _ in range(max_iter):
        w = matTvec(A, matvec(A, v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = np.sqrt(nw)
        v = w / nw
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return float(est)


def baseline_steps(spec, method="vu-condat", norm=None):
    """Scalar ``(tau, sigma)`` with ``sigma = 0.9/||A||``.

    ``tau = 0.9 / (||A|| + L/2)`` where ``L`` is the global Lipschitz
    constant of ``grad f`` for Vu-Condat and ``max_i beta_i`` for TriPD-BC;
    with ``f = 0`` both reduce to ``tau = sigma = 0.9/||A||``.
    """
    norm = estimate_norm(spec.A) if norm is None else norm
    if spec.f is None:
        lip = 0.0
    elif method == "vu-condat":
        lip = spec.f.lipschitz
    else:
        lip = float(spec.f.beta.max())
    return 0.9 / (norm + 0.5 * lip), 0.9 / norm


@numba.njit(cache=True)
def _col_dot(indptr, indices, data, v, out):
    for i in range(out.shape[0]):
        s = 0.0
        for t in range(indptr[i], indptr[i + 1]):
            s += data[t] * v[indices[t]]
        out[i] = s


@numba.njit(cache=True)
def _col_scatter(indptr, indices, data, u, out):
    out[:] = 0.0
    for i in range(u.shape[0]):
        ui = u[i]
        if ui != 0.0:
            for t in range(indptr[i], indptr[i + 1]):
                out[indices[t]] += data[t] * ui


@numba.njit(cache=True)
def _gradient(has_f, Q, q, x, out):
    if has_f:
        for i in range(x.shape[0]):
            s = q[i]
            for c in range(x.shape[0]):
                s += Q[i, c] * x[c]
            out[i] = s
    else:
        out[:] = 0.0


@numba.njit(cache=True)
def _vu_condat_kernel(
    n_steps, indptr, indices, data,
    g_code, g_p1, g_p2, h_code, h_p1, h_p2,
    tau, sigma, has_f, Q, q,
    x, y, counters,
):
    n = x.shape[0]
    m = y.shape[0]
    aty = np.empty(n)
    grad = np.empty(n)
    x_new = np.empty(n)
    ext = np.empty(n)
    aext = np.empty(m)
    nnz = indptr[n]
    for _ in range(n_steps):
        _col_dot(indptr, indices, data, y, aty)
        _gradient(has_f, Q, q, x, grad)
        for i in range(n):
            x_new[i] = prox_scalar(
                g_code, g_p1[i], g_p2[i], tau[i], x[i] - tau[i] * (grad[i] + aty[i])
            )
            ext[i] = 2.0 * x_new[i] - x[i]
        _col_scatter(indptr, indices, data, ext, aext)
        for j in range(m):
            y[j] = prox_scalar(h_code, h_p1[j], h_p2[j], sigma[j], y[j] + sigma[j] * aext[j])
        x[:] = x_new
        counters[0] += 1
        counters[1] += nnz


@numba.njit(cache=True)
def _tripd_kernel(
    n_steps, indptr, indices, data,
    g_code, g_p1, g_p2, h_code, h_p1, h_p2,
    tau, sigma, has_f, Q, q,
    alias_prob, alias_index, rng,
    x, y, yhat, counters,
):
    n = x.shape[0]
    m = y.shape[0]
    ax = np.empty(m)
    ybar = np.empty(m)
    aty = np.empty(n)
    grad = np.empty(n)
    xbar = np.empty(n)
    dx = np.empty(n)
    adx = np.empty(m)
    nnz = indptr[n]
    for _ in range(n_steps):
        _col_scatter(indptr, indices, data, x, ax)
        for j in range(m):
            ybar[j] = prox_scalar(h_code, h_p1[j], h_p2[j], sigma[j], y[j] + sigma[j] * ax[j])
        _col_dot(indptr, indices, data, ybar, aty)
        _gradient(has_f, Q, q, x, grad)
        for i in range(n):
            xbar[i] = prox_scalar(
                g_code, g_p1[i], g_p2[i], tau[i], x[i] - tau[i] * (grad[i] + aty[i])
            )
            dx[i] = xbar[i] - x[i]
        _col_scatter(indptr, indices, data, dx, adx)
        for j in range(m):
            yhat[j] = ybar[j] + sigma[j] * adx[j]
        i = alias_draw(alias_prob, alias_index, rng)
        x[i] = xbar[i]
        for t in range(indptr[i], indptr[i + 1]):
            j = indices[t]
            y[j] = yhat[j]
        counters[0] += 1
        counters[1] += nnz


def _common_args(spec, tau, sigma):
    A = spec.A
    if spec.f is None:
        Q, q, has_f = np.zeros((1, 1)), np.zeros(1), False
    else:
        Q, q, has_f = spec.f.Q, spec.f.q, True
    return (
        A.csc_indptr, A.csc_indices, A.csc_data,
        spec.g.code, spec.g.p1, spec.g.p2,
        spec.hstar.code, spec.hstar.p1, spec.hstar.p2,
        np.broadcast_to(np.asarray(tau, dtype=np.float64), (spec.n,)).copy(),
        np.broadcast_to(np.asarray(sigma, dtype=np.float64), (spec.m,)).copy(),
        has_f, Q, q,
    )


def _check_steps(tau, sigma):
    if not (np.all(np.asarray(tau) > 0) and np.all(np.asarray(sigma) > 0)):
        raise ValueError("step sizes must be positive")


def vu_condat_step(spec, tau, sigma, state, n_steps=1):
    """Deterministic primal-dual iteration, in place::

        x+ = prox_{tau g}(x - tau (grad f(x) + A'y))
        y+ = prox_{sigma h*}(y + sigma A (2 x+ - x))
    """
    _check_steps(tau, sigma)
    _vu_condat_kernel(n_steps, *_common_args(spec, tau, sigma), state.x, state.y, state.counters)
    return state


def tripd_bc_step(spec, law, tau, sigma, state, rng, n_steps=1):
    """TriPD-BC iteration, in place.

    Full ``ybar``, ``xbar`` and ``yhat = ybar + sigma A (xbar - x)`` are formed;
    then one sampled primal coordinate takes its ``xbar`` value and the dual
    coordinates in its column take their ``yhat`` values.
    """
    _check_steps(tau, sigma)
    _tripd_kernel(
        n_steps, *_common_args(spec, tau, sigma),
        law.alias_prob, law.alias_index, rng,
        state.x, state.y, state.yhat, state.counters,
    )
    return state


def run_baseline(
    spec,
    method,
    iterations,
    tau=None,
    sigma=None,
    law=None,
    checkpoint_every=None,
    seed=0,
    reference=None,
    x0=None,
    y0=None,
    target=None,
    target_metric="suboptimality",
    gap_radius=10.0,
):
    """Run ``"vu-condat"`` or ``"tripd-bc"`` with checkpointed metrics.

    Metrics are taken at the last iterate.  The weighted distance uses the
    scalar steps: weights ``1/tau`` and ``1/sigma``.
    """
    if method not in ("vu-condat", "tripd-bc"):
        raise ValueError("unknown baseline %r" % method)
    iterations = int(iterations)
    if iterations <= 0:
        raise ValueError("budget must be positive")
    if tau is None or sigma is None:
        t0, s0 = baseline_steps(spec, method)
        tau = t0 if tau is None else tau
        sigma = s0 if sigma is None else sigma
    if method == "tripd-bc" and law is None:
        law = SamplingLaw.uniform(spec.A)
    rng = make_rng(seed)
    state = BaselineState.initial(spec, x0, y0)
    wx = np.broadcast_to(1.0 / np.asarray(tau, dtype=np.float64), (spec.n,))
    wy = np.broadcast_to(1.0 / np.asarray(sigma, dtype=np.float64), (spec.m,))
    trace = metrics.Trace()
    elapsed = 0.0
    stopped = False
    for cp in _checkpoint_plan(iterations, checkpoint_every):
        tic = time.perf_counter()
        if method == "vu-condat":
            vu_condat_step(spec, tau, sigma, state, cp - state.k)
        else:
            tripd_bc_step(spec, law, tau, sigma, state, rng, cp - state.k)
        elapsed += (time.perf_counter() - tic) * 1e3
        row = metrics.checkpoint_metrics(
            spec, state.x, state.y, state.x, state.y, reference, wx, wy, gap_radius
        )
        trace.append(
            iteration=state.k,
            epochs=state.touched / spec.A.nnz,
            touched=state.touched,
            wall_ms=elapsed,
            **row,
        )
        if target is not None and row[target_metric] <= target:
            stopped = True
            break
    x, y = state.x.copy(), state.y.copy()
    return RunResult(x, y, x.copy(), y.copy(), trace, state, stopped)
