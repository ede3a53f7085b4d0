"""Primal-dual coordinate descent with random extrapolation (PURE-CD).

Each iteration samples one primal coordinate ``i`` and touches only the dual
coordinates ``J(i)`` where column ``i`` of ``A`` is nonzero:

1. ``ybar_j = prox_{sigma_j h*_j}(y_j + sigma_j (Ax)_j)`` for ``j`` in ``J(i)``;
2. ``xbar_i = prox_{tau_i g_i}(x_i - tau_i (grad_i f(x) + sum_j A_ji ybar_j))``;
3. ``x_i <- xbar_i`` and, with ``delta = xbar_i - x_i``,
   ``y_j <- ybar_j + sigma_j theta_j A_ji delta`` for ``j`` in ``J(i)``.

``Ax`` is cached and patched per update, so the cost is ``O(|J(i)|)`` plus the
cost of one partial gradient.  Ergodic averages of ``x_k`` and of the
auxiliary dual sequence (equal to ``ybar`` on the rows touched last) are kept
lazily: a coordinate's running sum is only brought up to date when that
coordinate changes.
"""
import logging
import time
from dataclasses import dataclass

import numba
import numpy as np

from . import metrics
from .prox import prox_scalar
from .sampling import alias_draw, draw, make_rng
from .sparse import matTvec, matvec

__all__ = [
    "StepSizes",
    "StepReport",
    "SolverState",
    "StepSizeError",
    "heuristic_steps",
    "step_bound",
    "check_steps",
    "step",
    "naive_step",
    "averages",
    "run",
    "RunResult",
]

logger = logging.getLogger(__name__)


class StepSizeError(ValueError):
    """Step sizes violate the admissibility bound and no override was given."""


@dataclass
class StepSizes:
    tau: np.ndarray
    sigma: np.ndarray
    gamma: float = float("nan")


@dataclass
class StepReport:
    admissible: bool
    bound: np.ndarray
    ratio: np.ndarray
    tightest: int

    @property
    def slack(self):
        return self.bound[self.tightest] * (1.0 - self.ratio[self.tightest])


@dataclass
class SolverState:
    """Iterate plus lazy-averaging bookkeeping.

    ``sum_x[i]`` holds the sum of ``x_t[i]`` for ``t <= last_x[i]``; the
    coordinate kept its current value since then.  ``sum_y``/``last_y`` do the
    same for the auxiliary dual sequence whose current value is ``breve``.
    """

    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    breve: np.ndarray
    sum_x: np.ndarray
    sum_y: np.ndarray
    last_x: np.ndarray
    last_y: np.ndarray
    counters: np.ndarray  # [iteration k, dual coordinates touched]

    @classmethod
    def initial(cls, spec, x0=None, y0=None):
        x = np.zeros(spec.n) if x0 is None else np.array(x0, dtype=np.float64)
        y = np.zeros(spec.m) if y0 is None else np.array(y0, dtype=np.float64)
        if x.shape != (spec.n,) or y.shape != (spec.m,):
            raise ValueError("initial point has wrong dimensions")
        return cls(
            x=x,
            y=y,
            a=matvec(spec.A, x),
            breve=y.copy(),
            sum_x=np.zeros(spec.n),
            sum_y=np.zeros(spec.m),
            last_x=np.zeros(spec.n, dtype=np.int64),
            last_y=np.zeros(spec.m, dtype=np.int64),
            counters=np.zeros(2, dtype=np.int64),
        )

    @property
    def k(self):
        return int(self.counters[0])

    @property
    def touched(self):
        return int(self.counters[1])

    def copy(self):
        return SolverState(**{f: getattr(self, f).copy() for f in self.__dataclass_fields__})


def heuristic_steps(A, law, gamma):
    """Diagonal steps ``sigma_j = 1/(theta_j M)``, ``tau_i = gamma M / ||A_i||^2``.

    ``M`` is the largest column norm.  For uniform sampling and ``f = 0``
    these satisfy the admissibility bound for any ``0 < gamma < 1``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1), got %r" % gamma)
    if (A.col_sq_norms == 0).any():
        raise ValueError("matrix has empty columns")
    M = float(np.sqrt(A.col_sq_norms.max()))
    sigma = 1.0 / (law.theta * M)
    tau = gamma * M / A.col_sq_norms
    return StepSizes(tau=tau, sigma=sigma, gamma=float(gamma))


def step_bound(A, law, sigma, beta=None):
    """Per-coordinate upper bound on ``tau_i`` guaranteeing convergence.

    ``(2 p_i - p_min) / (beta_i p_i + (p_i / p_min) sum_j pi_j sigma_j A_ji^2)``
    """
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (A.m,))
    beta = np.zeros(A.n) if beta is None else np.asarray(beta, dtype=np.float64)
    p, pmin = law.p, law.p_min
    weighted = (law.pi * sigma)[A.csc_indices] * A.csc_data**2
    cols = np.repeat(np.arange(A.n), A.col_support)
    s = np.bincount(cols, weights=weighted, minlength=A.n)
    denom = beta * p + (p / pmin) * s
    with np.errstate(divide="ignore"):
        return np.where(denom > 0, (2 * p - pmin) / np.where(denom > 0, denom, 1.0), np.inf)


def check_steps(spec, law, steps):
    """Test the strict admissibility bound for every primal coordinate."""
    bound = step_bound(spec.A, law, steps.sigma, spec.beta)
    tau = np.broadcast_to(np.asarray(steps.tau, dtype=np.float64), (spec.n,))
    ratio = tau / bound
    tightest = int(np.argmax(ratio))
    return StepReport(bool((ratio < 1.0).all()), bound, ratio, tightest)


@numba.njit(cache=True)
def _purecd_kernel(
    n_steps, indptr, indices, data,
    g_code, g_p1, g_p2, h_code, h_p1, h_p2,
    tau, sigma, theta, alias_prob, alias_index,
    has_f, Q, q, rng,
    x, y, a, breve, sum_x, sum_y, last_x, last_y, counters,
):
    m = y.shape[0]
    n = x.shape[0]
    for _ in range(n_steps):
        k = counters[0]
        if k == 0:
            # auxiliary dual sequence starts from the full ybar_1
            for j in range(m):
                breve[j] = prox_scalar(h_code, h_p1[j], h_p2[j], sigma[j], y[j] + sigma[j] * a[j])
        i = alias_draw(alias_prob, alias_index, rng)
        lo = indptr[i]
        hi = indptr[i + 1]

        s = 0.0
        for t in range(lo, hi):
            j = indices[t]
            yb = prox_scalar(h_code, h_p1[j], h_p2[j], sigma[j], y[j] + sigma[j] * a[j])
            # y_j is rebuilt from ybar below; keep ybar there meanwhile
            y[j] = yb
            s += data[t] * yb
        grad = 0.0
        if has_f:
            grad = q[i]
            for c in range(n):
                grad += Q[i, c] * x[c]
        xb = prox_scalar(g_code, g_p1[i], g_p2[i], tau[i], x[i] - tau[i] * (grad + s))
        delta = xb - x[i]

        sum_x[i] += x[i] * (k - last_x[i])
        last_x[i] = k
        x[i] = xb
        for t in range(lo, hi):
            j = indices[t]
            yb = y[j]
            if k > 0:
                sum_y[j] += breve[j] * (k - last_y[j])
                last_y[j] = k
                breve[j] = yb
            step = delta * data[t]
            a[j] += step
            y[j] = yb + sigma[j] * theta[j] * step
        counters[0] = k + 1
        counters[1] += hi - lo


def _kernel_args(spec, law, steps):
    f = spec.f
    if f is None:
        Q, q, has_f = np.zeros((1, 1)), np.zeros(1), False
    else:
        Q, q, has_f = f.Q, f.q, True
    A = spec.A
    return (
        A.csc_indptr, A.csc_indices, A.csc_data,
        spec.g.code, spec.g.p1, spec.g.p2,
        spec.hstar.code, spec.hstar.p1, spec.hstar.p2,
        np.broadcast_to(np.asarray(steps.tau, dtype=np.float64), (spec.n,)).copy(),
        np.broadcast_to(np.asarray(steps.sigma, dtype=np.float64), (spec.m,)).copy(),
        law.theta, law.alias_prob, law.alias_index,
        has_f, Q, q,
    )


def _state_args(state):
    return (
        state.x, state.y, state.a, state.breve, state.sum_x, state.sum_y,
        state.last_x, state.last_y, state.counters,
    )


def _advance(spec, law, steps, state, rng, n_steps, kargs=None):
    if kargs is None:
        kargs = _kernel_args(spec, law, steps)
    _purecd_kernel(n_steps, *kargs, rng, *_state_args(state))
    return state


def step(spec, law, steps, state, rng):
    """One PURE-CD iteration, in place; returns ``state``."""
    if state.x.shape != (spec.n,) or state.y.shape != (spec.m,):
        raise ValueError("state does not match the problem dimensions")
    return _advance(spec, law, steps, state, rng, 1)


def naive_step(spec, law, steps, state, rng):
    """Dense reference for :func:`step`.

    Forms the full ``ybar`` and ``xbar`` vectors from scratch, then applies
    the random coordinate update.  Averages are accumulated eagerly (every
    coordinate's ``last`` stamp is the current iteration), which is the same
    bookkeeping format as the lazy version.
    """
    A = spec.A
    tau = np.broadcast_to(np.asarray(steps.tau, dtype=np.float64), (spec.n,))
    sigma = np.broadcast_to(np.asarray(steps.sigma, dtype=np.float64), (spec.m,))
    x, y = state.x, state.y
    k = state.k

    ybar = spec.hstar.prox(sigma, y + sigma * matvec(A, x))
    xbar = spec.g.prox(tau, x - tau * (spec.f_grad(x) + matTvec(A, ybar)))
    i = draw(law, rng)

    x_new = x.copy()
    x_new[i] = xbar[i]
    rows, _ = A.column(i)
    dAx = matvec(A, x_new - x)
    y_new = y.copy()
    y_new[rows] = ybar[rows] + sigma[rows] * law.theta[rows] * dAx[rows]

    if k == 0:
        state.breve[:] = ybar
    else:
        state.breve[rows] = ybar[rows]
    state.x[:] = x_new
    state.y[:] = y_new
    state.a[:] = matvec(A, x_new)
    state.sum_x += x_new
    state.sum_y += state.breve
    state.last_x[:] = k + 1
    state.last_y[:] = k + 1
    state.counters[0] = k + 1
    state.counters[1] += rows.size
    return state


def averages(state):
    """Ergodic means of ``x_1..x_K`` and of the auxiliary dual sequence.

    Does not modify ``state``.  Before the first iteration the current point
    is returned.
    """
    K = state.k
    if K == 0:
        return state.x.copy(), state.y.copy()
    x_av = (state.sum_x + state.x * (K - state.last_x)) / K
    y_av = (state.sum_y + state.breve * (K - state.last_y)) / K
    return x_av, y_av


@dataclass
class RunResult:
    x: np.ndarray
    y: np.ndarray
    x_av: np.ndarray
    y_av: np.ndarray
    trace: metrics.Trace
    state: SolverState
    stopped_early: bool = False


def _checkpoint_plan(total, checkpoint_every):
    if checkpoint_every is None:
        return [total]
    if np.ndim(checkpoint_every) == 0:
        every = int(checkpoint_every)
        if every <= 0:
            raise ValueError("checkpoint_every must be positive")
        plan = list(range(every, total, every))
        return plan + [total]
    plan = sorted({int(c) for c in checkpoint_every if 0 < int(c) <= total})
    if not plan or plan[-1] != total:
        plan.append(total)
    return plan


def iterations_for_epochs(law, A, epochs):
    """Iterations whose expected touched count equals ``epochs * nnz``."""
    return int(np.ceil(epochs * A.nnz / law.expected_cost))


def run(
    spec,
    law,
    steps,
    iterations=None,
    epochs=None,
    checkpoint_every=None,
    seed=0,
    averaging=True,
    reference=None,
    x0=None,
    y0=None,
    target=None,
    target_metric="suboptimality",
    gap_radius=10.0,
    override=False,
):
    """Run PURE-CD for a fixed budget, recording a trace at checkpoints.

    Parameters
    ----------
    iterations, epochs : int or float
        Budget; exactly one must be given.  An epoch is ``nnz`` touched dual
        coordinates in expectation.
    checkpoint_every : int or sequence of int, optional
        Checkpoint period, or explicit iteration counts.  The final
        iteration is always a checkpoint.
    averaging : bool
        When false, ``x_av``/``y_av`` in the result are the final iterates.
    reference : metrics.Reference, optional
        Enables suboptimality, gap and distance columns.
    target : float, optional
        Stop at the first checkpoint where ``target_metric`` is at most this.
    override : bool
        Run even when the step sizes fail :func:`check_steps`.

    Returns
    -------
    RunResult
    """
    if (iterations is None) == (epochs is None):
        raise ValueError("give exactly one of iterations or epochs")
    total = int(iterations) if iterations is not None else iterations_for_epochs(law, spec.A, epochs)
    if total <= 0:
        raise ValueError("budget must be positive")
    report = check_steps(spec, law, steps)
    if not report.admissible:
        msg = "step sizes not admissible: tau/bound = %.4g at coordinate %d" % (
            report.ratio[report.tightest], report.tightest)
        if not override:
            raise StepSizeError(msg)
        logger.warning(msg)

    rng = make_rng(seed)
    state = SolverState.initial(spec, x0, y0)
    kargs = _kernel_args(spec, law, steps)
    wx = 1.0 / (np.broadcast_to(steps.tau, (spec.n,)) * law.p)
    wy = 1.0 / (np.broadcast_to(steps.sigma, (spec.m,)) * law.pi)
    trace = metrics.Trace()
    elapsed = 0.0
    stopped = False
    for cp in _checkpoint_plan(total, checkpoint_every):
        tic = time.perf_counter()
        _advance(spec, law, steps, state, rng, cp - state.k, kargs)
        elapsed += (time.perf_counter() - tic) * 1e3
        gx, gy = averages(state) if averaging else (state.x, state.y)
        row = metrics.checkpoint_metrics(
            spec, state.x, state.y, gx, gy, reference, wx, wy, gap_radius
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
    x_av, y_av = averages(state) if averaging else (state.x.copy(), state.y.copy())
    return RunResult(state.x.copy(), state.y.copy(), x_av, y_av, trace, state, stopped)
