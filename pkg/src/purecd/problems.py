"""Machine-learning problems posed in the template, random instances, and
high-accuracy reference solutions.

Features are primal coordinates and samples are dual coordinates: ``A`` is
the ``samples x features`` data matrix and ``b`` the targets.
"""
import logging

import numpy as np
from scipy import sparse as sp

from . import metrics
from .baselines import BaselineState, baseline_steps, vu_condat_step
from .prox import SeparableFunction
from .sparse import SparseMatrix, preprocess
from .template import ProblemSpec

__all__ = [
    "make_lasso",
    "make_ridge",
    "make_linconstrained",
    "reference_solution",
    "random_matrix",
    "random_problem",
]

logger = logging.getLogger(__name__)


def _check(A, b, lam):
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.m,):
        raise ValueError("b has shape %r, expected (%d,)" % (b.shape, A.m))
    if lam is not None and not lam > 0:
        raise ValueError("regularization must be positive, got %r" % lam)
    return b


def make_lasso(A, b, lam):
    """``lam ||x||_1 + ||Ax - b||^2 / 2``."""
    b = _check(A, b, lam)
    return ProblemSpec(
        A, SeparableFunction.l1(lam, A.n), SeparableFunction.ls_conjugate(b), b=b, name="lasso"
    )


def make_ridge(A, b, lam):
    """``lam ||x||^2 / 2 + ||Ax - b||^2 / 2``."""
    b = _check(A, b, lam)
    return ProblemSpec(
        A, SeparableFunction.sq_l2(lam, A.n), SeparableFunction.ls_conjugate(b), b=b, name="ridge"
    )


def make_linconstrained(A, b, g):
    """``g(x)`` subject to ``Ax = b``."""
    b = _check(A, b, None)
    return ProblemSpec(A, g, SeparableFunction.linear_conjugate(b), b=b, name="linconstrained")


def reference_solution(spec, tol=1e-10, max_iter=10**6, x0=None, y0=None, check_every=50):
    """Solve to high accuracy with the deterministic primal-dual iteration.

    Iterates until the unit-step KKT residual drops below ``tol`` or
    ``max_iter`` iterations have run, and returns the iterate with the
    smallest residual seen.  Non-convergence is logged and flagged in the
    result (``converged=False``); the caller decides what to do.
    """
    tau, sigma = baseline_steps(spec, "vu-condat")
    state = BaselineState.initial(spec, x0, y0)
    best = (metrics.kkt_residual(spec, state.x, state.y), state.x.copy(), state.y.copy())
    while best[0] >= tol and state.k < max_iter:
        vu_condat_step(spec, tau, sigma, state, min(check_every, max_iter - state.k))
        res = metrics.kkt_residual(spec, state.x, state.y)
        if res < best[0]:
            best = (res, state.x.copy(), state.y.copy())
    res, x, y = best
    converged = res < tol
    if not converged:
        logger.warning("reference not converged: KKT residual %.3e after %d iterations", res, state.k)
    return metrics.Reference(x, y, metrics.primal_value(spec, x), res, state.k, converged)


def random_matrix(m, n, density, rng, ensure_nonempty=True):
    """Random sparse ``m x n`` matrix with standard normal entries.

    ``round(density * m * n)`` positions are drawn without replacement.  With
    ``ensure_nonempty`` one entry is added to every empty row and column.
    """
    mat = sp.random(
        m, n, density=density, format="coo", random_state=rng, data_rvs=rng.standard_normal
    )
    rows, cols, vals = [mat.row], [mat.col], [mat.data]
    if ensure_nonempty:
        for axis, size, other in ((1, m, n), (0, n, m)):
            counts = np.bincount(mat.row if axis == 1 else mat.col, minlength=size)
            empty = np.flatnonzero(counts == 0)
            picks = rng.integers(other, size=empty.size)
            rows.append(empty if axis == 1 else picks)
            cols.append(picks if axis == 1 else empty)
            vals.append(rng.standard_normal(empty.size))
    rows, cols, vals = (np.concatenate(v) for v in (rows, cols, vals))
    vals[vals == 0.0] = 1.0
    return SparseMatrix(sp.coo_matrix((vals, (rows, cols)), shape=(m, n)))


def random_problem(kind, m, n, density, rng, lam=0.1, normalize=True):
    """Random instance of ``"lasso"``, ``"ridge"`` or ``"linconstrained"``.

    Targets come from a sparse planted vector plus noise; for the constrained
    kind ``b = A x0`` exactly so the feasible set is nonempty.  The
    constrained kind uses ``g = ||x||^2 / 2`` (scaled by ``lam``).
    """
    A = random_matrix(m, n, density, rng)
    x_true = rng.standard_normal(n) * (rng.random(n) < 0.5)
    if normalize:
        A, _, _, _ = preprocess(A, np.zeros(A.m))
    b = A.to_scipy() @ x_true
    if kind == "lasso":
        return make_lasso(A, b + 0.1 * rng.standard_normal(m), lam)
    if kind == "ridge":
        return make_ridge(A, b + 0.1 * rng.standard_normal(m), lam)
    if kind == "linconstrained":
        return make_linconstrained(A, b, SeparableFunction.sq_l2(lam, n))
    raise ValueError("unknown problem kind %r" % kind)
