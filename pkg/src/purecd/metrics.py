"""Convergence diagnostics and the checkpoint trace."""
import csv
from typing import NamedTuple

import numpy as np

from .sparse import matTvec, matvec

__all__ = [
    "Reference",
    "objective",
    "primal_value",
    "feasibility",
    "restricted_gap",
    "kkt_residual",
    "distance_to",
    "Trace",
    "TRACE_COLUMNS",
]


class Reference(NamedTuple):
    """High-accuracy solution used as ground truth by the metrics."""

    x: np.ndarray
    y: np.ndarray
    objective: float
    kkt: float = 0.0
    iterations: int = 0
    converged: bool = True


def objective(spec, x):
    """``f(x) + g(x) + h(Ax)``; ``inf`` off the domain (e.g. ``Ax != b``)."""
    x = np.asarray(x, dtype=np.float64)
    h = spec.hstar.conjugate(matvec(spec.A, x))
    return spec.f_value(x) + spec.g(x) + h


def primal_value(spec, x):
    """The objective with an equality-constraint indicator left out.

    For ``h`` the indicator of ``{b}`` this is ``f(x) + g(x)``, whose gap to
    the optimum is tracked next to ``feasibility``; otherwise it is
    :func:`objective`.
    """
    if spec.constrained:
        return spec.f_value(x) + spec.g(x)
    return objective(spec, x)


def feasibility(spec, x):
    """``||Ax - b||`` for equality-constrained problems, ``nan`` otherwise."""
    if not spec.constrained:
        return float("nan")
    return float(np.linalg.norm(matvec(spec.A, x) - spec.hstar.p1))


def restricted_gap(spec, xbar, ybar, reference, radius=10.0):
    """Primal-dual gap restricted to a box around ``reference``.

    Computes the supremum over ``x`` in ``x_ref +/- radius`` and ``y`` in
    ``y_ref +/- radius`` of::

        f(xbar) + g(xbar) + <A xbar, y> - h*(y) - f(x) - g(x) - <A x, ybar> + h*(ybar)

    Both suprema split over coordinates because ``g`` and ``h*`` are separable
    and the coupling is bilinear.  A smooth term ``f`` is supported when it is
    separable (diagonal quadratic).
    """
    xbar = np.asarray(xbar, dtype=np.float64)
    ybar = np.asarray(ybar, dtype=np.float64)
    fixed = spec.f_value(xbar) + spec.g(xbar) + spec.hstar(ybar)

    Ax = matvec(spec.A, xbar)
    dual = spec.hstar.sup_linear(Ax, reference.y - radius, reference.y + radius)

    c = -matTvec(spec.A, ybar)
    if spec.f is None:
        primal = spec.g.sup_linear(c, reference.x - radius, reference.x + radius)
    elif spec.f.is_diagonal:
        primal = spec.g.sup_linear(
            c - spec.f.q, reference.x - radius, reference.x + radius, d=spec.f.beta
        )
    else:
        raise ValueError("restricted gap needs a separable smooth term")
    return float(fixed + dual.sum() + primal.sum())


def kkt_residual(spec, x, y):
    """Norm of the prox fixed-point residual with unit steps.

    Zero exactly when ``(x, y)`` satisfies the optimality inclusion.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rx = x - spec.g.prox(1.0, x - (spec.f_grad(x) + matTvec(spec.A, y)))
    ry = y - spec.hstar.prox(1.0, y + matvec(spec.A, x))
    return float(np.sqrt(rx @ rx + ry @ ry))


def distance_to(x, x_ref, weights=None):
    """Weighted Euclidean distance ``sqrt(sum_i w_i (x_i - r_i)^2)``."""
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    if x.shape != x_ref.shape:
        raise ValueError("shape mismatch %r vs %r" % (x.shape, x_ref.shape))
    d = x - x_ref
    if weights is None:
        return float(np.sqrt(d @ d))
    weights = np.broadcast_to(np.asarray(weights, dtype=np.float64), d.shape)
    return float(np.sqrt(np.sum(weights * d * d)))


TRACE_COLUMNS = (
    "iteration",
    "epochs",
    "objective",
    "suboptimality",
    "gap",
    "feasibility",
    "dist_plain",
    "dist_weighted",
    "touched",
    "wall_ms",
)

_INT_COLUMNS = ("iteration", "touched")


class Trace:
    """Checkpointed metric rows, one per checkpoint, in :data:`TRACE_COLUMNS` order.

    ``objective``, ``suboptimality`` and both distances describe the current
    iterate.  ``gap`` and ``feasibility`` describe the ergodic averages when
    averaging is enabled and the current iterate otherwise.  Columns that
    need a reference solution are ``nan`` when none was supplied.
    """

    columns = TRACE_COLUMNS

    def __init__(self):
        self.rows = []

    def append(self, **values):
        self.rows.append(tuple(values[c] for c in self.columns))

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, column):
        k = self.columns.index(column)
        return np.array([row[k] for row in self.rows])

    @property
    def last(self):
        return dict(zip(self.columns, self.rows[-1])) if self.rows else {}

    def to_csv(self, fh, wall_time=True):
        cols = [c for c in self.columns if wall_time or c != "wall_ms"]
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in self.rows:
            rec = dict(zip(self.columns, row))
            writer.writerow(
                [str(int(rec[c])) if c in _INT_COLUMNS else "%.12e" % rec[c] for c in cols]
            )


def checkpoint_metrics(spec, x, y, gap_x, gap_y, reference, wx, wy, radius=10.0):
    """Metric values of one trace row, minus the bookkeeping columns."""
    obj = primal_value(spec, x)
    nan = float("nan")
    row = {
        "objective": obj,
        "feasibility": feasibility(spec, gap_x),
        "suboptimality": nan,
        "gap": nan,
        "dist_plain": nan,
        "dist_weighted": nan,
    }
    if reference is not None:
        row["suboptimality"] = obj - reference.objective
        row["gap"] = restricted_gap(spec, gap_x, gap_y, reference, radius)
        z = np.concatenate([x, y])
        z_ref = np.concatenate([reference.x, reference.y])
        row["dist_plain"] = distance_to(z, z_ref)
        row["dist_weighted"] = distance_to(z, z_ref, np.concatenate([wx, wy]))
    return row
