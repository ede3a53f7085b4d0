"""The composite template ``min_x f(x) + g(x) + h(Ax)``."""
import numpy as np

from .prox import SeparableFunction
from .sparse import SparseMatrix

__all__ = ["QuadraticSmooth", "ProblemSpec", "check_coordinate_smoothness"]


class QuadraticSmooth:
    """Smooth convex quadratic ``f(x) = x'Qx/2 + q'x``.

    The coordinatewise Lipschitz constants of the gradient are ``beta_i = Q_ii``.
    ``Q`` must be symmetric positive semidefinite.
    """

    def __init__(self, Q, q=None):
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise ValueError("Q must be square")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * (1 + abs(Q).max())):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-10 * (1 + abs(Q).max()):
            raise ValueError("Q must be positive semidefinite")
        self.Q = np.ascontiguousarray(Q)
        self.q = np.zeros(n) if q is None else np.asarray(q, dtype=np.float64).copy()
        self.beta = np.diag(self.Q).copy()
        self.lipschitz = float(np.linalg.eigvalsh(Q).max()) if n else 0.0

    @property
    def size(self):
        return self.q.size

    @property
    def is_diagonal(self):
        return not np.any(self.Q - np.diag(self.beta))

    def value(self, x):
        return float(0.5 * x @ (self.Q @ x) + self.q @ x)

    def grad(self, x):
        return self.Q @ x + self.q

    def grad_coord(self, x, i):
        return float(self.Q[i] @ x + self.q[i])


class ProblemSpec:
    """Data of one instance of the template.

    Parameters
    ----------
    A : SparseMatrix
        ``m x n`` coupling matrix.
    g : SeparableFunction
        Separable nonsmooth primal term over ``n`` coordinates.
    hstar : SeparableFunction
        Conjugate of ``h``, separable over ``m`` coordinates.  Only separable
        ``h`` is supported; anything else is rejected.
    f : QuadraticSmooth, optional
        Smooth term, zero when omitted.
    b : array-like, optional
        Offset carried by ``h`` (targets for least squares, right-hand side
        for equality constraints); informational for metrics.
    name : str, optional
    """

    def __init__(self, A, g, hstar, f=None, b=None, name="generic"):
        if not isinstance(A, SparseMatrix):
            raise TypeError("A must be a SparseMatrix")
        for label, fun, size in (("g", g, A.n), ("hstar", hstar, A.m)):
            if not isinstance(fun, SeparableFunction):
                raise TypeError("%s must be a SeparableFunction (separable terms only)" % label)
            if fun.size != size:
                raise ValueError("%s has %d coordinates, expected %d" % (label, fun.size, size))
        if f is not None:
            if not isinstance(f, QuadraticSmooth):
                raise TypeError("f must be a QuadraticSmooth")
            if f.size != A.n:
                raise ValueError("f has %d coordinates, expected %d" % (f.size, A.n))
        self.A = A
        self.g = g
        self.hstar = hstar
        self.f = f
        self.b = None if b is None else np.asarray(b, dtype=np.float64)
        self.name = name

    @property
    def n(self):
        return self.A.n

    @property
    def m(self):
        return self.A.m

    @property
    def beta(self):
        return np.zeros(self.n) if self.f is None else self.f.beta

    @property
    def constrained(self):
        """True when ``h`` is the indicator of ``{b}``."""
        return self.hstar.kind == "linear_conjugate"

    def f_value(self, x):
        return 0.0 if self.f is None else self.f.value(x)

    def f_grad(self, x):
        return np.zeros(self.n) if self.f is None else self.f.grad(x)

    def __repr__(self):
        return "ProblemSpec(%r, m=%d, n=%d, nnz=%d)" % (self.name, self.m, self.n, self.A.nnz)


def check_coordinate_smoothness(f, rng, samples=100, scale=1.0, slack=1e-8):
    """Sample the coordinatewise descent inequality of ``f``.

    Checks ``f(x + u e_i) <= f(x) + grad_i f(x) u + beta_i u^2 / 2`` at random
    ``x``, ``i`` and ``u`` drawn from ``rng`` (a ``numpy.random.Generator``).
    """
    n = f.size
    for _ in range(samples):
        x = scale * rng.standard_normal(n)
        i = int(rng.integers(n))
        u = scale * rng.standard_normal()
        moved = x.copy()
        moved[i] += u
        bound = f.value(x) + f.grad_coord(x, i) * u + 0.5 * f.beta[i] * u * u
        if f.value(moved) > bound + slack * (1.0 + abs(bound)):
            return False
    return True
