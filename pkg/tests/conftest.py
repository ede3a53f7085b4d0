import numpy as np
import pytest

from purecd.prox import SeparableFunction
from purecd.sparse import SparseMatrix, matTvec, matvec
from purecd.template import ProblemSpec, QuadraticSmooth


def random_instance(rng, max_dim=12, density=0.3, smooth=False):
    """Small random problem with mixed term kinds; no empty rows or columns."""
    m = int(rng.integers(1, max_dim + 1))
    n = int(rng.integers(1, max_dim + 1))
    dense = rng.standard_normal((m, n)) * (rng.random((m, n)) < density)
    for j in range(m):
        if not dense[j].any():
            dense[j, rng.integers(n)] = rng.standard_normal()
    for i in range(n):
        if not dense[:, i].any():
            dense[rng.integers(m), i] = rng.standard_normal()
    A = SparseMatrix.from_dense(dense)
    g_kind = rng.integers(3)
    if g_kind == 0:
        g = SeparableFunction.l1(rng.uniform(0.05, 1.0, n), n)
    elif g_kind == 1:
        g = SeparableFunction.sq_l2(rng.uniform(0.1, 1.0, n), n)
    else:
        g = SeparableFunction.box_indicator(-1.0, 1.0, n)
    b = rng.standard_normal(m)
    if rng.random() < 0.7:
        hstar = SeparableFunction.ls_conjugate(b)
    else:
        hstar = SeparableFunction.linear_conjugate(b)
    f = None
    if smooth:
        B = rng.standard_normal((n, n))
        f = QuadraticSmooth(0.1 * B @ B.T, rng.standard_normal(n))
    return ProblemSpec(A, g, hstar, f=f, b=b)


def exact_saddle(rng, m=7, n=5, density=0.5):
    """Lasso-type instance built around a known exact saddle point.

    Per-coordinate l1 weights and targets are chosen so that
    ``-A'y* in lam * d|x*|`` and ``y* = A x* - b`` hold exactly.
    """
    dense = rng.standard_normal((m, n)) * (rng.random((m, n)) < density)
    dense[np.arange(m), np.arange(m) % n] = 1.0
    dense[np.arange(n) % m, np.arange(n)] = 1.0
    A = SparseMatrix.from_dense(dense)
    y = rng.choice([-0.5, 0.25, 0.75, -1.0], size=m)
    c = -matTvec(A, y)
    support = rng.random(n) < 0.5
    x = np.where(support, np.sign(c) * rng.choice([0.5, 1.0, 2.0], size=n), 0.0)
    lam = np.where(support, np.abs(c), np.abs(c) + 1.0)
    x[np.abs(c) == 0] = 0.0
    lam[lam == 0] = 1.0
    b = matvec(A, x) - y
    spec = ProblemSpec(A, SeparableFunction.l1(lam, n), SeparableFunction.ls_conjugate(b), b=b)
    return spec, x, y


@pytest.fixture
def scalar_spec():
    """``A = [2]``, ``g = 0``, ``h(z) = (z - 2)^2 / 2``; saddle point ``(1, 0)``."""
    A = SparseMatrix.from_dense([[2.0]])
    return ProblemSpec(A, SeparableFunction.zero(1), SeparableFunction.ls_conjugate([2.0]), b=[2.0])


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
