"""Primal-dual coordinate descent with random extrapolation for
``min_x f(x) + g(x) + h(Ax)`` on sparse data."""
from .baselines import run_baseline, tripd_bc_step, vu_condat_step
from .metrics import Reference, Trace, kkt_residual, objective, restricted_gap
from .problems import make_linconstrained, make_lasso, make_ridge, reference_solution
from .prox import SeparableFunction
from .sampling import SamplingLaw, make_rng
from .solver import (
    SolverState,
    StepSizes,
    averages,
    check_steps,
    heuristic_steps,
    naive_step,
    run,
    step,
)
from .sparse import SparseMatrix, parse_libsvm, preprocess
from .template import ProblemSpec, QuadraticSmooth

__version__ = "0.1.0"
