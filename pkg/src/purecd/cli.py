"""Benchmark harness.

Subcommands::

    purecd solve       --data FILE --problem lasso --lambda 0.1 --solver purecd ...
    purecd sweep       --config sweep.json --outdir traces/
    purecd check-steps --data FILE --gamma 0.99
    purecd gen         --n 1000 --m 500 --density 0.01 --seed 1 --out data.libsvm

Settings may also come from a JSON file given with ``--config``; its keys
are the long option names with dashes replaced by underscores, and explicit
flags override it.
"""
import argparse
import concurrent.futures
import hashlib
import json
import logging
import math
import os
import sys

import numpy as np

from . import baselines, problems, solver
from .prox import SeparableFunction
from .sampling import SamplingLaw
from .sparse import dump_libsvm, load_libsvm, preprocess

logger = logging.getLogger("purecd")

DEFAULTS = {
    "data": None,
    "problem": "lasso",
    "lambda_": 0.1,
    "solver": "purecd",
    "gamma": 0.95,
    "iters": None,
    "epochs": None,
    "checkpoint_every": None,
    "seed": 0,
    "out": None,
    "summary": None,
    "averaging": True,
    "reference": True,
    "ref_tol": 1e-10,
    "ref_iters": 10**6,
    "preprocess": True,
    "override": False,
    "target": None,
    "n": 1000,
    "m": 500,
    "density": 0.01,
    "solvers": None,
    "seeds": None,
    "outdir": "traces",
    "workers": None,
}

SOLVERS = ("purecd", "vu-condat", "tripd-bc")
PROBLEMS = ("lasso", "ridge", "linconstrained")


class UsageError(Exception):
    pass


def _count(text):
    """Integer budget that also accepts ``1e6``."""
    value = float(text)
    if value != int(value) or value < 0:
        raise argparse.ArgumentTypeError("expected a nonnegative integer, got %r" % text)
    return int(value)


def _add_problem_args(p):
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--data", help="LIBSVM file")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--lambda", dest="lambda_", type=float, help="regularization weight")
    p.add_argument("--no-preprocess", dest="preprocess", action="store_const", const=False,
                   help="skip empty row/column removal and row normalization")
    p.add_argument("--gamma", type=float, help="primal step factor of the heuristic policy")


def _add_run_args(p):
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--iters", type=_count, help="iteration budget")
    p.add_argument("--epochs", type=float, help="budget in passes over the nonzeros")
    p.add_argument("--checkpoint-every", type=_count, help="iterations between trace rows")
    p.add_argument("--no-averaging", dest="averaging", action="store_const", const=False)
    p.add_argument("--no-reference", dest="reference", action="store_const", const=False,
                   help="skip the reference solve; metric columns needing it become nan")
    p.add_argument("--ref-tol", type=float)
    p.add_argument("--ref-iters", type=_count)
    p.add_argument("--target", type=float, help="stop once suboptimality drops below this")
    p.add_argument("--override", action="store_const", const=True,
                   help="run even if the step sizes fail the admissibility check")


def build_parser():
    parser = argparse.ArgumentParser(prog="purecd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one configuration")
    _add_problem_args(p)
    _add_run_args(p)
    p.add_argument("--seed", type=_count)
    p.add_argument("--out", help="trace CSV path (default: stdout)")
    p.add_argument("--summary", help="JSON summary path")

    p = sub.add_parser("sweep", help="run solvers x seeds in a worker pool")
    _add_problem_args(p)
    _add_run_args(p)
    p.add_argument("--solvers", nargs="+", choices=SOLVERS)
    p.add_argument("--seeds", nargs="+", type=_count)
    p.add_argument("--outdir")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("check-steps", help="report the step-size admissibility slack")
    _add_problem_args(p)

    p = sub.add_parser("gen", help="write a random sparse least-squares instance")
    p.add_argument("--config")
    p.add_argument("--n", type=int, help="columns (features)")
    p.add_argument("--m", type=int, help="rows (samples)")
    p.add_argument("--density", type=float)
    p.add_argument("--seed", type=_count)
    p.add_argument("--out", help="LIBSVM path (default: stdout)")
    return parser


def resolve(args):
    """Merge built-in defaults, the ``--config`` file and explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if "lambda" in loaded:
            loaded["lambda_"] = loaded.pop("lambda")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in DEFAULTS and val is not None:
            cfg[key] = val
    return cfg


def load_problem(cfg):
    if not cfg["data"]:
        raise UsageError("--data is required")
    if not os.path.exists(cfg["data"]):
        raise UsageError("no such file: %s" % cfg["data"])
    A, labels = load_libsvm(cfg["data"])
    if cfg["preprocess"]:
        A, labels, _, _ = preprocess(A, labels)
    lam = cfg["lambda_"]
    if cfg["problem"] == "lasso":
        return problems.make_lasso(A, labels, lam)
    if cfg["problem"] == "ridge":
        return problems.make_ridge(A, labels, lam)
    return problems.make_linconstrained(A, labels, SeparableFunction.sq_l2(lam, A.n))


def run_config(cfg, spec=None, reference=None):
    """Execute one solve; returns ``(trace, summary)``."""
    spec = load_problem(cfg) if spec is None else spec
    if reference is None and cfg["reference"]:
        reference = problems.reference_solution(spec, tol=cfg["ref_tol"], max_iter=cfg["ref_iters"])
    law = SamplingLaw.uniform(spec.A)
    name = cfg["solver"]
    if name == "purecd":
        per_epoch = solver.iterations_for_epochs(law, spec.A, 1.0)
    else:
        per_epoch = 1
    if cfg["iters"] is not None:
        iters = cfg["iters"]
    elif cfg["epochs"] is not None:
        iters = max(1, math.ceil(cfg["epochs"] * per_epoch))
    else:
        iters = 100 * per_epoch
    every = cfg["checkpoint_every"] or per_epoch
    common = dict(
        checkpoint_every=every,
        seed=cfg["seed"],
        reference=reference,
        target=cfg["target"],
    )
    if name == "purecd":
        steps = solver.heuristic_steps(spec.A, law, cfg["gamma"])
        result = solver.run(
            spec, law, steps, iterations=iters, averaging=cfg["averaging"],
            override=cfg["override"], **common
        )
    else:
        result = baselines.run_baseline(spec, name, iters, law=law, **common)
    summary = {
        "config": {k: v for k, v in cfg.items() if k in RUN_KEYS},
        "problem": {"m": spec.m, "n": spec.n, "nnz": spec.A.nnz},
        "iterations": result.state.k,
        "stopped_early": result.stopped_early,
        "reference_kkt": None if reference is None else reference.kkt,
        "final": {k: float(v) for k, v in result.trace.last.items()},
    }
    return result.trace, summary


RUN_KEYS = (
    "data", "problem", "lambda_", "solver", "gamma", "iters", "epochs",
    "checkpoint_every", "seed", "averaging", "reference", "ref_tol", "ref_iters",
    "preprocess", "override", "target",
)


def config_hash(cfg):
    canon = json.dumps({k: cfg[k] for k in RUN_KEYS}, sort_keys=True)
    return hashlib.sha1(canon.encode()).hexdigest()[:12]


def _write_trace(trace, path):
    if path is None:
        trace.to_csv(sys.stdout)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            trace.to_csv(fh)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(type(obj))


def _finite_or_none(obj):
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_summary(summary, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_finite_or_none(summary), fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def cmd_solve(cfg):
    trace, summary = run_config(cfg)
    _write_trace(trace, cfg["out"])
    if cfg["summary"]:
        _write_summary(summary, cfg["summary"])
    return 0


def _sweep_job(cfg):
    trace, summary = run_config(cfg)
    return cfg, trace, summary


def cmd_sweep(cfg):
    solvers = cfg["solvers"] or [cfg["solver"]]
    seeds = cfg["seeds"] or [cfg["seed"]]
    jobs = [dict(cfg, solver=s, seed=seed) for s in solvers for seed in seeds]
    os.makedirs(cfg["outdir"], exist_ok=True)
    workers = cfg["workers"] or min(len(jobs), os.cpu_count() or 1)
    index = []
    if workers == 1:
        results = map(_sweep_job, jobs)
        pool = None
    else:
        pool = concurrent.futures.ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_sweep_job, jobs)
    try:
        for job, trace, summary in results:
            tag = config_hash(job)
            _write_trace(trace, os.path.join(cfg["outdir"], tag + ".csv"))
            _write_summary(summary, os.path.join(cfg["outdir"], tag + ".json"))
            index.append({"hash": tag, "solver": job["solver"], "seed": job["seed"]})
    finally:
        if pool is not None:
            pool.shutdown()
    _write_summary(index, os.path.join(cfg["outdir"], "index.json"))
    print("wrote %d traces to %s" % (len(index), cfg["outdir"]))
    return 0


def cmd_check_steps(cfg):
    spec = load_problem(cfg)
    law = SamplingLaw.uniform(spec.A)
    steps = solver.heuristic_steps(spec.A, law, cfg["gamma"])
    report = solver.check_steps(spec, law, steps)
    i = report.tightest
    print("ADMISSIBLE" if report.admissible else "NOT ADMISSIBLE")
    print("tightest coordinate: %d" % i)
    print("tau: %.12e  bound: %.12e  ratio: %.6f" % (steps.tau[i], report.bound[i], report.ratio[i]))
    return 0 if report.admissible else 1


def cmd_gen(cfg):
    rng = np.random.default_rng(cfg["seed"])
    A = problems.random_matrix(cfg["m"], cfg["n"], cfg["density"], rng, ensure_nonempty=False)
    x_true = rng.standard_normal(A.n) * (rng.random(A.n) < 0.1)
    labels = A.to_scipy() @ x_true + 0.1 * rng.standard_normal(A.m)
    if cfg["out"] is None:
        dump_libsvm(A, labels, sys.stdout)
    else:
        with open(cfg["out"], "w", encoding="utf-8", newline="\n") as fh:
            dump_libsvm(A, labels, fh)
        print("wrote %d x %d matrix, nnz=%d" % (A.m, A.n, A.nnz), file=sys.stderr)
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "check-steps": cmd_check_steps,
    "gen": cmd_gen,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, solver.StepSizeError, OSError, ValueError) as exc:
        print("purecd %s: error: %s" % (args.command, exc), file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
