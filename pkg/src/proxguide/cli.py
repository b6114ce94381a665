"""Command line interface.

Subcommands: run-pgsg, run-2pgsg, run-pfpgsg, run-sgd, verify, experiment1,
experiment2, summarize. Every run prints JSON to stdout; experiments write
CSV and text tables to ``--output`` (default ``$PROXGUIDE_OUTPUT_DIR`` or
``./results``). The exit code is nonzero when a property check fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import harness
from .core import Ball, RngStream, unit_sphere
from .errors import ProxGuideError
from .outer import (
    PfpgsgParams,
    PgsgParams,
    TwoPhaseParams,
    copies_for,
    derive_pgsg_params,
    derive_two_phase_params,
    pfpgsg,
    pfpgsg_outer_for_budget,
    pgsg,
    pgsg_outer_for_budget,
    sgd_baseline,
    two_phase_outer_for_budget,
    two_phase_pgsg,
)
from .problems import build_problem
from .verify import (
    estimate_lipschitz,
    lipschitz_check,
    oracle_three_point_check,
    second_moment_check,
)


def _load_config(path):
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _problem_args(p):
    p.add_argument("--config", help="JSON file; command-line flags override its keys")
    p.add_argument("--problem", dest="kind", default=None,
                   help="phase_retrieval | trimmed | censored_block | abs-value | convex-quadratic | concave-quadratic")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--seed", type=int, default=None, help="instance seed (xbar, data)")
    p.add_argument("--n", type=int, default=None, help="trimmed: number of components")
    p.add_argument("--h", type=int, default=None, help="trimmed: number of inliers")
    p.add_argument("--p", type=float, default=None, help="censored block: observation probability")
    p.add_argument("--eps-corr", type=float, default=None, help="censored block: flip probability")
    p.add_argument("--run-seed", type=int, default=None, help="seed of the solver's random stream")


def _merged(args, keys):
    cfg = _load_config(getattr(args, "config", None))
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


_PROBLEM_KEYS = ("kind", "d", "radius", "seed", "n", "h", "p", "eps_corr")


def _setup(args, extra):
    cfg = _merged(args, _PROBLEM_KEYS + tuple(extra) + ("run_seed",))
    cfg.setdefault("kind", "phase_retrieval")
    cfg.setdefault("d", 50)
    oracle = build_problem({k: cfg[k] for k in _PROBLEM_KEYS if k in cfg})
    seed = int(cfg.get("run_seed", 0))
    x0 = unit_sphere(oracle.dim, RngStream(seed).split(1))
    x0 = oracle.feasible_set.project(x0)
    return cfg, oracle, x0, RngStream(seed).split(2)


def _emit(obj):
    print(json.dumps(obj, sort_keys=True, default=float))


def _result_dict(res, oracle):
    out = {"estimate": res.estimate, "R": res.R, "T": res.T, "oracle_calls": res.oracle_calls,
           "gamma_R": res.gamma_R, "point": res.point.tolist()}
    if res.relative_distances is not None:
        out["relative_distance"] = float(res.relative_distances[res.R])
    return out


def _pgsg_params(cfg, oracle, two_phase=False):
    gamma = float(cfg.get("gamma", 2.0**-6))
    if "eps" in cfg:
        rho = cfg.get("rho", oracle.rho)
        L = float(cfg.get("L", oracle.lipschitz if oracle.lipschitz is not None else math.nan))
        if math.isnan(L):
            raise ProxGuideError("derive mode needs --L for this problem")
        Delta = float(cfg.get("Delta", oracle.objective(np.zeros(oracle.dim), oracle.sample(RngStream(1), 10_000))))
        if two_phase:
            return derive_two_phase_params(float(cfg["eps"]), float(cfg.get("Lambda", 0.1)), Delta, L, rho, gamma)
        return derive_pgsg_params(float(cfg["eps"]), cfg.get("Lambda"), Delta, L, rho, gamma)
    j = int(cfg.get("inner", 1000))
    budget = cfg.get("budget")
    if cfg.get("assume_rho_from_gamma", True) and "rho" not in cfg:
        T = int(cfg.get("T", pgsg_outer_for_budget(int(budget), j) if budget else 10))
        base = PgsgParams.experiment(gamma, j, T)
    else:
        rho = float(cfg.get("rho", oracle.rho))
        T = int(cfg.get("T", pgsg_outer_for_budget(int(budget), j) if budget else 10))
        base = PgsgParams(gamma, rho, T, j)
    if two_phase:
        S = int(cfg.get("S", copies_for(float(cfg["Lambda"])) if "Lambda" in cfg else 5))
        J = int(cfg.get("J", 5 * base.T))
        if budget and "T" not in cfg:
            T = two_phase_outer_for_budget(int(budget), j, S, 5)
            base = PgsgParams(base.gamma, base.rho, T, j)
            J = int(cfg.get("J", 5 * T))
        return TwoPhaseParams(base, S, J)
    return base


def cmd_run_pgsg(args):
    cfg, oracle, x0, rng = _setup(args, ("gamma", "rho", "inner", "T", "budget", "eps", "L", "Delta"))
    params = _pgsg_params(cfg, oracle)
    res = pgsg(x0, oracle, params, rng, budget=cfg.get("budget"))
    _emit(_result_dict(res, oracle))
    return 0


def cmd_run_2pgsg(args):
    cfg, oracle, x0, rng = _setup(args, ("gamma", "rho", "inner", "T", "budget", "S", "J",
                                         "eps", "Lambda", "L", "Delta"))
    params = _pgsg_params(cfg, oracle, two_phase=True)
    x, cert, copies = two_phase_pgsg(x0, oracle, params, rng, budget=cfg.get("budget"))
    _emit({"estimate": cert.estimate, "certified_bound": cert.bound, "S": params.S, "J": params.J,
           "T": params.pgsg.T, "oracle_calls": sum(c.oracle_calls for c in copies),
           "copy_estimates": [float(np.linalg.norm(c.point - c.companion) / params.pgsg.gamma) for c in copies],
           "point": x.tolist()})
    return 0


def cmd_run_pfpgsg(args):
    cfg, oracle, x0, rng = _setup(args, ("beta", "prefactor", "T", "budget", "sampling"))
    budget = cfg.get("budget")
    T = int(cfg.get("T", pfpgsg_outer_for_budget(int(budget)) if budget else 100))
    pf = PfpgsgParams(float(cfg.get("beta", 0.5)), T, float(cfg.get("prefactor", 1.0)),
                      cfg.get("sampling", "inverse-gamma"), oracle.rho)
    res = pfpgsg(x0, oracle, pf, rng, budget=budget)
    _emit(_result_dict(res, oracle))
    return 0


def cmd_run_sgd(args):
    cfg, oracle, x0, rng = _setup(args, ("gamma", "beta", "budget", "tol"))
    res = sgd_baseline(x0, oracle, float(cfg.get("gamma", 1.0)), float(cfg.get("beta", 1.0)),
                       int(cfg.get("budget", 25_000)), rng, tol=float(cfg.get("tol", 0.05)))
    _emit({"relative_distance": res.relative_distance, "evals_to_tol": res.hit,
           "oracle_calls": res.oracle_calls, "point": res.point.tolist()})
    return 0


def cmd_verify(args):
    cfg, oracle, _, rng = _setup(args, ("trials", "domain_radius", "samples"))
    trials = int(cfg.get("trials", 1000))
    samples = int(cfg.get("samples", 2000))
    radius = float(cfg.get("domain_radius", 10.0))
    domain = (oracle.feasible_set if cfg.get("kind") in ("trimmed",)
              else Ball.origin(oracle.dim, min(radius, getattr(oracle.feasible_set, "radius", radius))))
    reports = []
    if oracle.rho is not None or cfg.get("kind") == "phase_retrieval":
        reports.append(oracle_three_point_check(oracle, trials, domain, rng.split(0)))
    L = oracle.lipschitz
    if L is None:
        L = 1.05 * estimate_lipschitz(oracle, max(10, trials // 10), rng.split(1), samples, domain)
    reports.append(lipschitz_check(oracle, L, max(1, trials // 10), samples, rng.split(2), domain))
    reports.append(second_moment_check(oracle, L, max(1, trials // 10), rng.split(3), samples, domain))
    ok = True
    for r in reports:
        print(r.to_json())
        ok &= r.passed
    return 0 if ok else 1


def _experiment(args, name):
    cfg = _load_config(args.config)
    cfg["experiment"] = name
    for key in ("trials", "master_seed", "output", "workers", "gamma", "copies"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if args.budgets:
        cfg["budgets"] = args.budgets
    if args.d is not None:
        cfg.setdefault("problem", {"kind": "phase_retrieval"})
        cfg["problem"] = dict(cfg["problem"], d=args.d)
    if getattr(args, "gammas", None):
        cfg["gammas"] = args.gammas
    if getattr(args, "solvers", None):
        cfg["solvers"] = args.solvers
    if args.record_time:
        cfg["record_time"] = True
    return harness.ExperimentConfig.from_dict(cfg)


def cmd_experiment1(args):
    cfg = _experiment(args, "experiment1")
    records, summary = harness.run_experiment1(cfg)
    keys = ("method", "gamma", "d")
    out = harness.write_outputs(cfg, records, summary, keys)
    sys.stdout.write(harness.format_table(summary, keys))
    logging.getLogger(__name__).info("results in %s", out)
    return 0


def cmd_experiment2(args):
    cfg = _experiment(args, "experiment2")
    records, summary = harness.run_experiment2(cfg)
    keys = ("solver", "budget", "d")
    harness.write_outputs(cfg, records, summary, keys)
    sys.stdout.write(harness.format_table(summary, keys))
    return 0


def cmd_summarize(args):
    summary = harness.summarize_csv(args.csv)
    keys = [k for k in summary[0] if k not in ("n", "mean", "var", "std")]
    sys.stdout.write(harness.format_table(summary, keys))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="proxguide", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-pgsg", help="run PGSG once")
    _problem_args(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--rho", type=float, help="declared modulus (default: assume 1/(2 gamma))")
    p.add_argument("--inner", type=int, help="inner iterations j_t")
    p.add_argument("--T", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--eps", type=float, help="derive j_t and T for this accuracy")
    p.add_argument("--L", type=float)
    p.add_argument("--Delta", type=float)
    p.set_defaults(func=cmd_run_pgsg)

    p = sub.add_parser("run-2pgsg", help="run the two-phase method once")
    _problem_args(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--inner", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--S", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--Lambda", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--Delta", type=float)
    p.set_defaults(func=cmd_run_2pgsg)

    p = sub.add_parser("run-pfpgsg", help="run the parameter-free method once")
    _problem_args(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--prefactor", type=float)
    p.add_argument("--T", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--sampling", choices=("inverse-gamma", "gamma"))
    p.set_defaults(func=cmd_run_pfpgsg)

    p = sub.add_parser("run-sgd", help="run the stochastic subgradient baseline once")
    _problem_args(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--budget", type=int)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_run_sgd)

    p = sub.add_parser("verify", help="run the property suite on a problem")
    _problem_args(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--domain-radius", type=float)
    p.set_defaults(func=cmd_verify)

    for name, func in (("experiment1", cmd_experiment1), ("experiment2", cmd_experiment2)):
        p = sub.add_parser(name, help=f"run {name}")
        p.add_argument("--config")
        p.add_argument("--d", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--budgets", type=int, nargs="+")
        p.add_argument("--master-seed", type=int)
        p.add_argument("--output")
        p.add_argument("--workers", type=int)
        p.add_argument("--record-time", action="store_true")
        if name == "experiment1":
            p.add_argument("--gammas", type=float, nargs="+")
        else:
            p.add_argument("--gamma", type=float)
            p.add_argument("--copies", type=int)
            p.add_argument("--solvers", nargs="+")
        p.set_defaults(func=func)

    p = sub.add_parser("summarize", help="summarize a trials CSV")
    p.add_argument("csv")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ProxGuideError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
