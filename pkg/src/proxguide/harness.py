"""Experiment configuration, seeded trial orchestration, CSV persistence and summaries."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import RngStream, relative_distance, unit_sphere
from .errors import EmptySummary, InvalidConfig
from .outer import (
    PfpgsgParams,
    PgsgParams,
    TwoPhaseParams,
    pfpgsg,
    pfpgsg_outer_for_budget,
    pgsg,
    pgsg_outer_for_budget,
    sgd_baseline,
    two_phase_outer_for_budget,
    two_phase_pgsg,
)
from .problems import build_problem

log = logging.getLogger(__name__)

OUTPUT_ENV = "PROXGUIDE_OUTPUT_DIR"

EXP2_SOLVERS = ("pgsg:1000", "pgsg:10000", "2pgsg:1000", "2pgsg:10000", "pfpgsg")


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "results"))


@dataclass
class ExperimentConfig:
    experiment: str = "experiment2"
    problem: dict = field(default_factory=lambda: {"kind": "phase_retrieval", "d": 50})
    trials: int = 10
    budgets: list | None = None
    master_seed: int = 0
    # experiment 1
    gammas: list = field(default_factory=lambda: [2.0**-k for k in (14, 12, 10, 8, 6, 4, 2, 0)])
    betas: list = field(default_factory=lambda: [0.5, 1.0])
    pgsg_inner: int = 250
    tol: float = 0.05
    # experiment 2
    solvers: list = field(default_factory=lambda: list(EXP2_SOLVERS))
    gamma: float = 2.0**-6
    copies: int = 5
    cert_per_outer: int = 5
    pf_beta: float = 0.5
    pf_prefactor: float = 0.1
    pf_sampling: str = "inverse-gamma"
    # run-time only; excluded from the digest
    output: str | None = None
    workers: int = 1
    record_time: bool = False

    _RUNTIME = ("output", "workers", "record_time")

    def __post_init__(self):
        if self.experiment not in ("experiment1", "experiment2"):
            raise InvalidConfig(f"unknown experiment {self.experiment!r}")
        if int(self.trials) < 1:
            raise InvalidConfig("trials must be >= 1")
        if self.budgets is None:
            self.budgets = [25_000] if self.experiment == "experiment1" else [100_000, 500_000, 2_500_000]
        if not self.budgets or min(int(b) for b in self.budgets) < 1:
            raise InvalidConfig("budgets must be >= 1")
        if "d" not in self.problem:
            raise InvalidConfig("problem needs 'd'")
        for s in self.solvers:
            kind = s.split(":")[0]
            if kind not in ("pgsg", "2pgsg", "pfpgsg"):
                raise InvalidConfig(f"unknown solver {s!r}")
        self.budgets = [int(b) for b in self.budgets]
        self.trials = int(self.trials)

    @property
    def d(self) -> int:
        return int(self.problem["d"])

    def to_dict(self, runtime: bool = True) -> dict:
        out = dataclasses.asdict(self)
        if not runtime:
            for k in self._RUNTIME:
                out.pop(k)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(runtime=False), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Streams
# ---------------------------------------------------------------------------


def _label_id(label: str) -> int:
    return zlib.crc32(label.encode())


def start_point(cfg: ExperimentConfig, trial: int) -> np.ndarray:
    """Trial-specific start on the unit sphere, shared by every solver."""
    return unit_sphere(cfg.d, RngStream(cfg.master_seed).split(1).split(trial))


def run_stream(cfg: ExperimentConfig, label: str, budget: int, trial: int) -> RngStream:
    return RngStream(cfg.master_seed).split(2).split(_label_id(label)).split(budget).split(trial)


def problem_for(cfg: ExperimentConfig):
    problem = dict(cfg.problem)
    problem.setdefault("seed", cfg.master_seed)
    return build_problem(problem)


# ---------------------------------------------------------------------------
# Single trials (module-level so they can run in worker processes)
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _exp2_trial(cfg: ExperimentConfig, solver: str, budget: int, trial: int) -> dict:
    oracle = problem_for(cfg)
    x0 = start_point(cfg, trial)
    rng = run_stream(cfg, solver, budget, trial)
    kind, _, inner = solver.partition(":")
    if kind == "pgsg":
        j = int(inner)
        res = pgsg(x0, oracle, PgsgParams.experiment(cfg.gamma, j, pgsg_outer_for_budget(budget, j)),
                   rng, budget=budget)
        point, estimate, calls, T, R, wall = res.point, res.estimate, res.oracle_calls, res.T, res.R, res.wall_time
    elif kind == "2pgsg":
        j = int(inner)
        t0 = time.perf_counter()
        T = two_phase_outer_for_budget(budget, j, cfg.copies, cfg.cert_per_outer)
        params = TwoPhaseParams(PgsgParams.experiment(cfg.gamma, j, T), cfg.copies, cfg.cert_per_outer * T)
        point, cert, copies = two_phase_pgsg(x0, oracle, params, rng, budget=budget)
        estimate, calls = cert.estimate, sum(c.oracle_calls for c in copies)
        R = copies[int(np.argmin([np.linalg.norm(c.point - c.companion) for c in copies]))].R
        wall = time.perf_counter() - t0
    else:
        pf = PfpgsgParams(cfg.pf_beta, pfpgsg_outer_for_budget(budget), cfg.pf_prefactor, cfg.pf_sampling)
        res = pfpgsg(x0, oracle, pf, rng, budget=budget)
        point, estimate, calls, T, R, wall = res.point, res.estimate, res.oracle_calls, res.T, res.R, res.wall_time
    row = {
        "config_digest": cfg.digest(), "trial": trial, "seed": rng.stream_id, "solver": solver,
        "d": cfg.d, "budget": budget, "oracle_calls": int(calls), "T": int(T), "R": int(R),
        "estimate": float(estimate),
        "relative_distance": _rel(oracle, point),
    }
    if cfg.record_time:
        row["wall_time"] = wall
    return row


def _rel(oracle, point):
    return "" if oracle.minimizer is None else relative_distance(point, oracle.minimizer)


def _exp1_trial(cfg: ExperimentConfig, method: str, gamma: float, trial: int) -> dict:
    oracle = problem_for(cfg)
    x0 = start_point(cfg, trial)
    budget = cfg.budgets[0]
    rng = run_stream(cfg, f"{method}@{gamma!r}", budget, trial)
    if method == "pgsg":
        j = cfg.pgsg_inner
        res = pgsg(x0, oracle, PgsgParams.experiment(gamma, j, pgsg_outer_for_budget(budget, j)),
                   rng, budget=budget)
        rd = res.relative_distances
        hits = np.nonzero(rd <= cfg.tol)[0]
        evals = float(res.calls_at[hits[0]]) if hits.size else math.inf
        final, calls, wall = float(rd[-1]), res.oracle_calls, res.wall_time
    else:
        beta = float(method.split("beta")[1])
        res = sgd_baseline(x0, oracle, gamma, beta, budget, rng, tol=cfg.tol)
        evals = float(res.hit) if res.hit is not None else math.inf
        final, calls, wall = res.relative_distance, res.oracle_calls, res.wall_time
    row = {
        "config_digest": cfg.digest(), "trial": trial, "seed": rng.stream_id, "method": method,
        "gamma": float(gamma), "d": cfg.d, "budget": budget, "oracle_calls": int(calls),
        "relative_distance": final, "evals_to_tol": evals,
    }
    if cfg.record_time:
        row["wall_time"] = wall
    return row


def _call(task):
    fn, args = task
    return fn(*args)


def _run_tasks(tasks, workers: int):
    if workers <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, tasks))


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def experiment1_methods(cfg: ExperimentConfig) -> list:
    return [f"sgd_beta{b!r}" for b in cfg.betas] + ["pgsg"]


def run_experiment1(cfg: ExperimentConfig):
    """Stepsize sensitivity: SGD with ``gamma/(t+10)^beta`` versus PGSG over a gamma grid.

    Returns ``(records, summary)``; ``summary`` maps ``(method, gamma)`` to
    mean/std of the final relative distance and of evaluations to ``tol``.
    """
    if cfg.budgets[0] < 1:
        raise InvalidConfig("budget must be >= 1")
    tasks = [(_exp1_trial, (cfg, m, g, i))
             for g in cfg.gammas for m in experiment1_methods(cfg) for i in range(cfg.trials)]
    records = _run_tasks(tasks, cfg.workers)
    return records, summarize(records, value="relative_distance", keys=("method", "gamma", "d"))


def run_experiment2(cfg: ExperimentConfig):
    """Mean and variance of the stationarity estimates per solver and budget."""
    tasks = [(_exp2_trial, (cfg, s, b, i))
             for b in cfg.budgets for s in cfg.solvers for i in range(cfg.trials)]
    records = _run_tasks(tasks, cfg.workers)
    return records, summarize(records, value="estimate", keys=("solver", "budget", "d"))


def reached_set(records, tol=0.05, by="evals"):
    """Per method, the gammas at which the tolerance counts as reached.

    ``by="evals"``: every trial hit relative distance ``tol`` within its budget,
    i.e. the mean of ``evals_to_tol`` is finite. ``by="final"``: the mean final
    relative distance is ``<= tol``.
    """
    if by not in ("evals", "final"):
        raise InvalidConfig(f"unknown criterion {by!r}")
    value = "evals_to_tol" if by == "evals" else "relative_distance"
    summary = summarize(records, value=value, keys=("method", "gamma", "d"))
    out = {}
    for row in summary:
        out.setdefault(row["method"], set())
        if (math.isfinite(row["mean"]) if by == "evals" else row["mean"] <= tol):
            out[row["method"]].add(row["gamma"])
    return out


# ---------------------------------------------------------------------------
# Summaries and persistence
# ---------------------------------------------------------------------------


def _as_float(v):
    if isinstance(v, str):
        return math.inf if v == "inf" else float(v)
    return float(v)


def summarize(records, value: str = "estimate", keys=("solver", "budget", "d")) -> list:
    """Sample mean and unbiased sample variance of ``value`` per key tuple.

    Groups appear in order of first occurrence. Variance is 0 for a single
    record.
    """
    records = list(records)
    if not records:
        raise EmptySummary("no records to summarize")
    groups: dict = {}
    for r in records:
        groups.setdefault(tuple(r[k] for k in keys), []).append(_as_float(r[value]))
    out = []
    for key, vals in groups.items():
        v = np.array(vals)
        n = v.shape[0]
        finite = np.all(np.isfinite(v))
        mean = float(np.mean(v)) if finite else math.inf
        var = float(np.var(v, ddof=1)) if n > 1 and finite else (0.0 if finite else math.inf)
        row = dict(zip(keys, key))
        row.update({"n": n, "mean": mean, "var": var, "std": math.sqrt(var)})
        out.append(row)
    return out


def records_to_csv(records) -> str:
    if not records:
        return ""
    buf = io.StringIO()
    cols = list(records[0].keys())
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in records:
        if list(r.keys()) != cols:
            raise InvalidConfig("records do not share one column set")
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


_TEXT_COLUMNS = ("solver", "method", "config_digest")


def _coerce(rows, numeric_keys):
    numeric_keys = [k for k in numeric_keys if k not in _TEXT_COLUMNS]
    out = []
    for r in rows:
        r = dict(r)
        for k in numeric_keys:
            if k in r and r[k] != "":
                r[k] = int(r[k]) if k in ("budget", "d", "trial", "n") else _as_float(r[k])
        out.append(r)
    return out


def summarize_csv(path, value=None, keys=None) -> list:
    rows = read_csv(path)
    if not rows:
        raise EmptySummary(f"{path} has no rows")
    if value is None:
        value, keys = (("estimate", ("solver", "budget", "d")) if "solver" in rows[0]
                       else ("relative_distance", ("method", "gamma", "d")))
    return summarize(_coerce(rows, set(keys) | {value}), value, keys)


def format_table(summary, keys) -> str:
    """Aligned text table with one row per group."""
    cols = list(keys) + ["n", "mean", "var"]
    cells = [[str(c) for c in cols]]
    for row in summary:
        cells.append([f"{row[c]:.4g}" if isinstance(row[c], float) else str(row[c]) for c in cols])
    widths = [max(len(r[i]) for r in cells) for i in range(len(cols))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def write_outputs(cfg: ExperimentConfig, records, summary, keys) -> Path:
    out = Path(cfg.output) if cfg.output else default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.experiment
    (out / f"{stem}_trials.csv").write_text(records_to_csv(records))
    (out / f"{stem}_summary.csv").write_text(records_to_csv(summary))
    (out / f"{stem}_summary.txt").write_text(format_table(summary, keys))
    (out / f"{stem}_config.json").write_text(cfg.to_json() + "\n")
    log.info("wrote %s outputs to %s", stem, out)
    return out
