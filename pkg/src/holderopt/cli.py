"""Experiment runner: config parsing, solver dispatch, trace files, summaries.

Configs are JSON documents; unknown keys are rejected and every validation
problem is reported with its field name. A run writes one trace CSV plus one
summary JSON; a sweep expands list-valued fields into member runs and adds an
index JSON. Everything is deterministic given (config, seed): the wall-clock
column in trace files is a fixed placeholder (real timing lives in the
summary), so identical runs produce byte-identical CSVs.

Trace CSV columns, in order:
    iter, psi_y, psi_best, gap, beta, r_bar, A, tau, ls_stage1, ls_stage2,
    f_evals, grad_evals, stoch_grad_evals, prox_evals, wall_ms
Floats are written with full round-trip precision; gap is empty when no
target value is known.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import agda, baselines, lf_agda, problems
from .core import OracleCounters, SeededRng, TraceRecord
from .initialization import init_beta0, init_rbar

__all__ = [
    "ConfigError",
    "ExperimentError",
    "RunConfig",
    "RunSummary",
    "parse_config",
    "config_to_dict",
    "build_problem",
    "resolve_x0",
    "run_experiment",
    "run_sweep",
    "estimate_slope",
    "trace_gaps",
    "write_trace",
    "read_trace",
    "main",
]

TRACE_COLUMNS = [
    "iter",
    "psi_y",
    "psi_best",
    "gap",
    "beta",
    "r_bar",
    "A",
    "tau",
    "ls_stage1",
    "ls_stage2",
    "f_evals",
    "grad_evals",
    "stoch_grad_evals",
    "prox_evals",
    "wall_ms",
]

ALGORITHMS = ("agda", "lf_agda", "dog", "agd_fixed")
PROBLEM_KINDS = ("softmax", "matrix_game", "least_squares_ball", "lp_regression")
TOL_LADDER = (1.0, 0.8, 0.6, 0.4, 0.2)
SWEEPABLE_FIELDS = ("r_bar", "beta0", "seed", "max_iters")
THREADS_ENV = "HOLDER_OPT_THREADS"


class ConfigError(ValueError):
    """Validation failure; ``errors`` lists one message per offending field."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class ExperimentError(RuntimeError):
    def __init__(self, message: str, iteration: int | None, partial_trace: str | None):
        super().__init__(message)
        self.iteration = iteration
        self.partial_trace = partial_trace


@dataclass(frozen=True)
class RunConfig:
    problem: dict
    algorithm: str
    r_bar: float = 1e-3
    beta0: float | str = 1e-3       # positive number or "auto"
    r_bar_mode: str = "fixed"       # "fixed" or "auto"
    r_guess: float | None = None    # required when r_bar_mode == "auto"
    max_iters: int = 1000
    seed: int = 0
    tol: float | None = None
    target_value: float | None = None
    output_dir: str = "runs"
    name: str | None = None
    extras: dict = field(default_factory=dict)


@dataclass
class RunSummary:
    name: str
    algorithm: str
    final_psi_best: float
    iters_to_tol: dict[str, int | None]
    slope: float | None
    slope_mode: str | None
    total_ls_evals: int
    total_grad_evals: int
    total_stoch_grad_evals: int
    wall_ms: float
    r_bar: float
    beta0: float
    seed: int
    target_value: float | None
    diverged: bool = False        # final iterate worse than the starting point
    kstar_dist_ratio: int | None = None
    psi_kstar_dist_ratio: float | None = None
    kstar_sqrt: int | None = None
    psi_kstar_sqrt: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# ---------------------------------------------------------------------------
# Config parsing and validation
# ---------------------------------------------------------------------------

_PROBLEM_FIELDS: dict[str, dict[str, Any]] = {
    "softmax": {"n": 1000, "d": 2000, "mu": 0.005, "seed": 0, "x0_scale": 5.0},
    "matrix_game": {"n": 896, "m": 128, "seed": 0},
    "least_squares_ball": {"n": 50, "d": 20, "radius": 10.0, "seed": 0, "dataset": None},
    "lp_regression": {"n": 50, "d": 20, "p": 1.5, "seed": 0, "dataset": None, "radius": None},
}

_EXTRAS_KEYS = {"L", "sigma", "batch", "r_eps"}


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _validate_problem(desc, errors: list[str]) -> dict:
    if not isinstance(desc, dict):
        errors.append("problem: must be an object")
        return {}
    kind = desc.get("kind")
    if kind not in PROBLEM_KINDS:
        errors.append(f"problem.kind: must be one of {PROBLEM_KINDS}, got {kind!r}")
        return {}
    allowed = _PROBLEM_FIELDS[kind]
    out = {"kind": kind}
    for key, value in desc.items():
        if key == "kind":
            continue
        if key not in allowed:
            errors.append(f"problem.{key}: unknown key for kind {kind!r}")
    for key, default in allowed.items():
        value = desc.get(key, default)
        out[key] = value
    for key in ("n", "d", "m"):
        if key in out and not (isinstance(out[key], int) and out[key] >= 1):
            errors.append(f"problem.{key}: must be an integer >= 1, got {out[key]!r}")
    if "mu" in out and not (_is_number(out["mu"]) and out["mu"] > 0):
        errors.append(f"problem.mu: must be positive, got {out['mu']!r}")
    if "p" in out and not (_is_number(out["p"]) and 1.0 <= out["p"] <= 2.0):
        errors.append(f"problem.p: must lie in [1, 2], got {out['p']!r}")
    if kind == "least_squares_ball" and not (_is_number(out["radius"]) and out["radius"] > 0):
        errors.append(f"problem.radius: must be positive, got {out['radius']!r}")
    if kind == "lp_regression" and out.get("radius") is not None:
        if not (_is_number(out["radius"]) and out["radius"] > 0):
            errors.append(f"problem.radius: must be positive, got {out['radius']!r}")
    if "x0_scale" in out and not (_is_number(out["x0_scale"]) and out["x0_scale"] > 0):
        errors.append(f"problem.x0_scale: must be positive, got {out['x0_scale']!r}")
    if "seed" in out and not isinstance(out["seed"], int):
        errors.append(f"problem.seed: must be an integer, got {out['seed']!r}")
    if out.get("dataset") is not None and not isinstance(out["dataset"], str):
        errors.append(f"problem.dataset: must be a path string, got {out['dataset']!r}")
    return out


_TOP_LEVEL_KEYS = {
    "problem",
    "algorithm",
    "r_bar",
    "beta0",
    "r_bar_mode",
    "r_guess",
    "max_iters",
    "seed",
    "tol",
    "target_value",
    "output_dir",
    "name",
    "extras",
}


def _validate_dict(data: dict) -> RunConfig:
    errors: list[str] = []
    for key in data:
        if key not in _TOP_LEVEL_KEYS:
            errors.append(f"{key}: unknown key")

    problem = _validate_problem(data.get("problem"), errors)

    algorithm = data.get("algorithm")
    if algorithm not in ALGORITHMS:
        errors.append(f"algorithm: must be one of {ALGORITHMS}, got {algorithm!r}")

    r_bar = data.get("r_bar", 1e-3)
    if not (_is_number(r_bar) and r_bar > 0):
        errors.append(f"r_bar: must be positive, got {r_bar!r}")

    beta0 = data.get("beta0", 1e-3)
    if beta0 != "auto" and not (_is_number(beta0) and beta0 > 0):
        errors.append(f'beta0: must be positive or "auto", got {beta0!r}')

    r_bar_mode = data.get("r_bar_mode", "fixed")
    if r_bar_mode not in ("fixed", "auto"):
        errors.append(f'r_bar_mode: must be "fixed" or "auto", got {r_bar_mode!r}')
    r_guess = data.get("r_guess")
    if r_bar_mode == "auto":
        if not (_is_number(r_guess) and r_guess > 0):
            errors.append(f"r_guess: must be positive when r_bar_mode is auto, got {r_guess!r}")
    elif r_guess is not None:
        errors.append("r_guess: only valid when r_bar_mode is auto")

    max_iters = data.get("max_iters", 1000)
    if not (isinstance(max_iters, int) and max_iters >= 0):
        errors.append(f"max_iters: must be a nonnegative integer, got {max_iters!r}")
    elif algorithm == "lf_agda" and max_iters < 1:
        errors.append("max_iters: must be >= 1 for the lf_agda algorithm")

    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        errors.append(f"seed: must be an integer, got {seed!r}")

    tol = data.get("tol")
    if tol is not None and not (_is_number(tol) and tol > 0):
        errors.append(f"tol: must be positive when given, got {tol!r}")

    target_value = data.get("target_value")
    if target_value is not None and not _is_number(target_value):
        errors.append(f"target_value: must be a number when given, got {target_value!r}")

    output_dir = data.get("output_dir", "runs")
    if not isinstance(output_dir, str):
        errors.append(f"output_dir: must be a path string, got {output_dir!r}")

    name = data.get("name")
    if name is not None and not isinstance(name, str):
        errors.append(f"name: must be a string, got {name!r}")

    extras = data.get("extras", {})
    if not isinstance(extras, dict):
        errors.append(f"extras: must be an object, got {extras!r}")
        extras = {}
    for key in extras:
        if key not in _EXTRAS_KEYS:
            errors.append(f"extras.{key}: unknown key")
    if "L" in extras and not (_is_number(extras["L"]) and extras["L"] > 0):
        errors.append(f"extras.L: must be positive, got {extras['L']!r}")
    if "sigma" in extras and not (_is_number(extras["sigma"]) and extras["sigma"] >= 0):
        errors.append(f"extras.sigma: must be nonnegative, got {extras['sigma']!r}")
    if "batch" in extras and not (isinstance(extras["batch"], int) and extras["batch"] >= 1):
        errors.append(f"extras.batch: must be an integer >= 1, got {extras['batch']!r}")
    if "r_eps" in extras and not (_is_number(extras["r_eps"]) and extras["r_eps"] > 0):
        errors.append(f"extras.r_eps: must be positive, got {extras['r_eps']!r}")
    if algorithm == "agd_fixed" and "L" not in extras:
        errors.append("extras.L: required for the agd_fixed algorithm")
    if "sigma" in extras and "batch" in extras:
        errors.append("extras: sigma and batch are mutually exclusive")

    if errors:
        raise ConfigError(errors)

    return RunConfig(
        problem=problem,
        algorithm=algorithm,
        r_bar=float(r_bar),
        beta0=beta0 if beta0 == "auto" else float(beta0),
        r_bar_mode=r_bar_mode,
        r_guess=None if r_guess is None else float(r_guess),
        max_iters=max_iters,
        seed=seed,
        tol=None if tol is None else float(tol),
        target_value=None if target_value is None else float(target_value),
        output_dir=output_dir,
        name=name,
        extras=dict(extras),
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config; raises ConfigError listing all problems."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"document: invalid JSON ({exc})"]) from None
    if not isinstance(data, dict):
        raise ConfigError(["document: top level must be an object"])
    return _validate_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    """Normalized plain-dict form (all defaults materialized); JSON round-trips."""
    return {
        "problem": dict(cfg.problem),
        "algorithm": cfg.algorithm,
        "r_bar": cfg.r_bar,
        "beta0": cfg.beta0,
        "r_bar_mode": cfg.r_bar_mode,
        "r_guess": cfg.r_guess,
        "max_iters": cfg.max_iters,
        "seed": cfg.seed,
        "tol": cfg.tol,
        "target_value": cfg.target_value,
        "output_dir": cfg.output_dir,
        "name": cfg.name,
        "extras": dict(cfg.extras),
    }


# ---------------------------------------------------------------------------
# Problem construction
# ---------------------------------------------------------------------------

def _noise_mode(extras: dict):
    if "sigma" in extras:
        return problems.GaussianNoise(float(extras["sigma"]))
    if "batch" in extras:
        return problems.RowSampling(int(extras["batch"]))
    return None


def build_problem(cfg: RunConfig) -> problems.CompositeProblem:
    desc = cfg.problem
    kind = desc["kind"]
    if kind == "softmax":
        return problems.make_softmax(desc["n"], desc["d"], desc["mu"], desc["seed"])
    if kind == "matrix_game":
        return problems.make_matrix_game(desc["n"], desc["m"], desc["seed"])
    if kind == "least_squares_ball":
        A, b = _design_matrix(desc)
        return problems.make_least_squares_ball(A, b, desc["radius"], _noise_mode(cfg.extras))
    if kind == "lp_regression":
        A, b = _design_matrix(desc)
        return problems.make_lp_regression(A, b, desc["p"], desc.get("radius"))
    raise ValueError(f"unknown problem kind {kind!r}")


def _design_matrix(desc: dict) -> tuple[np.ndarray, np.ndarray]:
    if desc.get("dataset"):
        return problems.load_libsvm(desc["dataset"])
    gen = SeededRng(desc["seed"], stream_id=1).generator()
    A = gen.uniform(-1.0, 1.0, size=(desc["n"], desc["d"]))
    b = gen.uniform(-1.0, 1.0, size=desc["n"])
    return A, b


def resolve_x0(cfg: RunConfig, problem: problems.CompositeProblem) -> np.ndarray:
    """Deterministic starting point per problem family.

    Softmax starts on a sphere around the minimizer (seeded by the instance,
    not the run, so parameter sweeps share the start); the matrix game starts
    at the simplex centers; constrained regressions start at the origin.
    """
    kind = cfg.problem["kind"]
    if kind == "softmax":
        gen = SeededRng(cfg.problem["seed"], stream_id=2).generator()
        u = gen.standard_normal(problem.dim)
        u /= np.linalg.norm(u)
        return cfg.problem["x0_scale"] * u
    if kind == "matrix_game":
        n, m = cfg.problem["n"], cfg.problem["m"]
        return np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)])
    return np.zeros(problem.dim)


# ---------------------------------------------------------------------------
# Trace CSV I/O
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return repr(float(value))


def write_trace(path, records: Sequence[TraceRecord], target_value: float | None) -> None:
    """Write the fixed-schema trace CSV (UTF-8, LF, full-precision floats).

    The wall_ms column is written as a constant 0.0 so identical (config,
    seed) runs are byte-identical; measured timing is reported in the summary.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for r in records:
            gap = "" if target_value is None else _fmt(r.psi_best - target_value)
            row = [
                str(r.iter),
                _fmt(r.psi_y),
                _fmt(r.psi_best),
                gap,
                _fmt(r.beta),
                _fmt(r.r_bar),
                _fmt(r.A),
                _fmt(r.tau),
                str(r.ls_stage1),
                str(r.ls_stage2),
                str(r.counters.f_evals),
                str(r.counters.grad_evals),
                str(r.counters.stoch_grad_evals),
                str(r.counters.prox_evals),
                _fmt(0.0),
            ]
            fh.write(",".join(row) + "\n")


def read_trace(path) -> tuple[list[TraceRecord], list[float | None]]:
    """Parse a trace CSV back into records plus the gap column (None where empty)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header in {path!s}: {header}")
        records: list[TraceRecord] = []
        gaps: list[float | None] = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(TRACE_COLUMNS):
                raise ValueError(f"malformed row in {path!s}: {line!r}")
            counters = OracleCounters(
                f_evals=int(parts[10]),
                grad_evals=int(parts[11]),
                stoch_grad_evals=int(parts[12]),
                prox_evals=int(parts[13]),
            )
            records.append(
                TraceRecord(
                    iter=int(parts[0]),
                    psi_y=float(parts[1]),
                    psi_best=float(parts[2]),
                    beta=float(parts[4]),
                    r_bar=float(parts[5]),
                    A=float(parts[6]),
                    tau=float(parts[7]),
                    ls_stage1=int(parts[8]),
                    ls_stage2=int(parts[9]),
                    counters=counters,
                    wall_ms=float(parts[14]),
                )
            )
            gaps.append(float(parts[3]) if parts[3] else None)
    return records, gaps


# ---------------------------------------------------------------------------
# Slope estimation
# ---------------------------------------------------------------------------

def trace_gaps(
    records: Sequence[TraceRecord], target_value: float | None
) -> tuple[list[tuple[float, float]], str]:
    """(iteration, gap) pairs for slope fitting, plus the gap mode used.

    With a known target the gap is psi_best - target ("exact" mode); without
    one it falls back to psi_best minus the final psi_best ("approximate").
    """
    if target_value is not None:
        return [(r.iter, r.psi_best - target_value) for r in records], "exact"
    final = records[-1].psi_best
    return [(r.iter, r.psi_best - final) for r in records], "approximate"


def estimate_slope(trace: Sequence[tuple[float, float]], window_fraction: float = 0.5) -> float:
    """Least-squares slope of log(gap) vs log(iteration) on the trailing window.

    Points with nonpositive gap or iteration are excluded; fewer than 10
    usable points raises ValueError.
    """
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError(f"window_fraction must be in (0, 1], got {window_fraction}")
    n = len(trace)
    start = n - max(1, int(round(n * window_fraction)))
    window = [(it, gap) for it, gap in trace[start:] if it > 0 and gap > 0.0]
    if len(window) < 10:
        raise ValueError(
            f"insufficient points for a slope fit: {len(window)} positive-gap records"
        )
    xs = np.log([it for it, _ in window])
    ys = np.log([gap for _, gap in window])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# Experiment execution
# ---------------------------------------------------------------------------

def _default_name(cfg: RunConfig) -> str:
    return cfg.name or f"{cfg.algorithm}_{cfg.problem['kind']}_seed{cfg.seed}"


def _resolve_hyperparameters(
    cfg: RunConfig, problem: problems.CompositeProblem, x0: np.ndarray
) -> tuple[float, float]:
    """Materialize (r_bar, beta0), running the auto-initializers when asked.

    The distance estimate comes first: its probe iterations only accept a
    halved guess when the solver travels at least that far, which requires a
    regularization level no larger than the gradient scale, so a conservative
    bootstrap value is used there. The curvature probe then runs at the
    resolved radius.
    """
    if cfg.r_bar_mode == "auto":
        bootstrap = float(cfg.beta0) if cfg.beta0 != "auto" else _bootstrap_beta0(problem, x0)
        r_bar, _ = init_rbar(problem, x0, cfg.r_guess, bootstrap)
    else:
        r_bar = cfg.r_bar
    if cfg.beta0 == "auto":
        beta0, _ = init_beta0(problem, x0, r_bar, rng=SeededRng(cfg.seed, stream_id=3))
    else:
        beta0 = float(cfg.beta0)
    return r_bar, beta0


def _bootstrap_beta0(problem, x0: np.ndarray) -> float:
    grad_norm = float(np.linalg.norm(problem.f_grad(x0)))
    if grad_norm == 0.0:
        return 1e-3
    return min(1e-3, 0.5 * grad_norm)


@dataclass
class ExperimentResult:
    name: str
    trace_path: str
    summary_path: str
    summary: RunSummary
    records: list[TraceRecord]


def run_experiment(cfg: RunConfig, out_dir: str | None = None) -> ExperimentResult:
    """Execute one configured run; writes trace CSV + summary JSON.

    Solver failures are re-raised as :class:`ExperimentError` with the failing
    iteration; whatever trace prefix exists is still written to disk.
    """
    name = _default_name(cfg)
    directory = Path(out_dir or cfg.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    trace_path = directory / f"{name}.trace.csv"
    summary_path = directory / f"{name}.summary.json"

    problem = build_problem(cfg)
    x0 = resolve_x0(cfg, problem)
    target = cfg.target_value if cfg.target_value is not None else problem.known_min_value
    r_bar, beta0 = _resolve_hyperparameters(cfg, problem, x0)

    seen: list[TraceRecord] = []

    def collect(_state, record: TraceRecord) -> None:
        seen.append(record)

    kstar = psi_kstar = kstar_sqrt = psi_kstar_sqrt = None
    try:
        if cfg.algorithm == "agda":
            records = agda.run_agda(
                problem, x0, r_bar=r_bar, beta0=beta0, max_iters=cfg.max_iters,
                target_value=target, tol=cfg.tol, monitor=collect,
            )
        elif cfg.algorithm == "lf_agda":
            result = lf_agda.run_lf_agda(
                problem, x0, r_bar=r_bar, seed=cfg.seed, max_iters=cfg.max_iters,
                target_value=target, tol=cfg.tol, monitor=collect,
            )
            records = result.records
            kstar, psi_kstar = result.kstar, result.psi_kstar
            kstar_sqrt, psi_kstar_sqrt = result.kstar_sqrt, result.psi_kstar_sqrt
        elif cfg.algorithm == "dog":
            records = baselines.run_dog(
                problem, x0, r_eps=cfg.extras.get("r_eps", r_bar), max_iters=cfg.max_iters,
                target_value=target, tol=cfg.tol, monitor=collect,
            )
        elif cfg.algorithm == "agd_fixed":
            records = baselines.run_agd_fixed(
                problem, x0, L=cfg.extras["L"], max_iters=cfg.max_iters,
                target_value=target, tol=cfg.tol, monitor=collect,
            )
        else:
            raise ValueError(f"unknown algorithm {cfg.algorithm!r}")
    except Exception as exc:
        write_trace(trace_path, seen, target)
        iteration = seen[-1].iter if seen else None
        raise ExperimentError(str(exc), iteration, str(trace_path)) from exc

    write_trace(trace_path, records, target)

    pairs, slope_mode = trace_gaps(records, target)
    try:
        slope = estimate_slope(pairs, window_fraction=0.5)
    except ValueError:
        slope, slope_mode = None, None

    iters_to_tol: dict[str, int | None] = {}
    if target is not None:
        for eps in TOL_LADDER:
            hit = next((r.iter for r in records if r.psi_best - target <= eps), None)
            iters_to_tol[repr(eps)] = hit

    last = records[-1]
    summary = RunSummary(
        name=name,
        algorithm=cfg.algorithm,
        final_psi_best=last.psi_best,
        iters_to_tol=iters_to_tol,
        slope=slope,
        slope_mode=slope_mode,
        total_ls_evals=sum(r.ls_stage1 + r.ls_stage2 for r in records),
        total_grad_evals=last.counters.grad_evals,
        total_stoch_grad_evals=last.counters.stoch_grad_evals,
        wall_ms=last.wall_ms,
        r_bar=r_bar,
        beta0=beta0,
        seed=cfg.seed,
        target_value=target,
        diverged=last.psi_y > records[0].psi_y,
        kstar_dist_ratio=kstar,
        psi_kstar_dist_ratio=psi_kstar,
        kstar_sqrt=kstar_sqrt,
        psi_kstar_sqrt=psi_kstar_sqrt,
    )
    summary_path.write_text(
        json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return ExperimentResult(name, str(trace_path), str(summary_path), summary, records)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def expand_sweep(data: dict) -> list[RunConfig]:
    """Expand list-valued sweepable fields into the cartesian product of runs."""
    lists = {k: data[k] for k in SWEEPABLE_FIELDS if isinstance(data.get(k), list)}
    if not lists:
        return [_validate_dict(data)]
    combos: list[dict] = [dict(data)]
    for key, values in lists.items():
        if not values:
            raise ConfigError([f"{key}: sweep list must be nonempty"])
        combos = [dict(c, **{key: v}) for c in combos for v in values]
    configs = []
    for idx, combo in enumerate(combos):
        cfg = _validate_dict(combo)
        base = cfg.name or _default_name(cfg)
        configs.append(
            RunConfig(**{**cfg.__dict__, "name": f"{base}_{idx:03d}"})
        )
    return configs


def _max_workers() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def run_sweep(data: dict, out_dir: str | None = None) -> tuple[list[ExperimentResult], str]:
    """Run every member of a sweep (parallel up to HOLDER_OPT_THREADS) + index JSON."""
    configs = expand_sweep(data)
    directory = Path(out_dir or configs[0].output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    workers = min(_max_workers(), len(configs))
    if workers == 1:
        results = [run_experiment(cfg, out_dir) for cfg in configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: run_experiment(c, out_dir), configs))

    index = {
        "runs": [
            {
                "name": res.name,
                "trace": res.trace_path,
                "summary": res.summary_path,
                "r_bar": res.summary.r_bar,
                "beta0": res.summary.beta0,
                "seed": res.summary.seed,
                "final_psi_best": res.summary.final_psi_best,
                "iters_to_tol": res.summary.iters_to_tol,
            }
            for res in results
        ]
    }
    base = configs[0].name.rsplit("_", 1)[0] if configs[0].name else "sweep"
    index_path = directory / f"{base}.index.json"
    index_path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return results, str(index_path)


# ---------------------------------------------------------------------------
# Command line interface
# ---------------------------------------------------------------------------

def _load_config_file(path: str, overrides: argparse.Namespace) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError(["document: top level must be an object"])
    if overrides.seed is not None:
        data["seed"] = overrides.seed
    if overrides.max_iters is not None:
        data["max_iters"] = overrides.max_iters
    if overrides.out is not None:
        data["output_dir"] = overrides.out
    return data


def _error_json(kind: str, exc: Exception) -> str:
    payload: dict[str, Any] = {"error": kind, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["fields"] = exc.errors
    if isinstance(exc, ExperimentError):
        payload["iteration"] = exc.iteration
        payload["partial_trace"] = exc.partial_trace
    return json.dumps(payload, indent=2, sort_keys=True)


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="holderopt", description="Run parameter-free solver experiments."
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "sweep", "validate"):
        p = sub.add_parser(verb)
        p.add_argument("config", help="path to a JSON config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--max-iters", type=int, default=None, help="override iteration budget")
    p_slope = sub.add_parser("slope")
    p_slope.add_argument("trace", help="path to a trace CSV")
    p_slope.add_argument("--window", type=float, default=0.5, help="trailing fraction to fit")

    args = parser.parse_args(argv)
    try:
        if args.verb == "slope":
            records, gaps = read_trace(args.trace)
            if any(g is not None for g in gaps):
                pairs = [
                    (r.iter, g) for r, g in zip(records, gaps) if g is not None
                ]
            else:
                pairs, _ = trace_gaps(records, None)
            slope = estimate_slope(pairs, window_fraction=args.window)
            print(json.dumps({"slope": slope, "window": args.window}))
            return 0

        data = _load_config_file(args.config, args)
        if args.verb == "validate":
            cfg = _validate_dict(data)
            print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
            return 0
        if args.verb == "run":
            result = run_experiment(_validate_dict(data))
            print(
                json.dumps(
                    {
                        "name": result.name,
                        "trace": result.trace_path,
                        "summary": result.summary_path,
                        "final_psi_best": result.summary.final_psi_best,
                    },
                    indent=2,
                    sort_keys=True,
                )
            )
            return 0
        if args.verb == "sweep":
            results, index_path = run_sweep(data)
            print(
                json.dumps(
                    {"runs": len(results), "index": index_path}, indent=2, sort_keys=True
                )
            )
            return 0
        raise ValueError(f"unknown verb {args.verb!r}")
    except ConfigError as exc:
        print(_error_json("config", exc), file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(_error_json("experiment", exc), file=sys.stderr)
        return 1
    except Exception as exc:  # surface anything else as machine-readable JSON
        print(_error_json(type(exc).__name__, exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
