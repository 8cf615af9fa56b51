"""Render static convergence and robustness figures from solver output files.

Consumes exactly the experiment runner's file formats: trace CSVs (fixed
column set, gap possibly empty) and sweep index JSONs. Output is raster PNG
with a fixed size and no embedded timestamps, so re-rendering the same inputs
overwrites deterministically.

Usage: ``holderopt-render --spec figure.json`` where the spec file picks the
figure kind:

    {"kind": "convergence", "inputs": [{"trace": "a.csv", "label": "A"}, ...],
     "y_scale": "log", "x_field": "iter", "title": "...", "output": "out.png"}

    {"kind": "robustness", "index": "sweep.index.json",
     "title": "...", "output": "out.png"}
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = [
    "SchemaError",
    "FigureSpec",
    "RobustnessSpec",
    "load_spec",
    "read_trace_series",
    "render_convergence",
    "render_robustness",
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

FIGSIZE = (7.0, 4.5)
DPI = 120


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    inputs: list[tuple[str, str]]        # (trace path, label)
    output: str
    y_scale: str = "log"                 # "log" or "linear"
    x_field: str = "iter"                # "iter" or "grad_evals"
    title: str = ""


@dataclass(frozen=True)
class RobustnessSpec:
    index: str
    output: str
    title: str = ""


def load_spec(path) -> FigureSpec | RobustnessSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    kind = data.get("kind")
    if kind == "convergence":
        inputs = [(item["trace"], item["label"]) for item in data["inputs"]]
        spec = FigureSpec(
            inputs=inputs,
            output=data["output"],
            y_scale=data.get("y_scale", "log"),
            x_field=data.get("x_field", "iter"),
            title=data.get("title", ""),
        )
        if spec.y_scale not in ("log", "linear"):
            raise SchemaError(f"y_scale must be log or linear, got {spec.y_scale!r}")
        if spec.x_field not in ("iter", "grad_evals"):
            raise SchemaError(f"x_field must be iter or grad_evals, got {spec.x_field!r}")
        if not spec.inputs:
            raise SchemaError("convergence spec needs at least one input trace")
        for trace, _ in spec.inputs:
            if not Path(trace).exists():
                raise SchemaError(f"input trace does not exist: {trace}")
        return spec
    if kind == "robustness":
        if not Path(data["index"]).exists():
            raise SchemaError(f"sweep index does not exist: {data['index']}")
        return RobustnessSpec(
            index=data["index"], output=data["output"], title=data.get("title", "")
        )
    raise SchemaError(f"unknown figure kind {kind!r}")


def read_trace_series(path, x_field: str) -> tuple[list[float], list[float], bool]:
    """(x, y, used_gap) series from one trace CSV.

    y is the gap column when present and populated, otherwise psi_best.
    A header that does not match the trace schema raises SchemaError naming
    the file and the first offending column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        if header != TRACE_COLUMNS:
            for got, want in zip(header, TRACE_COLUMNS):
                if got != want:
                    raise SchemaError(f"{path}: expected column {want!r}, found {got!r}")
            raise SchemaError(f"{path}: expected {len(TRACE_COLUMNS)} columns, found {len(header)}")
        x_index = TRACE_COLUMNS.index(x_field)
        gap_index = TRACE_COLUMNS.index("gap")
        best_index = TRACE_COLUMNS.index("psi_best")
        xs: list[float] = []
        gaps: list[float | None] = []
        bests: list[float] = []
        for row in reader:
            if len(row) != len(TRACE_COLUMNS):
                raise SchemaError(f"{path}: malformed row {reader.line_num}")
            xs.append(float(row[x_index]))
            gaps.append(float(row[gap_index]) if row[gap_index] else None)
            bests.append(float(row[best_index]))
    use_gap = all(g is not None for g in gaps) and len(gaps) > 0
    ys = [g for g in gaps] if use_gap else bests
    return xs, ys, use_gap


def render_convergence(spec: FigureSpec) -> Path:
    """One PNG with a curve per input trace, sorted by label."""
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for trace, label in sorted(spec.inputs, key=lambda item: item[1]):
        xs, ys, _ = read_trace_series(trace, spec.x_field)
        if spec.y_scale == "log":
            points = [(x, y) for x, y in zip(xs, ys) if y > 0.0]
        else:
            points = list(zip(xs, ys))
        ax.plot([p[0] for p in points], [p[1] for p in points], label=label)
    ax.set_xlabel("iteration" if spec.x_field == "iter" else "gradient evaluations")
    ax.set_ylabel("objective gap")
    if spec.y_scale == "log":
        ax.set_yscale("log")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.tight_layout()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="png")
    plt.close(fig)
    return out


def robustness_groups(index_path) -> tuple[list[float], list[str], dict[str, list[float]]]:
    """Bar-chart data model: one group per swept r_bar, one bar per tolerance."""
    with open(index_path, "r", encoding="utf-8") as fh:
        index = json.load(fh)
    runs = index.get("runs")
    if not runs:
        raise SchemaError(f"{index_path}: no runs in sweep index")
    r_bars = [run["r_bar"] for run in runs]
    tolerances = sorted(
        {eps for run in runs for eps in run.get("iters_to_tol", {})},
        key=float,
        reverse=True,
    )
    if not tolerances:
        raise SchemaError(f"{index_path}: runs carry no iters_to_tol data")
    bars = {
        eps: [run["iters_to_tol"].get(eps) for run in runs] for eps in tolerances
    }
    return r_bars, tolerances, bars


def render_robustness(spec: RobustnessSpec) -> Path:
    """Grouped bars of iterations-to-tolerance against the swept r_bar values."""
    r_bars, tolerances, bars = robustness_groups(spec.index)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    group_count = len(r_bars)
    width = 0.8 / len(tolerances)
    for j, eps in enumerate(tolerances):
        offsets = [i + j * width for i in range(group_count)]
        heights = [h if h is not None else 0 for h in bars[eps]]
        ax.bar(offsets, heights, width=width, label=f"gap <= {eps}")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(group_count)])
    ax.set_xticklabels([f"{r:g}" for r in r_bars], rotation=45)
    ax.set_xlabel("distance estimate r_bar")
    ax.set_ylabel("iterations to tolerance")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.tight_layout()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="png")
    plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="holderopt-render", description="Render figures from solver outputs."
    )
    parser.add_argument("--spec", required=True, help="path to a figure spec JSON")
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        if isinstance(spec, FigureSpec):
            out = render_convergence(spec)
        else:
            out = render_robustness(spec)
    except (SchemaError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps({"output": str(out)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
