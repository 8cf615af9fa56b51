"""Comparison methods: a norm-adaptive subgradient baseline and tuned FISTA.

These exist so experiment outputs can show the accelerated/adaptive solver
against something simpler (untuned) and something classical (hand-tuned with
a Lipschitz estimate). Neither is a reference implementation of the cited
methods; they are deliberately minimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import OracleCounters, Stopwatch, TraceRecord, as_vector, norm2

__all__ = [
    "DogState",
    "AgdFixedState",
    "init_dog_state",
    "dog_step",
    "run_dog",
    "init_agd_fixed_state",
    "agd_fixed_step",
    "run_agd_fixed",
]


@dataclass
class DogState:
    x: np.ndarray
    x0: np.ndarray
    r_bar: float              # starts at r_eps, then max distance traveled
    grad_sq_sum: float
    best_point: np.ndarray
    best_value: float
    counters: OracleCounters
    k: int = 0
    _clock: Stopwatch | None = None


def init_dog_state(problem, x0, r_eps: float) -> DogState:
    if r_eps <= 0.0:
        raise ValueError(f"r_eps must be positive, got {r_eps}")
    x0 = as_vector(x0, problem.dim)
    counters = OracleCounters()
    psi0 = float(problem.f_value(x0)) + problem.g_value(x0)
    counters.f_evals += 1
    return DogState(
        x=x0.copy(),
        x0=x0,
        r_bar=r_eps,
        grad_sq_sum=0.0,
        best_point=x0.copy(),
        best_value=psi0,
        counters=counters,
        _clock=Stopwatch(),
    )


def dog_step(state: DogState, problem) -> TraceRecord:
    """Distance-over-gradients step: eta = r_bar / sqrt(sum ||g||^2).

    A zero gradient before any history leaves eta undefined; the update is
    skipped and the iteration still emits a record.
    """
    g = np.asarray(problem.f_grad(state.x), dtype=np.float64)
    state.counters.grad_evals += 1
    state.grad_sq_sum += float(np.dot(g, g))
    state.r_bar = max(state.r_bar, norm2(state.x - state.x0))
    if state.grad_sq_sum > 0.0:
        eta = state.r_bar / math.sqrt(state.grad_sq_sum)
        state.x = problem.g.prox(state.x - eta * g, eta)
        state.counters.prox_evals += 1
    state.k += 1

    psi = float(problem.f_value(state.x)) + problem.g_value(state.x)
    state.counters.f_evals += 1
    if psi < state.best_value:
        state.best_value = psi
        state.best_point = state.x.copy()
    return TraceRecord(
        iter=state.k,
        psi_y=psi,
        psi_best=state.best_value,
        beta=0.0,
        r_bar=state.r_bar,
        A=0.0,
        tau=0.0,
        ls_stage1=0,
        ls_stage2=0,
        counters=state.counters.snapshot(),
        wall_ms=state._clock.ms() if state._clock else 0.0,
    )


@dataclass
class AgdFixedState:
    x: np.ndarray
    y: np.ndarray                 # extrapolated point
    t: float
    L: float
    best_point: np.ndarray
    best_value: float
    counters: OracleCounters
    k: int = 0
    _clock: Stopwatch | None = None


def init_agd_fixed_state(problem, x0, L: float) -> AgdFixedState:
    if L <= 0.0:
        raise ValueError(f"L must be positive, got {L}")
    x0 = as_vector(x0, problem.dim)
    counters = OracleCounters()
    psi0 = float(problem.f_value(x0)) + problem.g_value(x0)
    counters.f_evals += 1
    return AgdFixedState(
        x=x0.copy(),
        y=x0.copy(),
        t=1.0,
        L=L,
        best_point=x0.copy(),
        best_value=psi0,
        counters=counters,
        _clock=Stopwatch(),
    )


def agd_fixed_step(state: AgdFixedState, problem) -> TraceRecord:
    """Accelerated proximal gradient with constant stepsize 1/L (FISTA momentum)."""
    g = np.asarray(problem.f_grad(state.y), dtype=np.float64)
    state.counters.grad_evals += 1
    x_next = problem.g.prox(state.y - g / state.L, 1.0 / state.L)
    state.counters.prox_evals += 1
    t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * state.t * state.t))
    state.y = x_next + ((state.t - 1.0) / t_next) * (x_next - state.x)
    state.x = x_next
    state.t = t_next
    state.k += 1

    psi = float(problem.f_value(state.x)) + problem.g_value(state.x)
    state.counters.f_evals += 1
    if psi < state.best_value:
        state.best_value = psi
        state.best_point = state.x.copy()
    return TraceRecord(
        iter=state.k,
        psi_y=psi,
        psi_best=state.best_value,
        beta=state.L,
        r_bar=0.0,
        A=0.0,
        tau=0.0,
        ls_stage1=0,
        ls_stage2=0,
        counters=state.counters.snapshot(),
        wall_ms=state._clock.ms() if state._clock else 0.0,
    )


def _run_loop(state, problem, step: Callable, max_iters: int, initial: TraceRecord,
              target_value: float | None, tol: float | None,
              monitor: Callable | None) -> list[TraceRecord]:
    records = [initial]
    for _ in range(max_iters):
        record = step(state, problem)
        records.append(record)
        if monitor is not None:
            monitor(state, record)
        if (
            target_value is not None
            and tol is not None
            and state.best_value - target_value <= tol
        ):
            break
    return records


def _initial_record(state) -> TraceRecord:
    return TraceRecord(
        iter=0,
        psi_y=state.best_value,
        psi_best=state.best_value,
        beta=getattr(state, "L", 0.0),
        r_bar=getattr(state, "r_bar", 0.0),
        A=0.0,
        tau=0.0,
        ls_stage1=0,
        ls_stage2=0,
        counters=state.counters.snapshot(),
        wall_ms=0.0,
    )


def run_dog(
    problem,
    x0,
    *,
    r_eps: float,
    max_iters: int,
    target_value: float | None = None,
    tol: float | None = None,
    monitor: Callable | None = None,
) -> list[TraceRecord]:
    if max_iters < 0:
        raise ValueError(f"max_iters must be >= 0, got {max_iters}")
    state = init_dog_state(problem, x0, r_eps)
    return _run_loop(state, problem, dog_step, max_iters, _initial_record(state),
                     target_value, tol, monitor)


def run_agd_fixed(
    problem,
    x0,
    *,
    L: float,
    max_iters: int,
    target_value: float | None = None,
    tol: float | None = None,
    monitor: Callable | None = None,
) -> list[TraceRecord]:
    if max_iters < 0:
        raise ValueError(f"max_iters must be >= 0, got {max_iters}")
    state = init_agd_fixed_state(problem, x0, L)
    return _run_loop(state, problem, agd_fixed_step, max_iters, _initial_record(state),
                     target_value, tol, monitor)
