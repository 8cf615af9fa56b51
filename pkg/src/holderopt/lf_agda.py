"""Line-search-free stochastic variant of the distance-adaptive solver.

Instead of searching for the regularization level, each iteration solves a
one-dimensional balance equation whose unique root has a closed form; the
stochastic gradients at the two fresh trial points are the only oracle
information it needs. The distance estimate additionally absorbs the
prox-trial point: ``r_bar_k = max(r_bar_{k-1}, ||x0 - v_k||, ||x0 - x_hat_k||)``.

Each iteration draws exactly two stochastic gradients, from sub-streams
keyed by (seed, iteration, role) so that replays are exact. Best-so-far
tracking evaluates the problem's deterministic objective; it is diagnostic
only and never feeds back into the stepsizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import OracleCounters, SeededRng, Stopwatch, TraceRecord, as_vector, combine, norm2
from .prox import dual_averaging_argmin

__all__ = [
    "BETA_FLOOR",
    "LfAgdaState",
    "LfAgdaResult",
    "balance_closed_form",
    "init_lf_state",
    "lf_step",
    "run_lf_agda",
]

# Stand-in for beta_k in the two divisions when beta is still exactly zero,
# which only happens at the very first iteration (beta starts at 0). For an
# indicator g the resulting far-out prox trial collapses to the boundary point
# in the gradient direction, and the distance update absorbs it.
BETA_FLOOR = 1e-12


@dataclass
class LfAgdaState:
    k: int
    x0: np.ndarray
    v: np.ndarray
    y: np.ndarray
    x: np.ndarray
    x_hat: np.ndarray
    S: np.ndarray                 # accumulated weighted stochastic gradients
    A: float
    sqrt_sum: float
    beta: float                   # starts at 0 by construction
    r_bar: float
    r_bar_prev: float
    rng: SeededRng
    best_point: np.ndarray
    best_value: float
    counters: OracleCounters
    _clock: Stopwatch | None = None


@dataclass(frozen=True)
class LfAgdaResult:
    """Full trace plus the two anytime output indices reported by the method.

    ``kstar`` minimizes r_bar_k / A_k (the stochastic analysis index);
    ``kstar_sqrt`` minimizes sqrt(r_bar_k) / sum_{i<k} sqrt(r_bar_i) (the
    deterministic analysis index). Both are reported with the objective value
    of the corresponding y iterate.
    """

    records: list[TraceRecord]
    kstar: int
    psi_kstar: float
    kstar_sqrt: int
    psi_kstar_sqrt: float


def balance_closed_form(
    beta: float, tau: float, A_next: float, r_bar: float, inner: float, dist2: float
) -> float:
    """Unique root of the balance equation in the next regularization level.

    Solves ``(b - beta) * r_bar^2 / (2 A) = [inner - b * dist2 / (64 tau^2 A)]_+``
    for b; the left side grows from zero while the bracketed side decreases,
    so the root is unique and works out to
    ``beta + [64 tau^2 A inner - beta dist2]_+ / (32 tau^2 r_bar^2 + dist2)``.
    """
    if A_next <= 0.0:
        raise ValueError(f"A_next must be positive, got {A_next}")
    if r_bar <= 0.0:
        raise ValueError(f"r_bar must be positive, got {r_bar}")
    t2 = tau * tau
    numerator = 64.0 * t2 * A_next * inner - beta * dist2
    if numerator <= 0.0:
        return beta
    return beta + numerator / (32.0 * t2 * r_bar ** 2 + dist2)


def _stoch_oracle(problem) -> Callable[[np.ndarray, np.random.Generator], np.ndarray]:
    draw = getattr(problem, "f_stoch_grad", None)
    if draw is not None:
        return draw
    # A noiseless oracle is a valid stochastic oracle (sigma = 0).
    return lambda x, rng: problem.f_grad(x)


def init_lf_state(problem, x0, r_bar: float, rng: SeededRng) -> LfAgdaState:
    if r_bar <= 0.0:
        raise ValueError(f"r_bar must be positive, got {r_bar}")
    x0 = as_vector(x0, problem.dim)
    if problem.g.is_indicator and not problem.g.feasible(x0):
        raise ValueError("x0 lies outside the domain of g; pick a feasible start")
    counters = OracleCounters()
    psi0 = float(problem.f_value(x0)) + problem.g_value(x0)
    counters.f_evals += 1
    return LfAgdaState(
        k=0,
        x0=x0,
        v=x0.copy(),
        y=x0.copy(),
        x=x0.copy(),
        x_hat=x0.copy(),
        S=np.zeros_like(x0),
        A=0.0,
        sqrt_sum=0.0,
        beta=0.0,
        r_bar=r_bar,
        r_bar_prev=r_bar,
        rng=rng,
        best_point=x0.copy(),
        best_value=psi0,
        counters=counters,
        _clock=Stopwatch(),
    )


def _draw(problem, state: LfAgdaState, point: np.ndarray, role: int) -> np.ndarray:
    gen = state.rng.substream(state.k, role)
    g = np.asarray(_stoch_oracle(problem)(point, gen), dtype=np.float64)
    state.counters.stoch_grad_evals += 1
    if not np.all(np.isfinite(g)):
        raise ValueError(f"stochastic gradient is not finite at iteration {state.k}")
    return g


def lf_step(state: LfAgdaState, problem) -> TraceRecord:
    """One iteration; exactly two stochastic gradient draws."""
    beta_eff = max(state.beta, BETA_FLOOR)

    # (a) fresh dual-averaging point; the k = 0 solve is the 0/0 corner and is
    # skipped because v_0 = x0 by initialization.
    if state.k >= 1:
        state.v = dual_averaging_argmin(problem.g, state.x0, state.S, state.A, beta_eff)
        state.counters.prox_evals += 1

    # (b) distance bookkeeping, including the prox-trial distance d_k.
    d_k = norm2(state.x0 - state.x_hat)
    r_k = norm2(state.x0 - state.v)
    state.r_bar_prev = state.r_bar
    state.r_bar = max(state.r_bar, r_k, d_k)

    # (c) averaging weights.
    state.sqrt_sum += math.sqrt(state.r_bar)
    A_next = state.sqrt_sum ** 2
    a_next = A_next - state.A
    tau = a_next / A_next

    # (d)-(e) extrapolated point and its stochastic gradient.
    state.x = combine(tau, state.v, state.y)
    gx = _draw(problem, state, state.x, role=0)

    # (f)-(g) prox trial and the new averaged iterate.
    step = a_next / beta_eff
    x_hat_next = problem.g.prox(state.v - step * gx, step)
    state.counters.prox_evals += 1
    y_next = combine(tau, x_hat_next, state.y)

    # (h)-(i) second draw and the closed-form balance update.
    gy = _draw(problem, state, y_next, role=1)
    diff = y_next - state.x
    inner = float(np.dot(gy - gx, diff))
    dist2 = float(np.dot(diff, diff))
    beta_next = balance_closed_form(state.beta, tau, A_next, state.r_bar, inner, dist2)

    # (j) commit.
    state.S = state.S + a_next * gx
    state.x_hat = x_hat_next
    state.y = y_next
    state.A = A_next
    state.beta = beta_next
    state.k += 1

    # Diagnostic objective value (deterministic oracle); not used by the method.
    psi_y = float(problem.f_value(state.y)) + problem.g_value(state.y)
    state.counters.f_evals += 1
    if psi_y < state.best_value:
        state.best_value = psi_y
        state.best_point = state.y.copy()

    return TraceRecord(
        iter=state.k,
        psi_y=psi_y,
        psi_best=state.best_value,
        beta=state.beta,
        r_bar=state.r_bar,
        A=state.A,
        tau=tau,
        ls_stage1=0,
        ls_stage2=0,
        counters=state.counters.snapshot(),
        wall_ms=state._clock.ms() if state._clock else 0.0,
    )


def run_lf_agda(
    problem,
    x0,
    *,
    r_bar: float,
    seed: int = 0,
    max_iters: int,
    target_value: float | None = None,
    tol: float | None = None,
    monitor: Callable[[LfAgdaState, TraceRecord], None] | None = None,
) -> LfAgdaResult:
    """Run the stochastic solver and report the anytime output indices.

    The trace has one row per iteration. The index minimizing r_bar_k / A_k
    needs r_bar at the horizon, which the loop itself never forms, so one
    extra dual-averaging solve realizes it after the last step (no gradient
    draws are involved).
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    state = init_lf_state(problem, x0, r_bar, SeededRng(seed))
    records: list[TraceRecord] = []
    ratio_pairs: list[tuple[float, float]] = []  # (r_bar_k, A_k) for k = 1, 2, ...
    for _ in range(max_iters):
        A_k = state.A
        record = lf_step(state, problem)
        if state.k >= 2:
            # r_bar_{k} for k >= 1 pairs with A_k; the step just completed used
            # index k = state.k - 1.
            ratio_pairs.append((state.r_bar, A_k))
        records.append(record)
        if monitor is not None:
            monitor(state, record)
        if (
            target_value is not None
            and tol is not None
            and state.best_value - target_value <= tol
        ):
            break

    # Realize r_bar at the horizon with one more dual-averaging solve.
    K = state.k
    v_K = dual_averaging_argmin(
        problem.g, state.x0, state.S, state.A, max(state.beta, BETA_FLOOR)
    )
    state.counters.prox_evals += 1
    r_bar_K = max(state.r_bar, norm2(state.x0 - v_K), norm2(state.x0 - state.x_hat))
    ratio_pairs.append((r_bar_K, state.A))

    # ratio_pairs[i] holds (r_bar_k, A_k) for k = i + 1.
    kstar = 1 + min(
        range(len(ratio_pairs)), key=lambda i: ratio_pairs[i][0] / ratio_pairs[i][1]
    )
    kstar_sqrt = 1 + min(
        range(len(ratio_pairs)),
        key=lambda i: math.sqrt(ratio_pairs[i][0]) / math.sqrt(ratio_pairs[i][1]),
    )
    assert kstar <= K and kstar_sqrt <= K
    return LfAgdaResult(
        records=records,
        kstar=kstar,
        psi_kstar=records[kstar - 1].psi_y,
        kstar_sqrt=kstar_sqrt,
        psi_kstar_sqrt=records[kstar_sqrt - 1].psi_y,
    )
