"""Distance-adaptive accelerated dual averaging with a two-stage line search.

The solver keeps the triplet (x, v, y) of accelerated dual averaging, estimates
the distance to the minimizer by the running maximum ``r_bar_k = max(r_bar_{k-1},
||x0 - v_k||)``, sets the averaging weights through ``A_{k+1} = (sum_i
sqrt(r_bar_i))^2``, and picks the regularization strength ``beta`` by searching
for a nonnegative value of the descent surrogate ``l_k(beta)``. The search
doubles ``beta`` until the surrogate turns nonnegative, then bisects the
bracketing interval down to a tolerance that shrinks like ``beta0 / (2 k^2)``.

Oracle budget per iteration: one gradient evaluation, one function evaluation
per line-search trial (each trial also costs one prox solve), and nothing else.
The function value at the accepted trial point is reused for best-so-far
tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import OracleCounters, Stopwatch, TraceRecord, as_vector, combine, norm2
from .prox import dual_averaging_argmin

__all__ = [
    "AgdaError",
    "LineSearchError",
    "AgdaState",
    "LineSearchOutcome",
    "init_state",
    "update_distances",
    "eval_l",
    "line_search",
    "agda_step",
    "run_agda",
]

# Hard cap on stage-1 doublings: 2**200 growth is unreachable for any problem
# with finite local smoothness, so hitting it signals a broken oracle.
STAGE1_CAP = 200

DEFAULT_R_BAR = 1e-3
DEFAULT_BETA0 = 1e-3


class AgdaError(RuntimeError):
    pass


class LineSearchError(AgdaError):
    """Line search could not finish; carries diagnostics for the failure report."""

    def __init__(self, message: str, *, beta: float, l_value: float | None, iteration: int):
        super().__init__(message)
        self.beta = beta
        self.l_value = l_value
        self.iteration = iteration


@dataclass(frozen=True)
class LineSearchOutcome:
    beta_next: float
    stage1_evals: int
    stage2_evals: int
    l_value: float


class TrialEval(NamedTuple):
    l: float
    v_trial: np.ndarray
    y_trial: np.ndarray
    f_y: float


@dataclass
class AgdaState:
    k: int
    x0: np.ndarray
    v: np.ndarray
    y: np.ndarray
    x: np.ndarray
    S: np.ndarray                 # accumulated weighted gradients sum_i a_i * grad(x_i)
    A: float
    sqrt_sum: float               # sum_{i<k} sqrt(r_bar_i), so A == sqrt_sum**2
    beta: float
    r_bar: float
    r_bar_prev: float
    beta0: float
    best_point: np.ndarray
    best_value: float
    counters: OracleCounters
    last_ls: LineSearchOutcome | None = None
    last_f_x: float = math.nan    # f at the current x, for line-search scale checks
    _f0: float = math.nan         # cached f(x0), reused at the anchored first step
    _clock: Stopwatch | None = None


def init_state(problem, x0, r_bar: float = DEFAULT_R_BAR, beta0: float = DEFAULT_BETA0) -> AgdaState:
    """Build the iteration-0 state anchored at x0.

    Evaluates psi(x0) once (one f call) to seed the best-so-far tracker; the
    value is reused at step 0, where the first iterate equals x0 exactly.
    """
    if r_bar <= 0.0:
        raise ValueError(f"r_bar must be positive, got {r_bar}")
    if beta0 <= 0.0:
        raise ValueError(f"beta0 must be positive, got {beta0}")
    x0 = as_vector(x0, problem.dim)
    if problem.g.is_indicator and not problem.g.feasible(x0):
        raise ValueError("x0 lies outside the domain of g; pick a feasible start")
    counters = OracleCounters()
    f0 = float(problem.f_value(x0))
    counters.f_evals += 1
    if not math.isfinite(f0):
        raise ValueError("objective is not finite at x0")
    psi0 = f0 + problem.g_value(x0)
    return AgdaState(
        k=0,
        x0=x0,
        v=x0.copy(),
        y=x0.copy(),
        x=x0.copy(),
        S=np.zeros_like(x0),
        A=0.0,
        sqrt_sum=0.0,
        beta=beta0,
        r_bar=r_bar,
        r_bar_prev=r_bar,
        beta0=beta0,
        best_point=x0.copy(),
        best_value=psi0,
        counters=counters,
        last_f_x=f0,
        _f0=f0,
        _clock=Stopwatch(),
    )


def update_distances(state: AgdaState) -> tuple[float, float, float, float]:
    """Advance the distance estimate and averaging weights for the current step.

    Returns ``(r_k, tau_k, a_next, A_next)`` and commits r_bar bookkeeping,
    sqrt_sum and A on the state. At k = 0 this yields tau_0 = 1 exactly.
    """
    r_k = norm2(state.x0 - state.v)
    state.r_bar_prev = state.r_bar
    state.r_bar = max(state.r_bar, r_k)
    state.sqrt_sum += math.sqrt(state.r_bar)
    A_next = state.sqrt_sum ** 2
    a_next = A_next - state.A
    tau = a_next / A_next
    state.A = A_next
    return r_k, tau, a_next, A_next


def eval_l(
    state: AgdaState,
    beta: float,
    grad_x: np.ndarray,
    f_x: float,
    problem,
    tau: float,
    a_next: float,
    A_next: float,
    s_trial: np.ndarray,
) -> TrialEval:
    """Evaluate the descent surrogate l(beta) at a trial regularization level.

    Solves the dual-averaging subproblem at ``beta`` (one prox call), forms the
    trial point ``y = tau*v + (1-tau)*y_k``, and evaluates f there (exactly one
    f call). ``s_trial`` must already include ``a_next * grad_x``; it is formed
    once per outer iteration and shared by all trials.
    """
    v_trial = dual_averaging_argmin(problem.g, state.x0, s_trial, A_next, beta)
    state.counters.prox_evals += 1
    y_trial = combine(tau, v_trial, state.y)
    f_y = float(problem.f_value(y_trial))
    state.counters.f_evals += 1
    if not math.isfinite(f_y):
        raise LineSearchError(
            f"objective is not finite at the trial point (beta={beta!r})",
            beta=beta,
            l_value=None,
            iteration=state.k,
        )
    diff = y_trial - state.x
    dist2 = float(np.dot(diff, diff))
    l = (
        -f_y
        + f_x
        + float(np.dot(grad_x, diff))
        + beta / (64.0 * tau * tau * A_next) * dist2
        + (beta * state.r_bar ** 2 - state.beta * state.r_bar_prev ** 2) / (16.0 * A_next)
    )
    return TrialEval(l, v_trial, y_trial, f_y)


def line_search(
    state: AgdaState, l_evaluator: Callable[[float], TrialEval]
) -> tuple[LineSearchOutcome, TrialEval]:
    """Two-stage search for the smallest acceptable beta.

    Stage 1 doubles beta until l >= 0 (smallest i >= 1 with
    l(2**(i-1) * beta_k) >= 0). If the very first trial passes, beta is kept.
    Otherwise stage 2 bisects the bracket [2**(i-2), 2**(i-1)] * beta_k,
    keeping l(right endpoint) >= 0, until the width drops below
    beta0 / (2*max(k,1)**2), and returns the right endpoint.
    """
    beta_k = state.beta
    eps = state.beta0 / (2.0 * max(state.k, 1) ** 2)

    trial = l_evaluator(beta_k)
    i_prime = 1
    beta_hi = beta_k
    while trial.l < 0.0:
        i_prime += 1
        if i_prime > STAGE1_CAP:
            raise LineSearchError(
                "line search diverged: descent surrogate stayed negative after "
                f"{STAGE1_CAP} doublings (last l={trial.l!r})",
                beta=beta_hi,
                l_value=trial.l,
                iteration=state.k,
            )
        beta_hi = beta_k * 2.0 ** (i_prime - 1)
        trial = l_evaluator(beta_hi)

    if i_prime == 1:
        outcome = LineSearchOutcome(beta_k, 1, 0, trial.l)
        return outcome, trial

    lo = beta_k * 2.0 ** (i_prime - 2)
    hi = beta_hi
    accepted = trial
    i_star = 0
    while hi - lo > eps:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval narrower than float resolution
            break
        mid_trial = l_evaluator(mid)
        i_star += 1
        if mid_trial.l < 0.0:
            lo = mid
        else:
            hi = mid
            accepted = mid_trial
    outcome = LineSearchOutcome(hi, i_prime, i_star, accepted.l)
    return outcome, accepted


def agda_step(state: AgdaState, problem) -> TraceRecord:
    """Run one full outer iteration and return its trace row.

    Exactly one gradient evaluation happens here; step 0 reuses the cached
    f(x0) because the anchored first iterate satisfies x_1 == x0 bitwise.
    """
    _, tau, a_next, A_next = update_distances(state)
    state.x = combine(tau, state.v, state.y)

    if state.k == 0:
        f_x = state._f0
    else:
        f_x = float(problem.f_value(state.x))
        state.counters.f_evals += 1
    grad_x = np.asarray(problem.f_grad(state.x), dtype=np.float64)
    state.counters.grad_evals += 1
    state.last_f_x = f_x
    s_trial = state.S + a_next * grad_x

    def evaluator(beta: float) -> TrialEval:
        return eval_l(state, beta, grad_x, f_x, problem, tau, a_next, A_next, s_trial)

    outcome, accepted = line_search(state, evaluator)

    state.S = s_trial
    state.beta = outcome.beta_next
    state.v = accepted.v_trial
    state.y = accepted.y_trial
    state.k += 1
    state.last_ls = outcome

    psi_y = accepted.f_y + problem.g_value(state.y)
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
        ls_stage1=outcome.stage1_evals,
        ls_stage2=outcome.stage2_evals,
        counters=state.counters.snapshot(),
        wall_ms=state._clock.ms() if state._clock else 0.0,
    )


def _initial_record(state: AgdaState, psi0: float) -> TraceRecord:
    return TraceRecord(
        iter=0,
        psi_y=psi0,
        psi_best=psi0,
        beta=state.beta,
        r_bar=state.r_bar,
        A=state.A,
        tau=0.0,
        ls_stage1=0,
        ls_stage2=0,
        counters=state.counters.snapshot(),
        wall_ms=state._clock.ms() if state._clock else 0.0,
    )


def run_agda(
    problem,
    x0,
    *,
    r_bar: float = DEFAULT_R_BAR,
    beta0: float = DEFAULT_BETA0,
    max_iters: int,
    target_value: float | None = None,
    tol: float | None = None,
    monitor: Callable[[AgdaState, TraceRecord], None] | None = None,
) -> list[TraceRecord]:
    """Run the solver for max_iters steps (or until best - target <= tol).

    The returned trace starts with an iteration-0 row for the initial point;
    the final row's psi_best is the best objective value seen over all y
    iterates (including y_0 = x0).
    """
    if max_iters < 0:
        raise ValueError(f"max_iters must be >= 0, got {max_iters}")
    state = init_state(problem, x0, r_bar=r_bar, beta0=beta0)
    records = [_initial_record(state, state.best_value)]
    for _ in range(max_iters):
        record = agda_step(state, problem)
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
