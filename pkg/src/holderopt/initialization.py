"""Automatic initialization of the starting regularization level and distance guess.

Both routines probe the objective near the anchor point. The regularization
initializer fits a one-point quadratic-plus-offset model to a Bregman gap; the
distance initializer halves a guess until a single solver iteration travels at
least that far, which certifies the guess as a valid underestimate of the
(scaled) distance to the minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SeededRng, as_vector, norm2
from .prox import BallProx, BoxProx, IdentityProx

__all__ = ["InitError", "InitDiagnostics", "init_beta0", "init_rbar"]

PROBE_ATTEMPTS = 32
RBAR_HALVING_CAP = 60
_INTERIOR_MARGIN = 1e-9


class InitError(RuntimeError):
    pass


@dataclass
class InitDiagnostics:
    chosen_value: float
    probes_used: int
    probe_points: list[tuple[np.ndarray, float]] = field(default_factory=list)
    # Alternative value from the boxed max-form of the initializer, kept for
    # comparison; the min-form is what the routine returns.
    box_formula_value: float | None = None


def _bregman_gap(problem, x0: np.ndarray, f0: float, g0: np.ndarray, probe: np.ndarray) -> float:
    return float(problem.f_value(probe)) - f0 - float(np.dot(g0, probe - x0))


def init_beta0(
    problem,
    x0,
    r_bar: float,
    probe: np.ndarray | None = None,
    rng: SeededRng | None = None,
) -> tuple[float, InitDiagnostics]:
    """Pick a starting regularization level from one curvature probe.

    With gap = f(x') - f(x0) - <grad f(x0), x' - x0> for a probe x' within
    r_bar of x0, sets c = min(gap / r_bar^2, 1/2),
    M = 2 (gap - c r_bar^2 / 2) / ||x0 - x'||^2 and returns
    ``sqrt(c) * r_bar * min(sqrt(128 M), 128 M)``.

    When no probe is supplied, points x0 + r_bar * u for random unit u are
    tried (up to 32) until the gap is positive; a locally affine objective
    exhausts the attempts and raises.
    """
    if r_bar <= 0.0:
        raise ValueError(f"r_bar must be positive, got {r_bar}")
    x0 = as_vector(x0, problem.dim)
    f0 = float(problem.f_value(x0))
    g0 = np.asarray(problem.f_grad(x0), dtype=np.float64)

    if probe is not None:
        probe = as_vector(probe, problem.dim)
        if norm2(probe - x0) > r_bar * (1.0 + 1e-12):
            raise ValueError("probe point must lie within r_bar of x0")
        gap = _bregman_gap(problem, x0, f0, g0, probe)
        if gap <= 0.0:
            raise ValueError("probe point has nonpositive Bregman gap")
        probes = [(probe, gap)]
    else:
        gen = (rng or SeededRng(0)).substream(0xB0)
        probes = []
        gap = -math.inf
        for _ in range(PROBE_ATTEMPTS):
            u = gen.standard_normal(x0.size)
            u /= np.linalg.norm(u)
            candidate = x0 + r_bar * u
            gap = _bregman_gap(problem, x0, f0, g0, candidate)
            probes.append((candidate, gap))
            if gap > 1e-14:
                probe = candidate
                break
        else:
            raise InitError(
                "cannot auto-initialize beta0: every probe produced a nonpositive "
                "curvature gap (objective is locally affine); supply beta0 explicitly"
            )

    c = min(gap / r_bar ** 2, 0.5)
    M = 2.0 * (gap - c * r_bar ** 2 / 2.0) / norm2(x0 - probe) ** 2
    beta0 = math.sqrt(c) * r_bar * min(math.sqrt(128.0 * M), 128.0 * M)
    box_value = r_bar * max(8.0 * math.sqrt(2.0 * M), 128.0 * M) * min(1.0, math.sqrt(c))
    diag = InitDiagnostics(
        chosen_value=beta0,
        probes_used=len(probes),
        probe_points=probes,
        box_formula_value=box_value,
    )
    return beta0, diag


def _strictly_interior(g_op, point: np.ndarray) -> bool:
    if isinstance(g_op, IdentityProx):
        return True
    if isinstance(g_op, BallProx):
        slack = _INTERIOR_MARGIN * max(1.0, g_op.radius)
        return norm2(point - g_op.center) <= g_op.radius - slack
    if isinstance(g_op, BoxProx):
        scale = np.maximum(1.0, np.abs(g_op.hi - g_op.lo))
        return bool(
            np.all(point >= g_op.lo + _INTERIOR_MARGIN * scale)
            and np.all(point <= g_op.hi - _INTERIOR_MARGIN * scale)
        )
    raise InitError(
        "distance auto-initialization needs g == 0 or a full-dimensional set "
        f"(ball/box); got {type(g_op).__name__}"
    )


def init_rbar(
    problem, x0, r_guess: float, beta0: float
) -> tuple[float, InitDiagnostics]:
    """Halve a distance guess until one solver iteration certifies it.

    For each d = r_guess / 2^i, runs a single accelerated step with distance
    estimate d and accepts d once the resulting dual-averaging point v1 is
    strictly inside dom g and at least d away from x0. Fails after 60
    halvings, which in practice means the gradient at x0 vanishes (x0 already
    optimal).
    """
    from .agda import agda_step, init_state

    if r_guess <= 0.0:
        raise ValueError(f"r_guess must be positive, got {r_guess}")
    if beta0 <= 0.0:
        raise ValueError(f"beta0 must be positive, got {beta0}")
    x0 = as_vector(x0, problem.dim)
    if norm2(np.asarray(problem.f_grad(x0), dtype=np.float64)) == 0.0:
        raise InitError(
            "r_bar auto-init failed: gradient at x0 is zero (x0 is already optimal)"
        )

    probes: list[tuple[np.ndarray, float]] = []
    for i in range(RBAR_HALVING_CAP):
        d_i = r_guess * 2.0 ** (-i)
        state = init_state(problem, x0, r_bar=d_i, beta0=beta0)
        agda_step(state, problem)
        r1 = norm2(state.v - x0)
        probes.append((state.v.copy(), r1))
        if _strictly_interior(problem.g, state.v) and r1 >= d_i:
            diag = InitDiagnostics(chosen_value=d_i, probes_used=i + 1, probe_points=probes)
            return d_i, diag
    raise InitError(
        "r_bar auto-init failed after "
        f"{RBAR_HALVING_CAP} halvings; gradient at x0 is likely zero"
    )
