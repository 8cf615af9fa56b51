"""Shared independent oracles used across the test modules."""

import dataclasses
import itertools

import numpy as np


def same_record(a, b) -> bool:
    """Record equality up to wall-clock time (which is never deterministic)."""
    return dataclasses.replace(a, wall_ms=0.0) == dataclasses.replace(b, wall_ms=0.0)


def brute_force_simplex(z: np.ndarray) -> np.ndarray:
    """Projection onto the simplex by exhaustive active-set enumeration.

    Every subset of coordinates pinned to zero yields an equality-constrained
    candidate; the projection is the feasible candidate closest to z.
    """
    d = z.size
    best, best_dist = None, np.inf
    for free in itertools.chain.from_iterable(
        itertools.combinations(range(d), r) for r in range(1, d + 1)
    ):
        free = list(free)
        theta = (z[free].sum() - 1.0) / len(free)
        y = np.zeros(d)
        y[free] = z[free] - theta
        if y[free].min() < -1e-12:
            continue
        dist = np.dot(y - z, y - z)
        if dist < best_dist:
            best, best_dist = y, dist
    assert best is not None
    return best


def brute_force_box(z: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Projection onto a box by enumerating per-coordinate KKT cases."""
    d = z.size
    best, best_dist = None, np.inf
    choices = []
    for i in range(d):
        options = [lo[i], hi[i]]
        if lo[i] <= z[i] <= hi[i]:
            options.append(z[i])
        choices.append(options)
    for combo in itertools.product(*choices):
        y = np.array(combo)
        dist = np.dot(y - z, y - z)
        if dist < best_dist:
            best, best_dist = y, dist
    return best


def central_difference_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def bisect_balance_root(
    beta: float, tau: float, A: float, r_bar: float, inner: float, dist2: float,
    tol: float = 1e-13,
) -> float:
    """Root of the balance equation by bisection on its monotone residual."""

    def residual(b):
        lhs = (b - beta) * r_bar ** 2 / (2.0 * A)
        rhs = max(0.0, inner - b * dist2 / (64.0 * tau ** 2 * A))
        return lhs - rhs

    lo = beta
    if residual(lo) >= 0.0:
        return lo
    hi = beta + 1.0
    while residual(hi) < 0.0:
        hi = beta + 2.0 * (hi - beta)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return hi
