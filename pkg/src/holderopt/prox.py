"""Scaled proximal operators and projections for the composite term g.

Each operator solves ``prox(z, lam) = argmin_y lam*g(y) + 0.5*||y - z||^2``.
For set indicators this is the Euclidean projection and ``lam`` is ignored.
The dual-averaging subproblem used by the solvers reduces to a single prox
call, see :func:`dual_averaging_argmin`.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "ProxOperator",
    "IdentityProx",
    "BallProx",
    "SimplexProx",
    "ProductSimplexProx",
    "BoxProx",
    "L1Prox",
    "prox",
    "dual_averaging_argmin",
]

# Slack for "is this point in the set" checks: iterates are feasible by
# construction (convex combinations of projections) but accumulate float drift.
FEAS_TOL = 1e-9


def _project_simplex(z: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the standard simplex, sort-and-threshold O(d log d)."""
    u = np.sort(z)[::-1]
    cumsum = np.cumsum(u)
    ks = np.arange(1, z.size + 1)
    cond = u + (1.0 - cumsum) / ks > 0.0
    rho = int(np.nonzero(cond)[0][-1])
    theta = (cumsum[rho] - 1.0) / (rho + 1.0)
    return np.maximum(z - theta, 0.0)


class ProxOperator:
    """Base operator; subclasses implement `_prox` and `g_value`."""

    #: True when g is the indicator of a set (prox = projection, lam ignored).
    is_indicator: bool = False

    def prox(self, z: np.ndarray, lam: float) -> np.ndarray:
        if not self.is_indicator and lam <= 0.0:
            raise ValueError(f"prox weight must be positive, got {lam}")
        return self._prox(np.asarray(z, dtype=np.float64), float(lam))

    def _prox(self, z: np.ndarray, lam: float) -> np.ndarray:
        raise NotImplementedError

    def g_value(self, x: np.ndarray) -> float:
        """Value of g at x; +inf outside the set (within FEAS_TOL) for indicators."""
        raise NotImplementedError

    def feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        return self.g_value(x) < math.inf if self.is_indicator else True


class IdentityProx(ProxOperator):
    """g identically zero: prox is the identity map."""

    is_indicator = False

    def prox(self, z: np.ndarray, lam: float) -> np.ndarray:  # lam unused but accepted
        return np.asarray(z, dtype=np.float64).copy()

    def g_value(self, x: np.ndarray) -> float:
        return 0.0


class BallProx(ProxOperator):
    """Indicator of the Euclidean ball {x : ||x - center|| <= radius}."""

    is_indicator = True

    def __init__(self, center: np.ndarray, radius: float):
        if radius <= 0.0:
            raise ValueError(f"ball radius must be positive, got {radius}")
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)

    def _prox(self, z: np.ndarray, lam: float) -> np.ndarray:
        d = z - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return z.copy()
        return self.center + (self.radius / nd) * d

    def g_value(self, x: np.ndarray) -> float:
        slack = self.radius + FEAS_TOL * max(1.0, self.radius)
        return 0.0 if np.linalg.norm(x - self.center) <= slack else math.inf

    def feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        return np.linalg.norm(x - self.center) <= self.radius + tol * max(1.0, self.radius)


class SimplexProx(ProxOperator):
    """Indicator of the probability simplex {x >= 0, sum(x) = 1}."""

    is_indicator = True

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"simplex dimension must be >= 1, got {dim}")
        self.dim = int(dim)

    def _prox(self, z: np.ndarray, lam: float) -> np.ndarray:
        if z.size != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {z.size}")
        return _project_simplex(z)

    def g_value(self, x: np.ndarray) -> float:
        ok = x.min() >= -FEAS_TOL and abs(x.sum() - 1.0) <= FEAS_TOL * max(1.0, self.dim)
        return 0.0 if ok else math.inf

    def feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        return bool(x.min() >= -tol and abs(x.sum() - 1.0) <= tol * max(1.0, self.dim))


class ProductSimplexProx(ProxOperator):
    """Blockwise simplex indicator for product domains like Delta_n x Delta_m."""

    is_indicator = True

    def __init__(self, dims: list[int]):
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"all block dimensions must be >= 1, got {dims}")
        self.dims = [int(d) for d in dims]
        self.dim = sum(self.dims)

    def _blocks(self, x: np.ndarray):
        start = 0
        for d in self.dims:
            yield x[start : start + d]
            start += d

    def _prox(self, z: np.ndarray, lam: float) -> np.ndarray:
        if z.size != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {z.size}")
        return np.concatenate([_project_simplex(b) for b in self._blocks(z)])

    def g_value(self, x: np.ndarray) -> float:
        for b in self._blocks(x):
            if b.min() < -FEAS_TOL or abs(b.sum() - 1.0) > FEAS_TOL * max(1.0, b.size):
                return math.inf
        return 0.0

    def feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        return all(
            b.min() >= -tol and abs(b.sum() - 1.0) <= tol * max(1.0, b.size)
            for b in self._blocks(x)
        )


class BoxProx(ProxOperator):
    """Indicator of the box {lo <= x <= hi} (componentwise)."""

    is_indicator = True

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        if self.lo.shape != self.hi.shape:
            raise ValueError("box bounds must share a shape")
        if np.any(self.lo > self.hi):
            raise ValueError("box is infeasible: lo > hi somewhere")

    def _prox(self, z: np.ndarray, lam: float) -> np.ndarray:
        return np.clip(z, self.lo, self.hi)

    def g_value(self, x: np.ndarray) -> float:
        scale = np.maximum(1.0, np.abs(self.hi - self.lo))
        ok = np.all(x >= self.lo - FEAS_TOL * scale) and np.all(x <= self.hi + FEAS_TOL * scale)
        return 0.0 if ok else math.inf

    def feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        scale = np.maximum(1.0, np.abs(self.hi - self.lo))
        return bool(np.all(x >= self.lo - tol * scale) and np.all(x <= self.hi + tol * scale))


class L1Prox(ProxOperator):
    """g(x) = weight * ||x||_1; prox is componentwise soft thresholding."""

    is_indicator = False

    def __init__(self, weight: float):
        if weight < 0.0:
            raise ValueError(f"l1 weight must be nonnegative, got {weight}")
        self.weight = float(weight)

    def _prox(self, z: np.ndarray, lam: float) -> np.ndarray:
        t = lam * self.weight
        return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)

    def g_value(self, x: np.ndarray) -> float:
        return self.weight * float(np.abs(x).sum())


def prox(op: ProxOperator, z: np.ndarray, lam: float) -> np.ndarray:
    """Functional form of ``op.prox(z, lam)``."""
    return op.prox(z, lam)


def dual_averaging_argmin(
    op: ProxOperator, x0: np.ndarray, S: np.ndarray, gA: float, beta: float
) -> np.ndarray:
    """Minimize <S, y> + gA*g(y) + (beta/2)*||y - x0||^2.

    This is the regularized model minimized by both solvers; it reduces to
    ``prox(x0 - S/beta, gA/beta)``. ``gA`` is the accumulated weight on g
    (irrelevant for indicators, where the prox is a plain projection).
    """
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if gA < 0.0:
        raise ValueError(f"g weight must be nonnegative, got {gA}")
    z = x0 - S / beta
    if gA == 0.0 and not op.is_indicator:
        # No g contribution: unconstrained quadratic.
        return z
    return op.prox(z, gA / beta)
