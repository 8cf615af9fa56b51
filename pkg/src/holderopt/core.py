"""Shared numerical plumbing: dense vectors, seeded RNG, oracle counters, trace rows.

Vectors are 1-D float64 numpy arrays throughout. All randomness flows through
:class:`SeededRng`, which is pinned to numpy's Philox (4x64) counter-based
generator so that traces are bit-comparable across runs and platforms.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "as_vector",
    "dot",
    "norm2",
    "axpy",
    "combine",
    "OracleCounters",
    "TraceRecord",
    "SeededRng",
    "Stopwatch",
]

_UINT64_MASK = (1 << 64) - 1


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a 1-D float64 array and check finiteness (and dimension if given)."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf")
    return v


def dot(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def norm2(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def axpy(alpha: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return alpha*x + y."""
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return alpha * x + y


def combine(tau: float, v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Convex combination tau*v + (1-tau)*y.

    With tau == 1.0 this returns v exactly (bitwise), which the solvers rely
    on for the anchored first iterate.
    """
    if tau == 1.0:
        return v.copy()
    return tau * v + (1.0 - tau) * y


@dataclass
class OracleCounters:
    """Monotone call counters, owned by one solver state (never global)."""

    f_evals: int = 0
    grad_evals: int = 0
    stoch_grad_evals: int = 0
    prox_evals: int = 0

    def snapshot(self) -> "OracleCounters":
        return replace(self)


@dataclass(frozen=True)
class TraceRecord:
    """One per-iteration telemetry row; the unit all tests operate on."""

    iter: int
    psi_y: float
    psi_best: float
    beta: float
    r_bar: float
    A: float
    tau: float
    ls_stage1: int
    ls_stage2: int
    counters: OracleCounters
    wall_ms: float


@dataclass(frozen=True)
class SeededRng:
    """Deterministic RNG handle.

    Pinned generator: numpy Philox (4x64 counter-based), keyed by
    ``(seed, stream_id)``. Sub-streams are spawned through
    ``SeedSequence(seed, stream_id, *ids)``, so replay with the same seed is
    exact regardless of call interleaving.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.seed & _UINT64_MASK, self.stream_id & _UINT64_MASK], dtype=np.uint64
        )
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, *ids: int) -> np.random.Generator:
        entropy = [self.seed & _UINT64_MASK, self.stream_id & _UINT64_MASK]
        entropy.extend(i & _UINT64_MASK for i in ids)
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


class Stopwatch:
    """Elapsed wall time in milliseconds since construction."""

    def __init__(self) -> None:
        self._t0 = time.perf_counter()

    def ms(self) -> float:
        return (time.perf_counter() - self._t0) * 1000.0
