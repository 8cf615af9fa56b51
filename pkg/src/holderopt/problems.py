"""Benchmark problems with deterministic and stochastic oracles.

Shipped families: a shifted softmax with known minimizer at the origin, a
matrix-game duality gap over a product of simplices, ball-constrained least
squares with two stochastic gradient modes, and lp-norm regression with
tunable smoothness. A small LIBSVM-format reader/writer covers dataset
ingestion; synthetic instances draw uniform [-1, 1] entries from a seeded
generator.
"""

from __future__ import annotations

import logging
import math
import re
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import SeededRng
from .prox import BallProx, IdentityProx, ProductSimplexProx, ProxOperator

__all__ = [
    "CompositeProblem",
    "GaussianNoise",
    "RowSampling",
    "make_softmax",
    "make_matrix_game",
    "make_least_squares_ball",
    "make_lp_regression",
    "load_libsvm",
    "dump_libsvm",
    "LibsvmFormatError",
    "estimate_holder",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompositeProblem:
    """Oracle bundle for psi = f + g.

    ``f_value``/``f_grad`` are the deterministic oracles; ``f_stoch_grad``
    takes an explicit generator so stochastic runs stay replayable. The
    optional minimizer/minimum are diagnostics for tests and gap reporting,
    never inputs to the solvers.
    """

    dim: int
    f_value: Callable[[np.ndarray], float]
    f_grad: Callable[[np.ndarray], np.ndarray]
    g: ProxOperator
    f_stoch_grad: Callable[[np.ndarray, np.random.Generator], np.ndarray] | None = None
    known_minimizer: np.ndarray | None = None
    known_min_value: float | None = None
    name: str = ""

    def g_value(self, x: np.ndarray) -> float:
        return self.g.g_value(x)

    def psi(self, x: np.ndarray) -> float:
        return self.f_value(x) + self.g_value(x)


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float


@dataclass(frozen=True)
class RowSampling:
    batch: int


def make_softmax(n: int, d: int, mu: float, seed: int) -> CompositeProblem:
    """Smoothed-max objective mu*log(sum_i exp((<a_i, x> - b_i)/mu)).

    Rows and offsets are uniform in [-1, 1]; the rows are then shifted by the
    gradient at the origin, which makes x = 0 the global minimizer with value
    mu*log(sum_i exp(-b_i/mu)).
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    gen = SeededRng(seed).generator()
    A_hat = gen.uniform(-1.0, 1.0, size=(n, d))
    b = gen.uniform(-1.0, 1.0, size=n)

    def weights(A: np.ndarray, x: np.ndarray) -> np.ndarray:
        z = (A @ x - b) / mu
        w = np.exp(z - z.max())
        return w / w.sum()

    grad0 = A_hat.T @ weights(A_hat, np.zeros(d))
    A = A_hat - grad0  # broadcast over rows

    def f_value(x: np.ndarray) -> float:
        z = (A @ x - b) / mu
        m = z.max()
        return mu * (m + math.log(np.exp(z - m).sum()))

    def f_grad(x: np.ndarray) -> np.ndarray:
        return A.T @ weights(A, x)

    return CompositeProblem(
        dim=d,
        f_value=f_value,
        f_grad=f_grad,
        g=IdentityProx(),
        known_minimizer=np.zeros(d),
        known_min_value=f_value(np.zeros(d)),
        name=f"softmax_n{n}_d{d}_mu{mu}_seed{seed}",
    )


def make_matrix_game(
    n: int, m: int, seed: int, payoff: np.ndarray | None = None
) -> CompositeProblem:
    """Primal-dual gap of the matrix game min over the product simplex.

    The joint variable z = (x, y) lives on Delta_n x Delta_m and
    f(z) = max_j (A^T x)_j - min_i (A y)_i, which is nonnegative on the
    domain and zero exactly at equilibria, so the known minimum is 0.
    Argmax/argmin ties break to the lowest index for trace determinism.
    An explicit payoff matrix overrides the seeded uniform [-1, 1] draw.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if payoff is None:
        gen = SeededRng(seed).generator()
        A = gen.uniform(-1.0, 1.0, size=(n, m))
    else:
        A = np.asarray(payoff, dtype=np.float64)
        if A.shape != (n, m):
            raise ValueError(f"payoff must have shape {(n, m)}, got {A.shape}")

    def f_value(z: np.ndarray) -> float:
        x, y = z[:n], z[n:]
        return float((A.T @ x).max() - (A @ y).min())

    def f_grad(z: np.ndarray) -> np.ndarray:
        x, y = z[:n], z[n:]
        j_star = int(np.argmax(A.T @ x))
        i_star = int(np.argmin(A @ y))
        return np.concatenate([A[:, j_star], -A[i_star, :]])

    return CompositeProblem(
        dim=n + m,
        f_value=f_value,
        f_grad=f_grad,
        g=ProductSimplexProx([n, m]),
        known_min_value=0.0,
        name=f"matrix_game_{n}x{m}_seed{seed}",
    )


def make_least_squares_ball(
    A: np.ndarray,
    b: np.ndarray,
    radius: float,
    noise_mode: GaussianNoise | RowSampling | None = None,
) -> CompositeProblem:
    """f(x) = 0.5*||Ax - b||^2 over the Euclidean ball of the given radius.

    Row sampling draws batch row indices uniformly with replacement and
    rescales by n/batch (unbiased); Gaussian mode adds sigma * standard
    normal noise to the exact gradient.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"inconsistent shapes: A {A.shape}, b {b.shape}")
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    n, d = A.shape

    def f_value(x: np.ndarray) -> float:
        r = A @ x - b
        return 0.5 * float(np.dot(r, r))

    def f_grad(x: np.ndarray) -> np.ndarray:
        return A.T @ (A @ x - b)

    f_stoch = None
    if isinstance(noise_mode, RowSampling):
        if noise_mode.batch < 1:
            raise ValueError("row-sampling batch must be >= 1")
        batch = noise_mode.batch

        def f_stoch(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            idx = gen.integers(0, n, size=batch)
            rows = A[idx]
            return (n / batch) * (rows.T @ (rows @ x - b[idx]))

    elif isinstance(noise_mode, GaussianNoise):
        if noise_mode.sigma < 0.0:
            raise ValueError("gaussian sigma must be >= 0")
        sigma = noise_mode.sigma

        def f_stoch(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            return f_grad(x) + sigma * gen.standard_normal(d)

    elif noise_mode is not None:
        raise ValueError(f"unknown noise mode {noise_mode!r}")

    return CompositeProblem(
        dim=d,
        f_value=f_value,
        f_grad=f_grad,
        f_stoch_grad=f_stoch,
        g=BallProx(np.zeros(d), radius),
        name=f"least_squares_ball_{n}x{d}_r{radius}",
    )


def make_lp_regression(
    A: np.ndarray, b: np.ndarray, p: float, radius: float | None = None
) -> CompositeProblem:
    """f(x) = ||Ax - b||_p with p in [1, 2]; smoothness degrades as p drops to 1.

    The subgradient is A^T w with w_i = sign(r_i) |r_i|^(p-1) / ||r||_p^(p-1)
    for residual r != 0. At an exactly zero residual the zero vector is
    returned: the point then minimizes the objective, so 0 is a valid
    subgradient there (measure-zero event, logged when hit).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"inconsistent shapes: A {A.shape}, b {b.shape}")
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    n, d = A.shape

    def f_value(x: np.ndarray) -> float:
        r = A @ x - b
        return float(np.sum(np.abs(r) ** p) ** (1.0 / p))

    def f_grad(x: np.ndarray) -> np.ndarray:
        r = A @ x - b
        if not np.any(r):
            logger.info("lp residual is exactly zero; returning the zero subgradient")
            return np.zeros(d)
        absr = np.abs(r)
        if p == 1.0:
            w = np.sign(r)
        else:
            norm_p = np.sum(absr ** p) ** (1.0 / p)
            w = np.sign(r) * (absr / norm_p) ** (p - 1.0)
        return A.T @ w

    g = BallProx(np.zeros(d), radius) if radius is not None else IdentityProx()
    return CompositeProblem(
        dim=d,
        f_value=f_value,
        f_grad=f_grad,
        g=g,
        name=f"lp_regression_{n}x{d}_p{p}",
    )


class LibsvmFormatError(ValueError):
    pass


_TOKEN = re.compile(r"\S+")


def load_libsvm(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a LIBSVM text file into a dense matrix and a label vector.

    Format: one sample per line, ``label index:value ...`` with 1-based
    indices; absent indices are zeros. Malformed content raises
    :class:`LibsvmFormatError` naming the line and column.
    """
    rows: list[list[tuple[int, float]]] = []
    labels: list[float] = []
    max_index = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = list(_TOKEN.finditer(line))
            if not tokens:
                continue
            label_tok = tokens[0]
            try:
                labels.append(float(label_tok.group()))
            except ValueError:
                raise LibsvmFormatError(
                    f"line {lineno}, column {label_tok.start() + 1}: "
                    f"invalid label {label_tok.group()!r}"
                ) from None
            entries: list[tuple[int, float]] = []
            for tok in tokens[1:]:
                col = tok.start() + 1
                text = tok.group()
                idx_str, sep, val_str = text.partition(":")
                if not sep:
                    raise LibsvmFormatError(
                        f"line {lineno}, column {col}: expected index:value, got {text!r}"
                    )
                try:
                    idx = int(idx_str)
                except ValueError:
                    raise LibsvmFormatError(
                        f"line {lineno}, column {col}: invalid feature index {idx_str!r}"
                    ) from None
                if idx < 1:
                    raise LibsvmFormatError(
                        f"line {lineno}, column {col}: feature index must be >= 1, got {idx}"
                    )
                try:
                    val = float(val_str)
                except ValueError:
                    raise LibsvmFormatError(
                        f"line {lineno}, column {col}: invalid feature value {val_str!r}"
                    ) from None
                entries.append((idx, val))
                max_index = max(max_index, idx)
            rows.append(entries)

    if not rows:
        warnings.warn(f"LIBSVM file {path!s} contains no samples", stacklevel=2)
        return np.zeros((0, 0)), np.zeros(0)

    A = np.zeros((len(rows), max_index))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            A[i, idx - 1] = val
    return A, np.asarray(labels)


def dump_libsvm(path, A: np.ndarray, b: np.ndarray) -> None:
    """Write a dense matrix in LIBSVM format (all entries explicit, full precision)."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"inconsistent shapes: A {A.shape}, b {b.shape}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(A.shape[0]):
            features = " ".join(f"{j + 1}:{float(A[i, j])!r}" for j in range(A.shape[1]))
            fh.write(f"{float(b[i])!r} {features}".rstrip() + "\n")


def estimate_holder(
    problem,
    center: np.ndarray,
    radius: float,
    nu: float,
    samples: int,
    rng: np.random.Generator | SeededRng,
) -> float:
    """Sampled lower bound on the local smoothness modulus at the given exponent.

    Draws points uniformly in the ball, evaluates the gradient once per point
    and returns max over pairs of ||grad(x) - grad(y)|| / ||x - y||^nu.
    Diagnostic only: tests use it to sanity-check rate expectations.
    """
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    center = np.asarray(center, dtype=np.float64)
    d = center.size
    points = []
    for _ in range(samples):
        u = gen.standard_normal(d)
        u /= np.linalg.norm(u)
        t = gen.random() ** (1.0 / d)
        points.append(center + radius * t * u)
    grads = [np.asarray(problem.f_grad(p), dtype=np.float64) for p in points]
    best = 0.0
    for i in range(samples):
        for j in range(i + 1, samples):
            dx = float(np.linalg.norm(points[i] - points[j]))
            if dx == 0.0:
                continue
            dg = float(np.linalg.norm(grads[i] - grads[j]))
            best = max(best, dg / dx ** nu)
    return best
