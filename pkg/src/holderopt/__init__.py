"""Parameter-free distance-adaptive first-order solvers and benchmark harness."""

from .agda import run_agda
from .core import OracleCounters, SeededRng, TraceRecord
from .lf_agda import balance_closed_form, run_lf_agda
from .problems import (
    CompositeProblem,
    make_least_squares_ball,
    make_lp_regression,
    make_matrix_game,
    make_softmax,
)

__all__ = [
    "run_agda",
    "run_lf_agda",
    "balance_closed_form",
    "OracleCounters",
    "SeededRng",
    "TraceRecord",
    "CompositeProblem",
    "make_softmax",
    "make_matrix_game",
    "make_least_squares_ball",
    "make_lp_regression",
]

__version__ = "0.1.0"
