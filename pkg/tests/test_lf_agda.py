import numpy as np
import pytest

from conftest import bisect_balance_root, same_record
from holderopt.core import SeededRng
from holderopt.lf_agda import balance_closed_form, init_lf_state, lf_step, run_lf_agda
from holderopt.problems import GaussianNoise, make_least_squares_ball


def ball_lsq(seed=11, n=30, d=12, radius=5.0, sigma=0.0):
    gen = SeededRng(seed, stream_id=1).generator()
    A = gen.uniform(-1.0, 1.0, (n, d))
    b = gen.uniform(-1.0, 1.0, n)
    return make_least_squares_ball(A, b, radius, GaussianNoise(sigma))


# ---------------------------------------------------------------------------
# balance_closed_form
# ---------------------------------------------------------------------------

def test_balance_no_update_when_bracket_nonpositive():
    # inner below beta*dist2/(64 tau^2 A) leaves beta unchanged.
    assert balance_closed_form(2.0, 0.5, 3.0, 1.0, inner=0.0, dist2=4.0) == 2.0
    assert balance_closed_form(2.0, 0.5, 3.0, 1.0, inner=-5.0, dist2=4.0) == 2.0


def test_balance_generic_root_instance():
    # Generic root equation (b - 1)*1 = [5 - b*1]_+ has root 3 (both sides 2).
    # Mapped parameters: tau=1, A=1 makes r = r_bar^2/2 = 1 and d = dist2/64 = 1.
    beta_next = balance_closed_form(
        1.0, 1.0, 1.0, np.sqrt(2.0), inner=5.0, dist2=64.0
    )
    assert beta_next == 3.0
    lhs = (beta_next - 1.0) * 2.0 / 2.0
    rhs = max(0.0, 5.0 - beta_next * 64.0 / 64.0)
    assert lhs == rhs == 2.0


def test_balance_matches_bisection_oracle():
    gen = SeededRng(21).generator()
    for _ in range(500):
        beta = float(gen.uniform(0.0, 5.0))
        tau = float(gen.uniform(0.01, 1.0))
        A = float(gen.uniform(0.1, 50.0))
        r_bar = float(gen.uniform(0.05, 10.0))
        inner = float(gen.uniform(-2.0, 5.0))
        dist2 = float(gen.uniform(0.0, 9.0))
        closed = balance_closed_form(beta, tau, A, r_bar, inner, dist2)
        root = bisect_balance_root(beta, tau, A, r_bar, inner, dist2)
        assert closed == pytest.approx(root, rel=1e-8, abs=1e-10)
        # Residual of the balance equation at the closed form.
        lhs = (closed - beta) * r_bar**2 / (2.0 * A)
        rhs = max(0.0, inner - closed * dist2 / (64.0 * tau**2 * A))
        scale = max(1.0, abs(lhs), abs(rhs), abs(inner))
        assert abs(lhs - rhs) <= 1e-9 * scale


def test_balance_monotone_in_inner():
    gen = SeededRng(22).generator()
    for _ in range(200):
        beta = float(gen.uniform(0.0, 3.0))
        tau = float(gen.uniform(0.05, 1.0))
        A = float(gen.uniform(0.2, 10.0))
        r_bar = float(gen.uniform(0.1, 4.0))
        dist2 = float(gen.uniform(0.0, 4.0))
        lo = float(gen.uniform(-1.0, 2.0))
        hi = lo + float(gen.uniform(0.0, 2.0))
        assert balance_closed_form(beta, tau, A, r_bar, hi, dist2) >= balance_closed_form(
            beta, tau, A, r_bar, lo, dist2
        )


def test_balance_validation():
    with pytest.raises(ValueError):
        balance_closed_form(1.0, 0.5, 0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        balance_closed_form(1.0, 0.5, 1.0, -1.0, 1.0, 1.0)


def test_balance_output_never_decreases():
    gen = SeededRng(23).generator()
    for _ in range(200):
        beta = float(gen.uniform(0.0, 3.0))
        out = balance_closed_form(
            beta,
            float(gen.uniform(0.05, 1.0)),
            float(gen.uniform(0.2, 10.0)),
            float(gen.uniform(0.1, 4.0)),
            float(gen.uniform(-3.0, 3.0)),
            float(gen.uniform(0.0, 4.0)),
        )
        assert out >= beta


# ---------------------------------------------------------------------------
# lf_step / run_lf_agda
# ---------------------------------------------------------------------------

def test_first_step_is_anchored():
    problem = ball_lsq()
    state = init_lf_state(problem, np.zeros(12), 0.01, SeededRng(0))
    record = lf_step(state, problem)
    assert record.tau == 1.0
    np.testing.assert_array_equal(state.x, np.zeros(12))
    assert record.iter == 1
    assert state.counters.stoch_grad_evals == 2


def test_noiseless_runs_are_seed_independent():
    problem = ball_lsq(sigma=0.0)
    first = run_lf_agda(problem, np.zeros(12), r_bar=0.01, seed=1, max_iters=40)
    second = run_lf_agda(problem, np.zeros(12), r_bar=0.01, seed=999, max_iters=40)
    for a, b in zip(first.records, second.records):
        assert same_record(a, b)


def test_same_seed_identical_traces():
    problem = ball_lsq(sigma=0.3)
    first = run_lf_agda(problem, np.zeros(12), r_bar=0.01, seed=7, max_iters=40)
    second = run_lf_agda(problem, np.zeros(12), r_bar=0.01, seed=7, max_iters=40)
    for a, b in zip(first.records, second.records):
        assert same_record(a, b)
    assert first.kstar == second.kstar


def test_monotonicity_and_draw_budget():
    problem = ball_lsq(sigma=0.2, radius=5.0)
    K = 60
    result = run_lf_agda(problem, np.zeros(12), r_bar=0.01, seed=3, max_iters=K)
    records = result.records
    assert records[-1].counters.stoch_grad_evals == 2 * K
    for earlier, later in zip(records, records[1:]):
        assert later.beta >= earlier.beta
        assert later.r_bar >= earlier.r_bar
        assert later.psi_best <= earlier.psi_best
    # dom g is a ball of radius 5 around 0 and x0 = 0 is inside, so the
    # distance estimate can never exceed the diameter.
    assert records[-1].r_bar <= 2 * 5.0 + 1e-9


def test_single_iteration_run():
    problem = ball_lsq()
    result = run_lf_agda(problem, np.zeros(12), r_bar=0.01, seed=5, max_iters=1)
    assert len(result.records) == 1
    assert result.kstar == 1
    assert result.kstar_sqrt == 1
    assert result.psi_kstar == result.records[0].psi_y


def test_noiseless_progress_after_fifty_iterations():
    problem = ball_lsq(seed=11, n=50, d=20, radius=10.0, sigma=0.0)
    x0 = np.zeros(20)
    psi0 = problem.psi(x0)
    result = run_lf_agda(problem, x0, r_bar=0.01, seed=5, max_iters=50)
    assert result.records[-1].psi_y < psi0


def test_kstar_indices_within_horizon():
    problem = ball_lsq(sigma=0.1)
    result = run_lf_agda(problem, np.zeros(12), r_bar=0.01, seed=2, max_iters=30)
    assert 1 <= result.kstar <= 30
    assert 1 <= result.kstar_sqrt <= 30
    assert result.psi_kstar == result.records[result.kstar - 1].psi_y


def test_nonfinite_stochastic_gradient_rejected():
    problem = ball_lsq()
    bad = problem.__class__(
        **{**problem.__dict__, "f_stoch_grad": lambda x, gen: np.full(12, np.nan)}
    )
    state = init_lf_state(bad, np.zeros(12), 0.01, SeededRng(0))
    with pytest.raises(ValueError, match="not finite"):
        lf_step(state, bad)


def test_infeasible_start_rejected():
    problem = ball_lsq(radius=1.0)
    with pytest.raises(ValueError, match="outside the domain"):
        init_lf_state(problem, np.full(12, 3.0), 0.01, SeededRng(0))


def test_run_requires_at_least_one_iteration():
    problem = ball_lsq()
    with pytest.raises(ValueError):
        run_lf_agda(problem, np.zeros(12), r_bar=0.01, seed=0, max_iters=0)


def test_early_stop_keeps_output_indices_consistent():
    problem = ball_lsq(sigma=0.0)
    psi0 = problem.psi(np.zeros(12))
    result = run_lf_agda(
        problem, np.zeros(12), r_bar=0.01, seed=0, max_iters=10_000,
        target_value=0.0, tol=0.9 * psi0,
    )
    assert len(result.records) < 10_000
    assert 1 <= result.kstar <= len(result.records)
    assert 1 <= result.kstar_sqrt <= len(result.records)


def test_deterministic_fallback_oracle():
    # Problems without a stochastic oracle run with their exact gradient.
    gen = SeededRng(31).generator()
    A = gen.uniform(-1, 1, (20, 8))
    b = gen.uniform(-1, 1, 20)
    problem = make_least_squares_ball(A, b, 4.0, noise_mode=None)
    assert problem.f_stoch_grad is None
    result = run_lf_agda(problem, np.zeros(8), r_bar=0.01, seed=0, max_iters=30)
    assert result.records[-1].counters.stoch_grad_evals == 60
