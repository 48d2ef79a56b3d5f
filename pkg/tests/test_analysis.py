import math

import numpy as np
import pytest

from common.errors import NumericalError, ValidationError
from design.analysis import (
    boundedness_constants,
    cauchy_check,
    kappa_constants,
    modal_condition,
    verify_bounded,
)
from design.synthesis import ClosedLoop, GainVector, closed_loop_matrix
from sim.simulator import run_state_feedback
from sim.trace import StateTrace


def diagonal_loop(values=(-1.0, -2.0, -3.0, -4.0, -5.0)):
    A_d = np.diag(values)
    return ClosedLoop(A_d=A_d, gains=GainVector(0, 0, 0, 0, 0), poles=np.linalg.eigvals(A_d))


def test_kappa_constants(identified):
    kappa, kappa_abs = kappa_constants(identified)
    assert kappa == pytest.approx(2.887262, abs=1e-5)
    assert kappa_abs == pytest.approx(6.681, abs=1e-3)
    # independent summation order
    rows = identified.cubic
    assert kappa == pytest.approx(math.sqrt(sum(rows[0][::-1]) ** 2 + sum(rows[1][::-1]) ** 2))


def test_diagonal_loop_constants(identified):
    report = boundedness_constants(diagonal_loop(), identified, z0_norm=0.1)
    assert report.beta == pytest.approx(1.0)
    assert report.lambda1 == pytest.approx(-1.0)
    assert report.gamma_turn == pytest.approx(math.sqrt(1.0 / (3.0 * report.kappa)))
    assert report.z0_max == pytest.approx(2.0 * report.gamma_turn / 3.0)
    assert report.feasible
    gamma = report.gamma_star
    assert report.z0_norm <= gamma <= report.gamma_turn
    assert report.gamma_map(gamma) <= gamma
    assert gamma - report.gamma_map(gamma) <= 1e-9 * gamma


def test_bound_is_infeasible_beyond_z0_max(identified):
    report = boundedness_constants(diagonal_loop(), identified, z0_norm=0.3)
    assert report.z0_max < 0.3
    assert report.gamma_star is None
    assert not report.feasible


def test_zero_initial_state_gives_zero_gamma(identified):
    assert boundedness_constants(diagonal_loop(), identified).gamma_star == 0.0


def test_linear_only_bound(identified, bench_gains):
    r = identified.linear_only()
    report = boundedness_constants(closed_loop_matrix(r, bench_gains), r, z0_norm=0.2)
    assert report.kappa == 0.0
    assert report.gamma_star == pytest.approx(report.beta * 0.2)
    assert math.isinf(report.z0_max)


def test_sign_safe_bound_is_tighter(identified):
    signed = boundedness_constants(diagonal_loop(), identified, z0_norm=0.05)
    safe = boundedness_constants(diagonal_loop(), identified, z0_norm=0.05, sign_safe=True)
    assert signed.kappa_discrepancy
    assert safe.kappa_used == pytest.approx(safe.kappa_abs)
    assert safe.gamma_turn < signed.gamma_turn
    assert safe.gamma_star > signed.gamma_star


def test_bench_loop_constants(identified, bench_gains):
    report = boundedness_constants(closed_loop_matrix(identified, bench_gains), identified, z0_norm=1e-3)
    assert report.beta >= 1.0
    assert report.lambda1 == pytest.approx(-2.0, abs=0.05)
    assert report.kappa == pytest.approx(2.8873, abs=1e-4)
    assert report.as_dict()["feasible"] is report.feasible


def test_defective_and_unstable_loops_are_rejected(identified):
    jordan = np.diag([-1.0, -1.0, -2.0, -3.0, -4.0])
    jordan[0, 1] = 1.0
    with pytest.raises(NumericalError):
        modal_condition(jordan)
    with pytest.raises(ValidationError):
        boundedness_constants(diagonal_loop((1.0, -2.0, -3.0, -4.0, -5.0)), identified)
    with pytest.raises(ValidationError):
        boundedness_constants(diagonal_loop(), identified, z0_norm=-1.0)


def test_random_starts_inside_z0_max_stay_bounded(identified, bench_gains):
    cl = closed_loop_matrix(identified, bench_gains)
    z0_max = boundedness_constants(cl, identified).z0_max
    rng = np.random.default_rng(8)
    for _ in range(100):
        direction = rng.normal(size=5)
        Z0 = direction / np.linalg.norm(direction) * rng.uniform(0.0, 0.999) * z0_max
        report = boundedness_constants(cl, identified, z0_norm=float(np.linalg.norm(Z0)))
        trace = run_state_feedback(identified, bench_gains, Z0, duration=2.0, dt=1e-3)
        check = verify_bounded(trace, report.gamma_star)
        assert check.bounded, f"|Z0|={np.linalg.norm(Z0):.3g} left gamma*={report.gamma_star:.3g}"


def test_unstable_feedback_breaks_the_bound(identified):
    Z0 = np.array([0.0, 0.0, 0.01, 0.0, 0.0])
    trace = run_state_feedback(
        identified, GainVector(0, 0, 0, 0, 0), Z0, duration=5.0, dt=1e-3, include_cubic=False
    )
    assert trace.metadata["diverged"]
    check = verify_bounded(trace, 1.0)
    assert not check.bounded
    assert check.violation_time > 0.0


def exponential_trace(duration=10.0, dt=0.01):
    t = np.arange(int(round(duration / dt)) + 1) * dt
    Z = np.zeros((t.size, 5))
    Z[:, 0] = np.exp(-t)
    return StateTrace(t, Z)


def test_cauchy_check_matches_closed_form():
    table = cauchy_check(exponential_trace(), window=1.0)
    assert table.window == pytest.approx(1.0)
    assert table.T[-1] == pytest.approx(9.0)
    assert table.d == pytest.approx(np.exp(-table.T) * (1.0 - math.exp(-1.0)), rel=1e-9)
    assert table.is_nonincreasing()
    assert len(table.rows(every=1.0)) == 10


def test_cauchy_check_preconditions():
    with pytest.raises(ValidationError):
        cauchy_check(exponential_trace(duration=2.0), window=1.0)
    t = np.array([0.0, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    with pytest.raises(ValidationError):
        cauchy_check(StateTrace(t, np.zeros((t.size, 5))), window=0.2)
