import math

import numpy as np
import pytest

from common.errors import NumericalError, ValidationError
from lti.chain import (
    ChainPlant,
    GeneralController,
    closed_loop_polynomial,
    simulate_chain,
    steady_state_value,
    synthesize_controller,
)
from lti.disturbance import DisturbanceProfile, approximate_disturbance
from lti.polynomial import Polynomial, check_pole_set, is_hurwitz, routh_array
from sim.integrators import rk4_step


def random_stable_poles(rng, count, re_range=(-3.0, -0.8), max_imag=2.0):
    poles = []
    while len(poles) < count:
        re = rng.uniform(*re_range)
        if count - len(poles) >= 2 and rng.random() < 0.5:
            im = rng.uniform(0.1, max_imag)
            poles += [complex(re, im), complex(re, -im)]
        else:
            poles.append(complex(re, 0.0))
    return poles


# -- polynomials ------------------------------------------------------------


def test_from_roots_gives_ascending_coefficients():
    p = Polynomial.from_roots([-1, -2, -3])
    assert p.coeffs == pytest.approx((6.0, 11.0, 6.0, 1.0))
    assert p.degree == 3
    assert p.leading == 1.0


def test_leading_zeros_are_stripped():
    assert Polynomial((1.0, 2.0, 0.0, 0.0)).degree == 1


@pytest.mark.parametrize("method", ["eigen", "routh"])
@pytest.mark.parametrize(
    "coeffs, expected",
    [
        ((6.0, 11.0, 6.0, 1.0), True),
        ((1.0, 3.0, 2.0, 1.0), True),  # s^3 + 2s^2 + 3s + 1
        ((8.0, 2.0, 1.0, 1.0), False),  # s^3 + s^2 + 2s + 8
        ((5.0, 4.0, 3.0, 2.0, 1.0), False),
        ((-1.0, 1.0), False),
        ((2.0, 1.0), True),
        ((1.0, 0.0, 1.0), False),  # roots on the imaginary axis
    ],
)
def test_hurwitz_examples(coeffs, expected, method):
    assert is_hurwitz(Polynomial(coeffs), method=method) is expected


def test_negative_leading_coefficient_is_handled():
    p = Polynomial((-6.0, -11.0, -6.0, -1.0))
    assert is_hurwitz(p, "eigen")
    assert is_hurwitz(p, "routh")


def test_eigen_and_routh_agree_on_random_polynomials():
    rng = np.random.default_rng(7)
    for _ in range(200):
        degree = int(rng.integers(2, 7))
        roots = []
        while len(roots) < degree:
            re = rng.uniform(0.3, 3.0) * (1 if rng.random() < 0.3 else -1)
            if degree - len(roots) >= 2 and rng.random() < 0.5:
                im = rng.uniform(0.2, 2.0)
                roots += [complex(re, im), complex(re, -im)]
            else:
                roots.append(complex(re, 0.0))
        p = Polynomial.from_roots(roots)
        expected = all(r.real < 0 for r in roots)
        assert is_hurwitz(p, "eigen") is expected
        assert is_hurwitz(p, "routh") is expected


def test_routh_array_shape_and_first_column():
    table = routh_array(Polynomial((6.0, 11.0, 6.0, 1.0)))
    assert table.shape == (4, 2)
    # s^3: 1, 11 / s^2: 6, 6 / s^1: 10 / s^0: 6
    assert table[:, 0] == pytest.approx([1.0, 6.0, 10.0, 6.0])


def test_constant_polynomial_has_no_hurwitz_status():
    with pytest.raises(ValidationError):
        is_hurwitz(Polynomial((3.0,)))
    with pytest.raises(ValidationError):
        is_hurwitz(Polynomial((1.0, 1.0)), method="nyquist")


def test_check_pole_set():
    poles = check_pole_set([complex(-1, 2), complex(-1, -2), -3])
    assert poles.dtype == complex
    with pytest.raises(ValidationError):
        check_pole_set([complex(-1, 2), -3])
    with pytest.raises(ValidationError):
        check_pole_set([-1, 0.5])
    with pytest.raises(ValidationError):
        check_pole_set([-1, -2], count=3)
    with pytest.raises(ValidationError):
        check_pole_set([])


# -- disturbances -----------------------------------------------------------


def test_disturbance_profile_is_a_step_sum():
    profile = DisturbanceProfile.from_pairs([(1.0, 2.0), (3.0, -1.0)])
    assert profile.value_at(0.5) == 0.0
    assert profile.value_at(1.0) == 2.0
    assert profile.value_at(5.0) == 1.0
    assert profile.reconstruct([0.0, 2.0, 4.0]) == pytest.approx([0.0, 2.0, 1.0])
    assert profile.to_pairs() == [[1.0, 2.0], [3.0, -1.0]]


def test_disturbance_profile_rejects_unordered_steps():
    with pytest.raises(ValidationError):
        DisturbanceProfile.from_pairs([(2.0, 1.0), (1.0, 1.0)])
    with pytest.raises(ValidationError):
        DisturbanceProfile.from_pairs([(1.0, math.inf)])


def test_approximate_disturbance_increments():
    assert approximate_disturbance([(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]).to_pairs() == [[0.0, 1.0]]
    assert approximate_disturbance([(0.0, 1.0), (1.0, 3.0)]).to_pairs() == [[0.0, 1.0], [1.0, 2.0]]

    t = np.linspace(0.0, 1.0, 11)
    ramp = approximate_disturbance(list(zip(t, t)))
    assert ramp.steps[0] == (0.0, 0.0)
    assert len(ramp.steps) == 11
    assert ramp.amplitudes[1:] == pytest.approx(np.full(10, 0.1))


def test_approximate_disturbance_stays_within_tolerance():
    samples = [(0.0, 0.0), (1.0, 0.05), (2.0, 1.0), (3.0, 1.02), (4.0, 0.5)]
    profile = approximate_disturbance(samples, tolerance=0.1)
    assert profile.to_pairs() == [[0.0, 0.0], [2.0, 1.0], [4.0, -0.5]]
    values = np.array([v for _, v in samples])
    assert np.all(np.abs(profile.reconstruct([t for t, _ in samples]) - values) <= 0.1)


def test_approximate_disturbance_exact_with_zero_tolerance():
    t = np.linspace(0.0, 5.0, 51)
    values = np.sin(t)
    profile = approximate_disturbance(list(zip(t, values)))
    assert profile.reconstruct(t) == pytest.approx(values, abs=1e-12)
    assert approximate_disturbance([]).steps == ()
    with pytest.raises(ValidationError):
        approximate_disturbance([(1.0, 0.0), (0.5, 1.0)])


# -- chain plants -----------------------------------------------------------


def test_synthesis_matches_coefficients():
    plant = ChainPlant((1.0, 0.5))
    ctrl = synthesize_controller(plant, [-1, -2, -3])
    assert ctrl.b0 == pytest.approx(6.0)
    assert ctrl.b == pytest.approx((10.0, 5.5))
    assert closed_loop_polynomial(plant, ctrl).coeffs == pytest.approx((6.0, 11.0, 6.0, 1.0))


@pytest.mark.parametrize(
    "a, poles, b0, b",
    [
        ((0.0,), [-1, -2], 2.0, (3.0,)),
        ((3.0,), [-1, -2], 2.0, (0.0,)),
        ((0.0, 0.0), [-1, -1, -1], 1.0, (3.0, 3.0)),
    ],
)
def test_synthesis_small_chains(a, poles, b0, b):
    ctrl = synthesize_controller(ChainPlant(a), poles)
    assert ctrl.b0 == pytest.approx(b0)
    assert ctrl.b == pytest.approx(b, abs=1e-12)


def test_synthesis_rejects_bad_pole_sets():
    plant = ChainPlant((1.0, 0.5))
    with pytest.raises(ValidationError):
        synthesize_controller(plant, [-1, -2])
    with pytest.raises(ValidationError):
        synthesize_controller(plant, [-1, -2, 3])
    with pytest.raises(ValidationError):
        GeneralController(b0=-1.0, b=(1.0,))
    with pytest.raises(ValidationError):
        closed_loop_polynomial(plant, GeneralController(b0=1.0, b=(1.0,)))


def test_integral_action_rejects_step_disturbance():
    plant = ChainPlant((1.0, 0.5))
    ctrl = synthesize_controller(plant, [-1, -2, -3])
    dist = DisturbanceProfile.from_pairs([(2.0, 5.0)])
    trace = simulate_chain(plant, ctrl, 1.0, dist, duration=20.0, dt=1e-3)
    assert abs(trace.final_output - 1.0) < 1e-3
    assert steady_state_value(plant, ctrl, 5.0, 1.0) == 1.0


def test_without_integral_an_offset_remains():
    plant = ChainPlant((1.0, 0.5))
    ctrl = synthesize_controller(plant, [-1, -2, -3]).without_integral()
    dist = DisturbanceProfile.from_pairs([(0.0, 5.0)])
    trace = simulate_chain(plant, ctrl, 1.0, dist, duration=30.0, dt=0.01)
    expected = (10.0 * 1.0 + 5.0) / (1.0 + 10.0)
    assert steady_state_value(plant, ctrl, 5.0, 1.0) == pytest.approx(expected)
    assert trace.final_output == pytest.approx(expected, abs=1e-6)
    assert abs(trace.final_output - 1.0) > 0.3


def test_first_order_plant_converges():
    plant = ChainPlant((0.0,))
    ctrl = synthesize_controller(plant, [-1, -2])
    trace = simulate_chain(plant, ctrl, 2.0, DisturbanceProfile(), duration=20.0, dt=0.01)
    assert trace.final_output == pytest.approx(2.0, abs=1e-6)


def test_final_value_on_random_chain_plants():
    rng = np.random.default_rng(2024)
    for case in range(50):
        n = int(rng.integers(1, 4))
        plant = ChainPlant(tuple(rng.uniform(-2.0, 2.0, size=n)))
        ctrl = synthesize_controller(plant, random_stable_poles(rng, n + 1))
        times = np.sort(rng.uniform(0.0, 5.0, size=3))
        dist = DisturbanceProfile.from_pairs(zip(times, rng.uniform(-2.0, 2.0, size=3)))
        x_d = float(rng.uniform(-2.0, 2.0))
        trace = simulate_chain(plant, ctrl, x_d, dist, duration=30.0, dt=0.01)
        assert abs(trace.final_output - x_d) < 1e-3, f"case {case}: n={n}, a={plant.a}"


def test_saturated_controller_is_clipped():
    plant = ChainPlant((1.0, 0.5))
    ctrl = synthesize_controller(plant, [-1, -2, -3]).with_saturation(2.0)
    trace = simulate_chain(plant, ctrl, 5.0, DisturbanceProfile(), duration=2.0, dt=0.01)
    assert np.max(np.abs(trace.u)) <= 2.0 + 1e-12


def test_chain_trace_csv(tmp_path):
    plant = ChainPlant((1.0, 0.5))
    ctrl = synthesize_controller(plant, [-1, -2, -3])
    trace = simulate_chain(plant, ctrl, 1.0, DisturbanceProfile(), duration=1.0, dt=0.1)
    path = trace.to_csv(tmp_path / "chain.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,z_int,x,dx1,u,disturbance"
    assert len(lines) == 12


# -- integrator -------------------------------------------------------------


def test_rk4_single_step():
    x = rk4_step(lambda t, y: -y, np.array([1.0]), 0.1)
    assert x[0] == pytest.approx(0.9048375, abs=1e-7)


def test_rk4_is_fourth_order():
    errors = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        x = np.array([1.0])
        steps = int(round(1.0 / dt))
        for k in range(steps):
            x = rk4_step(lambda t, y: -y, x, dt, k * dt)
        errors.append(abs(x[0] - math.exp(-1.0)))
    assert 12.0 <= errors[0] / errors[1] <= 20.0
    assert 12.0 <= errors[1] / errors[2] <= 20.0


def test_rk4_reports_non_finite_states():
    with pytest.raises(NumericalError):
        rk4_step(lambda t, y: np.full_like(y, np.nan), np.zeros(2), 0.1)
    with pytest.raises(ValidationError):
        rk4_step(lambda t, y: y, np.zeros(2), 0.0)
