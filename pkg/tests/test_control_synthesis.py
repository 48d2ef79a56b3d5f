import math

import numpy as np
import pytest
from scipy import signal

from common.errors import NumericalError, ValidationError
from design.synthesis import (
    DominantSpec,
    GainVector,
    ackermann_gain,
    augmented_pair,
    charpoly,
    closed_loop_matrix,
    dominant_pole_design,
    match_poles,
    place_poles,
    pole_errors,
    poles_from_pairs,
    poles_to_pairs,
)
from lti.polynomial import Polynomial, is_hurwitz
from plant.linear import controllability_matrix
from plant.presets import BENCH_FAR_MULTIPLIERS, BENCH_GAINS, BENCH_POLES, BENCH_SIGMA, BENCH_ZETA


def spread_poles(rng, count=5, min_gap=1.0):
    """Random stable, conjugate-closed pole set with well separated members."""
    while True:
        poles = []
        while len(poles) < count:
            re = rng.uniform(-12.0, -1.0)
            if count - len(poles) >= 2 and rng.random() < 0.5:
                im = rng.uniform(0.5, 4.0)
                poles += [complex(re, im), complex(re, -im)]
            else:
                poles.append(complex(re, 0.0))
        values = np.array(poles)
        gaps = np.abs(values[:, None] - values[None, :]) + np.eye(count) * 1e9
        if gaps.min() >= min_gap:
            return values


def test_bench_poles_reproduce_bench_gains(identified):
    K = place_poles(identified, BENCH_POLES)
    assert K.as_array() == pytest.approx(np.array(BENCH_GAINS), rel=0.02)


def test_bench_gains_place_bench_poles(identified, bench_gains):
    cl = closed_loop_matrix(identified, bench_gains)
    got, want = match_poles(cl.poles, BENCH_POLES)
    dominant = np.abs(want.imag) > 0
    # Gains carry three decimals; the fast poles are the most sensitive to that rounding
    assert np.max(pole_errors(got[dominant], want[dominant])) < 1e-3
    assert np.max(pole_errors(got[~dominant], want[~dominant])) < 0.05
    assert cl.is_stable
    assert cl.lambda1 == pytest.approx(-2.0, abs=0.05)


def test_closed_loop_matrix_entries(identified, bench_gains):
    A_d = closed_loop_matrix(identified, bench_gains).A_d
    # theta'' row picks up -v1 * k0 on the integral state
    assert A_d[3, 0] == pytest.approx(271.12, rel=1e-4)
    assert A_d[0] == pytest.approx([0.0, 1.0, 0.0, 0.0, 0.0])
    assert not A_d.flags.writeable


def test_loop_without_integral_is_still_hurwitz(identified, bench_gains):
    A_d = closed_loop_matrix(identified, bench_gains.without_integral()).A_d
    assert A_d[:, 0] == pytest.approx(np.zeros(5))
    p = charpoly(A_d[1:, 1:])
    assert p.coeffs == pytest.approx((10296.1, 4114.5, 604.58, 41.0, 1.0), rel=1e-3)
    assert is_hurwitz(p, "eigen")
    assert is_hurwitz(p, "routh")


def test_round_trip_on_random_pole_sets(identified):
    rng = np.random.default_rng(42)
    for _ in range(100):
        poles = spread_poles(rng)
        K = place_poles(identified, poles)
        achieved = closed_loop_matrix(identified, K).poles
        assert np.max(pole_errors(achieved, poles)) < 1e-6


def test_characteristic_coefficients_are_affine_in_the_gains(identified):
    rng = np.random.default_rng(5)
    K1 = GainVector.from_array(rng.uniform(-10, 10, size=5))
    K2 = GainVector.from_array(rng.uniform(-10, 10, size=5))
    w = 0.3
    mixed = GainVector.from_array(w * K1.as_array() + (1 - w) * K2.as_array())
    c1 = np.array(closed_loop_matrix(identified, K1).charpoly().coeffs)
    c2 = np.array(closed_loop_matrix(identified, K2).charpoly().coeffs)
    cm = np.array(closed_loop_matrix(identified, mixed).charpoly().coeffs)
    scale = max(np.abs(c1).max(), np.abs(c2).max())
    assert np.allclose(cm, w * c1 + (1 - w) * c2, rtol=0.0, atol=1e-7 * scale)


def test_existing_poles_need_no_feedback():
    A = np.array([[0.0, 1.0], [-2.0, -3.0]])
    B = np.array([0.0, 1.0])
    K = ackermann_gain(A, B, [-1.0, -2.0])
    assert K == pytest.approx([0.0, 0.0], abs=1e-12)


def test_uncontrollable_pair_is_rejected():
    with pytest.raises(NumericalError):
        ackermann_gain(np.diag([-1.0, -2.0]), np.array([1.0, 0.0]), [-3.0, -4.0])


def test_repeated_poles_are_placed():
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 2.0, 3.0]])
    B = np.array([0.0, 0.0, 1.0])
    K = ackermann_gain(A, B, [-2.0, -2.0, -2.0])
    got = charpoly(A - np.outer(B, K))
    assert got.coeffs == pytest.approx(Polynomial.from_roots([-2, -2, -2]).coeffs)


@pytest.mark.parametrize(
    "poles",
    [
        [-1, -2, -3, -4],
        [-1, -2, -3, -4, 1],
        [complex(-1, 1), -2, -3, -4, -5],
    ],
)
def test_place_poles_validates_pole_sets(identified, poles):
    with pytest.raises(ValidationError):
        place_poles(identified, poles)


def test_augmented_pair_shape(identified):
    A_aug, B_aug = augmented_pair(identified)
    assert A_aug.shape == (5, 5)
    assert B_aug[:, 0] == pytest.approx([0.0, 0.0, 0.0, identified.v1, identified.v2])


def test_dominant_design_from_overshoot():
    spec = DominantSpec.from_overshoot(2.0, 2.0, BENCH_FAR_MULTIPLIERS)
    assert spec.zeta == pytest.approx(0.77970, abs=1e-5)
    assert spec.sigma == pytest.approx(2.0)
    assert spec.percent_overshoot == pytest.approx(2.0)
    poles = dominant_pole_design(spec)
    assert poles[0] == pytest.approx(complex(-2.0, 1.606), abs=1e-3)
    assert poles[1] == pytest.approx(complex(-2.0, -1.606), abs=1e-3)
    assert poles[2:].real == pytest.approx([-10.0, -12.0, -15.0])


def test_dominant_design_matches_bench_pole_set():
    poles = dominant_pole_design(DominantSpec.from_real_part(BENCH_ZETA, BENCH_SIGMA, BENCH_FAR_MULTIPLIERS))
    got, want = match_poles(poles, BENCH_POLES)
    assert np.abs(got - want).max() < 2e-3


def test_dominant_design_edge_cases():
    nearly_critical = dominant_pole_design(DominantSpec.from_real_part(1.0 - 1e-9, 2.0))
    assert abs(nearly_critical[0].imag) < 1e-3
    assert nearly_critical[0] == np.conj(nearly_critical[1])

    far = dominant_pole_design(DominantSpec.from_real_part(0.7, 2.0, (10.0, 10.5, 11.0)))
    assert far[2:].real == pytest.approx([-20.0, -21.0, -22.0])

    with pytest.raises(ValidationError):
        DominantSpec(zeta=1.0, omega_n=2.0)
    with pytest.raises(ValidationError):
        DominantSpec(zeta=0.5, omega_n=2.0, far_pole_multipliers=(0.5, 6.0, 7.5))
    with pytest.raises(ValidationError):
        DominantSpec.from_overshoot(120.0, 2.0)


def test_gain_vector():
    K = GainVector.from_array(BENCH_GAINS)
    assert K.without_integral().k0 == 0.0
    assert K.without_integral().k2 == K.k2
    with pytest.raises(ValidationError):
        GainVector.from_array([1.0, 2.0])
    with pytest.raises(ValidationError):
        GainVector(math.nan, 0, 0, 0, 0)


def test_pole_pairs():
    pairs = poles_to_pairs(BENCH_POLES)
    assert pairs[0] == [-2.0, 1.606]
    assert poles_from_pairs(pairs) == pytest.approx(np.array(BENCH_POLES))
    assert poles_from_pairs([-1, [-2, 0.5]]) == pytest.approx(np.array([-1, complex(-2, 0.5)]))
    with pytest.raises(ValidationError):
        poles_from_pairs([[-1, 0, 0]])


def test_ackermann_agrees_with_scipy_placement(identified):
    A_aug, B_aug = augmented_pair(identified)
    K = ackermann_gain(A_aug, B_aug, BENCH_POLES)
    reference = signal.place_poles(A_aug, B_aug, np.array(BENCH_POLES)).gain_matrix.ravel()
    assert K == pytest.approx(reference, rel=1e-5)


def test_controllability_matrix_layout():
    A = np.array([[0.0, 1.0], [-2.0, -3.0]])
    B = np.array([0.0, 1.0])
    assert controllability_matrix(A, B) == pytest.approx(np.array([[0.0, 1.0], [1.0, -3.0]]))
    with pytest.raises(ValidationError):
        controllability_matrix(np.zeros((2, 3)), np.zeros(2))
