"""
State-feedback design for the integral-augmented pendulum loop.

Feedback convention: V_m = -(k0 x0 + k1 x1 + k2 x2 + k3 x3 + k4 x4), so the
closed-loop matrix is A_d = A_aug - B_aug K.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields, replace
from typing import Iterable, Sequence

import control as ctrl
import numpy as np
from scipy.optimize import linear_sum_assignment

from common.errors import NumericalError, ValidationError
from lti.polynomial import Polynomial, check_pole_set
from plant.linear import augment_integral, controllability_matrix, controllability_rank, state_space
from plant.models import ReducedDynamics

logger = logging.getLogger(__name__)

ROUND_TRIP_RTOL = 1e-6
ILL_CONDITIONED = 1e10


@dataclass(frozen=True)
class GainVector:
    """Feedback gains in volts per unit of (int theta, theta, alpha, theta', alpha')."""

    k0: float
    k1: float
    k2: float
    k3: float
    k4: float

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise ValidationError(f"Gain {f.name} must be finite, got {value}")
            object.__setattr__(self, f.name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.k0, self.k1, self.k2, self.k3, self.k4])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "GainVector":
        values = [float(v) for v in np.real_if_close(np.asarray(values)).ravel()]
        if len(values) != 5:
            raise ValidationError(f"A gain vector has 5 entries, got {len(values)}")
        return cls(*values)

    def without_integral(self) -> "GainVector":
        return replace(self, k0=0.0)


@dataclass(frozen=True, eq=False)
class ClosedLoop:
    A_d: np.ndarray
    gains: GainVector
    poles: np.ndarray

    @property
    def lambda1(self) -> float:
        """Largest real part among the closed-loop eigenvalues."""
        return float(np.max(self.poles.real))

    @property
    def is_stable(self) -> bool:
        return self.lambda1 < 0

    def charpoly(self) -> Polynomial:
        return charpoly(self.A_d)


@dataclass(frozen=True)
class DominantSpec:
    """
    Dominant second-order pair plus three faster real poles.

    The dominant pair sits at -zeta*omega_n +/- j*omega_n*sqrt(1 - zeta^2);
    the far poles at multiplier * (-zeta*omega_n).
    """

    zeta: float
    omega_n: float
    far_pole_multipliers: tuple[float, float, float] = (5.0, 6.0, 7.5)

    def __post_init__(self):
        multipliers = tuple(float(m) for m in self.far_pole_multipliers)
        object.__setattr__(self, "far_pole_multipliers", multipliers)
        if not 0 < self.zeta < 1:
            raise ValidationError(f"Damping ratio must lie in (0, 1), got {self.zeta}")
        if not self.omega_n > 0:
            raise ValidationError(f"Natural frequency must be positive, got {self.omega_n}")
        if len(multipliers) != 3:
            raise ValidationError(f"Exactly three far-pole multipliers are needed, got {len(multipliers)}")
        if not all(m > 1 for m in multipliers):
            raise ValidationError(f"Far-pole multipliers must exceed 1, got {multipliers}")

    @property
    def sigma(self) -> float:
        return self.zeta * self.omega_n

    @property
    def percent_overshoot(self) -> float:
        return 100.0 * math.exp(-math.pi * self.zeta / math.sqrt(1.0 - self.zeta ** 2))

    @classmethod
    def from_real_part(
        cls, zeta: float, sigma: float, far_pole_multipliers: Sequence[float] = (5.0, 6.0, 7.5)
    ) -> "DominantSpec":
        if not sigma > 0:
            raise ValidationError(f"Dominant real part magnitude must be positive, got {sigma}")
        if not 0 < zeta < 1:
            raise ValidationError(f"Damping ratio must lie in (0, 1), got {zeta}")
        return cls(zeta=zeta, omega_n=sigma / zeta, far_pole_multipliers=tuple(far_pole_multipliers))

    @classmethod
    def from_overshoot(
        cls,
        percent_overshoot: float,
        settling_time: float,
        far_pole_multipliers: Sequence[float] = (5.0, 6.0, 7.5),
    ) -> "DominantSpec":
        """Damping from percent overshoot, real part from the 2 % settling time (4 / T_s)."""
        if not 0 < percent_overshoot < 100:
            raise ValidationError(f"Percent overshoot must lie in (0, 100), got {percent_overshoot}")
        if not settling_time > 0:
            raise ValidationError(f"Settling time must be positive, got {settling_time}")
        log_po = math.log(percent_overshoot / 100.0)
        zeta = -log_po / math.sqrt(math.pi ** 2 + log_po ** 2)
        return cls.from_real_part(zeta, 4.0 / settling_time, far_pole_multipliers)


def charpoly(A: np.ndarray) -> Polynomial:
    """Characteristic polynomial det(sI - A)."""
    return Polynomial.from_descending(np.real(np.poly(np.asarray(A, dtype=float))))


def augmented_pair(r: ReducedDynamics) -> tuple[np.ndarray, np.ndarray]:
    A1, U1 = state_space(r)
    return augment_integral(A1, U1, ("theta",))


def closed_loop_matrix(r: ReducedDynamics, K: GainVector) -> ClosedLoop:
    A_aug, B_aug = augmented_pair(r)
    A_d = A_aug - B_aug @ K.as_array()[np.newaxis, :]
    A_d.setflags(write=False)
    poles = np.linalg.eigvals(A_d)
    return ClosedLoop(A_d=A_d, gains=K, poles=poles)


def match_poles(actual: Iterable[complex], target: Iterable[complex]) -> tuple[np.ndarray, np.ndarray]:
    """Pair two pole sets by minimum total distance; returns (actual, target) reordered."""
    actual = np.asarray(list(actual), dtype=complex)
    target = np.asarray(list(target), dtype=complex)
    if actual.size != target.size:
        raise ValidationError(f"Pole sets differ in size: {actual.size} vs {target.size}")
    cost = np.abs(actual[:, np.newaxis] - target[np.newaxis, :])
    rows, cols = linear_sum_assignment(cost)
    return actual[rows], target[cols]


def pole_errors(actual: Iterable[complex], target: Iterable[complex]) -> np.ndarray:
    """Relative distance of each matched pole, scaled by max(1, |target|)."""
    a, t = match_poles(actual, target)
    return np.abs(a - t) / np.maximum(1.0, np.abs(t))


def _max_multiplicity(poles: np.ndarray, rtol: float) -> int:
    scale = max(1.0, float(np.max(np.abs(poles))))
    return max(int(np.sum(np.abs(poles - p) <= rtol * scale)) for p in poles)


def ackermann_gain(A: np.ndarray, B: np.ndarray, poles: Iterable[complex]) -> np.ndarray:
    """
    Single-input pole placement by Ackermann's formula (python-control `acker`).

    The result is verified by a round trip: eigenvalues of A - B K must match
    the requested poles to ROUND_TRIP_RTOL (relative), and for clustered
    poles the characteristic coefficients must match as well.

    Raises:
        NumericalError: uncontrollable pair or failed round trip.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, 1)
    poles = check_pole_set(poles, count=n)

    rank = controllability_rank(A, B)
    if rank < n:
        raise NumericalError(f"Pair is not controllable: rank {rank} < {n}")
    ctrb = controllability_matrix(A, B)
    cond = float(np.linalg.cond(ctrb))
    if cond > ILL_CONDITIONED:
        logger.warning("Ill-conditioned placement: controllability condition estimate %.3e", cond)
    else:
        logger.debug("Controllability condition estimate %.3e", cond)

    target = Polynomial.from_roots(poles)
    try:
        K = np.asarray(ctrl.acker(A, B, poles), dtype=float).ravel()
    except ValueError as e:
        raise NumericalError(f"Ackermann placement failed: {e}") from e

    A_cl = A - B @ K[np.newaxis, :]
    achieved = np.linalg.eigvals(A_cl)
    multiplicity = _max_multiplicity(poles, 1e-6)
    tol = max(ROUND_TRIP_RTOL, 10.0 * np.finfo(float).eps ** (1.0 / multiplicity))
    worst = float(np.max(pole_errors(achieved, poles)))
    if worst > tol:
        raise NumericalError(
            f"Pole placement round trip failed: worst relative error {worst:.3e} "
            f"(condition estimate {cond:.3e})"
        )
    if multiplicity > 1:
        got = np.asarray(charpoly(A_cl).coeffs)
        want = np.asarray(target.coeffs)
        scale = max(1.0, float(np.max(np.abs(want))))
        if np.max(np.abs(got - want)) > ROUND_TRIP_RTOL * scale:
            raise NumericalError("Pole placement round trip failed on characteristic coefficients")
    return K


def place_poles(r: ReducedDynamics, poles: Iterable[complex]) -> GainVector:
    """
    Gains placing the eigenvalues of A_d at `poles` (5, conjugate-closed, stable).

    Raises:
        ValidationError: invalid pole set.
        NumericalError: augmented pair not controllable or round trip failed.
    """
    poles = check_pole_set(poles, count=5)
    A_aug, B_aug = augmented_pair(r)
    K = GainVector.from_array(ackermann_gain(A_aug, B_aug, poles))
    logger.info("Placed poles %s -> K=%s", _fmt_poles(poles), np.round(K.as_array(), 4).tolist())
    return K


def dominant_pole_design(spec: DominantSpec) -> np.ndarray:
    """Dominant pair first, far poles after, as a complex array."""
    sigma = spec.sigma
    omega_d = spec.omega_n * math.sqrt(1.0 - spec.zeta ** 2)
    poles = [complex(-sigma, omega_d), complex(-sigma, -omega_d)]
    poles += [complex(-m * sigma, 0.0) for m in spec.far_pole_multipliers]
    return np.array(poles)


def poles_to_pairs(poles: Iterable[complex]) -> list[list[float]]:
    return [[float(np.real(p)), float(np.imag(p))] for p in poles]


def poles_from_pairs(pairs: Iterable) -> np.ndarray:
    """Accepts [re, im] pairs or plain real numbers."""
    values = []
    for item in pairs:
        if isinstance(item, (list, tuple)):
            if len(item) != 2:
                raise ValidationError(f"A complex pole is written as [re, im], got {item}")
            values.append(complex(float(item[0]), float(item[1])))
        else:
            values.append(complex(float(item), 0.0))
    return np.array(values, dtype=complex)


def _fmt_poles(poles: Iterable[complex]) -> str:
    parts = []
    for p in poles:
        p = complex(p)
        parts.append(f"{p.real:.4g}" if p.imag == 0 else f"{p.real:.4g}{p.imag:+.4g}j")
    return "{" + ", ".join(parts) + "}"
