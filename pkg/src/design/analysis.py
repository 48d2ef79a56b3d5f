"""
Norm bounds and convergence checks for the closed loop.

The bound works on Z' = A_d Z + N_d(Z) with A_d = M diag(lambda) M^-1:

    |Z(t)| <= beta |Z(0)| + beta kappa gamma^3 / |lambda1|   while |Z| <= gamma

beta = cond(M) with unit-norm eigenvector columns, lambda1 the largest real
part, kappa bounds the cubic terms. gamma* is the smallest self-consistent
gamma for a given |Z(0)|.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Protocol

import numpy as np
from scipy.linalg import eig
from scipy.optimize import brentq

from common.errors import ValidationError, NumericalError
from design.synthesis import ClosedLoop
from plant.dynamics import total_energy
from plant.models import FullState, PhysicalParams, ReducedDynamics

logger = logging.getLogger(__name__)

# Eigenvector matrices with a larger condition number count as defective
DEFECTIVE_COND = 1e8
ENERGY_FLOOR = 1e-9
NORMALIZATION = "unit-norm eigenvector columns"


class StateSeries(Protocol):
    t: np.ndarray

    def state_matrix(self) -> np.ndarray: ...


@dataclass(frozen=True)
class BoundednessReport:
    beta: float
    kappa: float
    kappa_abs: float
    lambda1: float
    z0_norm: float
    gamma_turn: float
    gamma_star: Optional[float]
    z0_max: float
    sign_safe: bool = False
    normalization: str = NORMALIZATION

    @property
    def feasible(self) -> bool:
        return self.gamma_star is not None

    @property
    def kappa_discrepancy(self) -> bool:
        """True when the signed kappa underestimates the sign-safe bound."""
        return self.kappa_abs > self.kappa * (1.0 + 1e-12)

    @property
    def kappa_used(self) -> float:
        return self.kappa_abs if self.sign_safe else self.kappa

    def gamma_map(self, gamma: float) -> float:
        """beta |Z0| + beta kappa gamma^3 / |lambda1|."""
        return self.beta * self.z0_norm + self.beta * self.kappa_used * gamma ** 3 / abs(self.lambda1)

    def as_dict(self) -> dict:
        values = asdict(self)
        values["feasible"] = self.feasible
        values["kappa_discrepancy"] = self.kappa_discrepancy
        return values


def kappa_constants(r: ReducedDynamics) -> tuple[float, float]:
    """(kappa from signed sums, sign-safe kappa from absolute sums)."""
    signed = math.hypot(r.a1 + r.a2 + r.a3, r.a4 + r.a5 + r.a6)
    absolute = math.hypot(abs(r.a1) + abs(r.a2) + abs(r.a3), abs(r.a4) + abs(r.a5) + abs(r.a6))
    return signed, absolute


def modal_condition(A: np.ndarray) -> tuple[float, np.ndarray]:
    """
    beta = |M| |M^-1| (spectral norms) for the unit-column eigenvector matrix.

    Raises:
        NumericalError: repeated eigenvalues or a near-defective matrix.
    """
    w, M = eig(A)
    M = M / np.linalg.norm(M, axis=0)
    scale = max(1.0, float(np.max(np.abs(w))))
    gaps = np.abs(w[:, None] - w[None, :]) + np.eye(len(w)) * scale
    if np.min(gaps) <= 1e-9 * scale:
        raise NumericalError("Closed-loop eigenvalues are not distinct")
    beta = float(np.linalg.cond(M, 2))
    if not math.isfinite(beta) or beta > DEFECTIVE_COND:
        raise NumericalError(f"Closed-loop matrix is near-defective (eigenvector condition {beta:.3e})")
    return max(beta, 1.0), w


def boundedness_constants(
    cl: ClosedLoop, r: ReducedDynamics, z0_norm: float = 0.0, sign_safe: bool = False
) -> BoundednessReport:
    """
    beta, kappa, lambda1, gamma* and the largest admissible |Z(0)|.

    gamma* solves gamma = beta |Z0| + beta kappa gamma^3 / |lambda1| on
    (0, gamma_turn], gamma_turn = sqrt(|lambda1| / (3 beta kappa)) being where
    the map's slope reaches 1; it exists iff |Z0| <= 2 gamma_turn / (3 beta).
    With kappa = 0 the bound is linear: gamma* = beta |Z0| and any |Z0| is admissible.

    Raises:
        ValidationError: the closed loop is not Hurwitz or z0_norm is negative.
        NumericalError: A_d is defective.
    """
    if not (math.isfinite(z0_norm) and z0_norm >= 0):
        raise ValidationError(f"|Z(0)| must be a non-negative number, got {z0_norm}")
    beta, w = modal_condition(cl.A_d)
    lambda1 = float(np.max(w.real))
    if not lambda1 < 0:
        raise ValidationError(f"Closed loop is not Hurwitz (largest real part {lambda1:.4g})")

    kappa, kappa_abs = kappa_constants(r)
    kappa_used = kappa_abs if sign_safe else kappa
    if kappa_abs > kappa * (1.0 + 1e-12):
        logger.warning(
            "Signed kappa %.4g is below the sign-safe bound %.4g; reporting %s",
            kappa, kappa_abs, "the sign-safe value" if sign_safe else "the signed value",
        )

    if kappa_used == 0.0:
        return BoundednessReport(
            beta=beta, kappa=kappa, kappa_abs=kappa_abs, lambda1=lambda1, z0_norm=z0_norm,
            gamma_turn=math.inf, gamma_star=beta * z0_norm, z0_max=math.inf, sign_safe=sign_safe,
        )

    decay = abs(lambda1)
    gamma_turn = math.sqrt(decay / (3.0 * beta * kappa_used))
    z0_max = 2.0 * gamma_turn / (3.0 * beta)

    def slack(gamma: float) -> float:
        return gamma - beta * z0_norm - beta * kappa_used * gamma ** 3 / decay

    gamma_star: Optional[float]
    if z0_norm == 0.0:
        gamma_star = 0.0
    elif slack(gamma_turn) < 0.0:
        gamma_star = None
        logger.info("Bound infeasible for |Z0|=%.4g (admissible up to %.4g)", z0_norm, z0_max)
    else:
        gamma_star = brentq(slack, 0.0, gamma_turn, xtol=1e-15, rtol=8.9e-16)
        step = max(1e-15, 1e-13 * gamma_star)
        for _ in range(64):
            if slack(gamma_star) >= 0.0:
                break
            gamma_star = min(gamma_star + step, gamma_turn)

    return BoundednessReport(
        beta=beta, kappa=kappa, kappa_abs=kappa_abs, lambda1=lambda1, z0_norm=z0_norm,
        gamma_turn=gamma_turn, gamma_star=gamma_star, z0_max=z0_max, sign_safe=sign_safe,
    )


@dataclass(frozen=True)
class BoundCheck:
    bounded: bool
    violation_time: Optional[float]
    max_norm: float


def verify_bounded(trace: StateSeries, gamma: float) -> BoundCheck:
    """True iff |Z(t)| <= gamma at every sample."""
    Z = trace.state_matrix()
    if Z.shape[0] == 0:
        raise ValidationError("Trace is empty")
    norms = np.linalg.norm(Z, axis=1)
    violations = np.flatnonzero(norms > gamma)
    first = float(np.asarray(trace.t)[violations[0]]) if violations.size else None
    return BoundCheck(bounded=first is None, violation_time=first, max_norm=float(norms.max()))


@dataclass(frozen=True)
class CauchyTable:
    """d(T) = sup |Z(t1) - Z(t2)| over t1, t2 >= T with |t1 - t2| <= window."""

    T: np.ndarray
    d: np.ndarray
    window: float

    def is_nonincreasing(self, rtol: float = 0.01, atol: float = 1e-9) -> bool:
        if self.d.size < 2:
            return True
        tol = atol + rtol * float(self.d[0])
        return bool(np.all(np.diff(self.d) <= tol))

    @property
    def final(self) -> float:
        return float(self.d[-1])

    def rows(self, every: float) -> list[tuple[float, float]]:
        """Table rows spaced about `every` seconds apart."""
        if self.T.size == 0:
            return []
        dt = float(self.T[1] - self.T[0]) if self.T.size > 1 else every
        stride = max(1, int(round(every / dt)))
        return [(float(self.T[i]), float(self.d[i])) for i in range(0, self.T.size, stride)]


def cauchy_check(trace: StateSeries, window: float) -> CauchyTable:
    """
    Sup-differences of Z over sliding windows, on the trace's own time grid.

    Only start times T with a full window left before the end are returned.

    Raises:
        ValidationError: non-uniform sampling or a trace shorter than 3 windows.
    """
    t = np.asarray(trace.t, dtype=float)
    Z = trace.state_matrix()
    if t.size < 2:
        raise ValidationError("Cauchy check needs at least two samples")
    dt = float(t[1] - t[0])
    if not np.allclose(np.diff(t), dt, rtol=1e-6, atol=1e-12):
        raise ValidationError("Cauchy check needs uniformly sampled traces")
    if not window > 0:
        raise ValidationError(f"window must be positive, got {window}")
    if t[-1] - t[0] < 3.0 * window * (1 - 1e-9):
        raise ValidationError(f"Trace lasts {t[-1] - t[0]:.4g} s; at least 3 windows ({3 * window:.4g} s) needed")

    lags = max(1, int(round(window / dt)))
    n = t.size
    local = np.zeros(n)
    for lag in range(1, lags + 1):
        diffs = np.linalg.norm(Z[lag:] - Z[:-lag], axis=1)
        np.maximum(local[: n - lag], diffs, out=local[: n - lag])
    # sup over every start at or after T
    d = np.maximum.accumulate(local[::-1])[::-1]
    keep = n - lags
    return CauchyTable(T=t[:keep], d=d[:keep], window=lags * dt)


def energy_drift(p: PhysicalParams, trace) -> float:
    """
    Largest |E(t) - E(0)| / max(|E(0)|, ENERGY_FLOOR) over a zero-input trace.

    Raises:
        ValidationError: the trace is not marked zero-input and friction-free,
            or `p` still has friction.
    """
    meta = trace.metadata
    if not meta.get("zero_input", False):
        raise ValidationError("Energy drift needs a zero-input trace")
    if not meta.get("friction_free", False) or p.B1 != 0.0 or p.B2 != 0.0:
        raise ValidationError("Energy drift needs a friction-free trace and parameters")

    if trace.plant_state is not None:
        states = trace.plant_state
    else:
        states = np.column_stack(
            [trace.column("theta"), trace.column("alpha"), trace.column("theta_dot_est"), trace.column("alpha_dot_est")]
        )
    energies = np.array([total_energy(p, FullState.from_array(row)) for row in states])
    e0 = energies[0]
    return float(np.max(np.abs(energies - e0)) / max(abs(e0), ENERGY_FLOOR))
