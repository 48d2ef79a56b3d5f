"""
Scenario engine: fixed-step RK4 integration of the pendulum under the sampled
controller, plus zero-input and ideal state-feedback runs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from common.errors import DivergenceError, NumericalError, ValidationError
from design.synthesis import GainVector, closed_loop_matrix
from lti.disturbance import DisturbanceProfile
from plant.dynamics import full_state_derivative, motor_torque
from plant.linear import reduced_plant_derivative, reduced_dynamics, small_angle_matrices
from plant.models import FullState, PhysicalParams, ReducedDynamics, wrap_angle
from sim.controller import (
    ControllerRuntimeConfig,
    DerivativeFilter,
    ReferenceSignal,
    controller_update,
    filtered_derivative_update,
    inject_disturbance,
    quantize,
)
from sim.integrators import rk4_step
from sim.trace import CSV_COLUMNS, StateTrace, Trace

logger = logging.getLogger(__name__)

PLANT_FULL = "full"
PLANT_REDUCED = "reduced"
PLANT_ALIASES = {
    "full": PLANT_FULL,
    "full_nonlinear": PLANT_FULL,
    "reduced": PLANT_REDUCED,
    "small_angle_reduced": PLANT_REDUCED,
}

# Ideal state-feedback runs stop once |Z| exceeds this multiple of max(1, |Z0|)
BLOWUP_FACTOR = 1e6


def normalize_plant_mode(mode: str) -> str:
    try:
        return PLANT_ALIASES[mode]
    except KeyError:
        raise ValidationError(f"Unknown plant mode {mode!r}; expected one of {sorted(PLANT_ALIASES)}") from None


@dataclass(frozen=True, eq=False)
class Scenario:
    """One closed-loop experiment; angles in radians, disturbance in N m."""

    gains: GainVector
    plant_mode: str = PLANT_REDUCED
    params: Optional[PhysicalParams] = None
    dynamics: Optional[ReducedDynamics] = None
    runtime: ControllerRuntimeConfig = field(default_factory=ControllerRuntimeConfig)
    reference: ReferenceSignal = field(default_factory=ReferenceSignal)
    disturbance: DisturbanceProfile = field(default_factory=DisturbanceProfile)
    initial: FullState = field(default_factory=FullState)
    duration: float = 10.0
    dt: float = 1e-3
    config_hash: str = ""

    def __post_init__(self):
        object.__setattr__(self, "plant_mode", normalize_plant_mode(self.plant_mode))
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValidationError(f"duration must be positive, got {self.duration}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.dt > self.runtime.sample_period * (1 + 1e-12):
            raise ValidationError("dt must not exceed the controller sample period")
        ratio = self.runtime.sample_period / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValidationError("sample_period must be an integer multiple of dt")
        if self.plant_mode == PLANT_FULL and self.params is None:
            raise ValidationError("The full nonlinear plant needs physical parameters")
        if self.plant_mode == PLANT_REDUCED and self.dynamics is None and self.params is None:
            raise ValidationError("The reduced plant needs identified dynamics or physical parameters")

    @property
    def substeps(self) -> int:
        return int(round(self.runtime.sample_period / self.dt))

    def reduced(self) -> ReducedDynamics:
        if self.dynamics is not None:
            return self.dynamics
        return reduced_dynamics(small_angle_matrices(self.params), self.params)


PlantDerivative = Callable[[float, np.ndarray, float], np.ndarray]


def _plant_derivative(sc: Scenario) -> PlantDerivative:
    """f(t, x, V) for the selected plant, disturbance torque included."""
    dist = sc.disturbance
    if sc.plant_mode == PLANT_FULL:
        p = sc.params

        def full(t: float, x: np.ndarray, V: float) -> np.ndarray:
            tau = motor_torque(p, V, x[2]) + inject_disturbance(dist, t)
            return full_state_derivative(p, x, tau)

        return full

    r = sc.reduced()

    def reduced(t: float, x: np.ndarray, V: float) -> np.ndarray:
        return reduced_plant_derivative(r, x, V, inject_disturbance(dist, t))

    return reduced


def run_scenario(sc: Scenario) -> Trace:
    """
    Integrate the plant at dt with the controller sampled every sample_period.

    The controller stays disengaged (V = 0) until the wrapped, measured |alpha|
    enters the catch region, then latches engaged. The run stops with the
    terminated flag set on its last row once |theta| exceeds theta_limit.

    Raises:
        DivergenceError: non-finite plant state; the partial trace is attached.
    """
    cfg = sc.runtime
    f = _plant_derivative(sc)
    steps = int(round(sc.duration / sc.dt))
    substeps = sc.substeps
    Ts = cfg.sample_period

    x = sc.initial.as_array()
    data = np.zeros((steps + 1, len(CSV_COLUMNS)))
    plant_state = np.zeros((steps + 1, 4))

    theta_filter = DerivativeFilter()
    alpha_filter = DerivativeFilter()
    x0 = 0.0
    engaged = False
    v_cmd = v_sat = 0.0
    theta_rate = alpha_rate = 0.0
    theta_ref = sc.reference.value(0.0)
    metadata = {
        "plant_mode": sc.plant_mode,
        "dt": sc.dt,
        "sample_period": Ts,
        "config_hash": sc.config_hash,
        "zero_input": False,
        "friction_free": _friction_free(sc),
    }

    def record(k: int, terminated: bool) -> None:
        data[k] = (
            k * sc.dt,
            theta_ref,
            x[0],
            x[1],
            theta_rate,
            alpha_rate,
            x0,
            v_cmd,
            v_sat,
            1.0 if engaged else 0.0,
            1.0 if terminated else 0.0,
        )
        plant_state[k] = x

    logger.info(
        "Running %s plant for %.3g s (dt=%.3g, sample=%.3g, alpha0=%.3g deg)",
        sc.plant_mode, sc.duration, sc.dt, Ts, math.degrees(sc.initial.alpha),
    )
    last = steps
    for k in range(steps + 1):
        t = k * sc.dt
        if k % substeps == 0:
            theta_ref = sc.reference.value(t)
            theta_m = quantize(x[0], cfg.quantization)
            alpha_m = quantize(wrap_angle(x[1]), cfg.quantization)
            theta_filter, theta_rate = filtered_derivative_update(
                theta_filter, theta_m, Ts, cfg.filter_cutoff, cfg.derivative_mode
            )
            alpha_filter, alpha_rate = filtered_derivative_update(
                alpha_filter, alpha_m, Ts, cfg.filter_cutoff, cfg.derivative_mode
            )
            if not engaged and abs(alpha_m) <= cfg.catch_angle:
                engaged = True
                logger.info("Controller engaged at t=%.4f s (alpha=%.3f deg)", t, math.degrees(alpha_m))
            if engaged:
                measured = np.array([theta_m, alpha_m, theta_rate, alpha_rate])
                v_sat, x0_next, v_cmd = controller_update(sc.gains, measured, theta_ref, cfg, x0, Ts)
            else:
                v_sat = v_cmd = 0.0
                x0_next = x0

        terminated = abs(x[0]) > cfg.theta_limit
        record(k, terminated)
        if terminated:
            logger.warning("Arm angle limit exceeded at t=%.4f s (theta=%.2f deg)", t, math.degrees(x[0]))
            last = k
            break
        if k == steps:
            break

        try:
            x = rk4_step(lambda tt, xx: f(tt, xx, v_sat), x, sc.dt, t)
        except NumericalError as e:
            partial = Trace(data[: k + 1], metadata=metadata, plant_state=plant_state[: k + 1])
            raise DivergenceError(f"Simulation diverged: {e}", trace=partial, time=t) from e
        if (k + 1) % substeps == 0:
            x0 = x0_next

    return Trace(data[: last + 1], metadata=metadata, plant_state=plant_state[: last + 1])


def _friction_free(sc: Scenario) -> bool:
    if sc.plant_mode == PLANT_FULL:
        return sc.params.B1 == 0.0 and sc.params.B2 == 0.0
    return False


def run_free_swing(p: PhysicalParams, initial: FullState, duration: float, dt: float) -> Trace:
    """
    Zero-input run of the full nonlinear model, recorded at every step.

    Rate columns carry the true rates. Metadata marks the run as zero-input
    and records whether the parameters are friction-free.
    """
    if not duration > 0:
        raise ValidationError(f"duration must be positive, got {duration}")
    steps = int(round(duration / dt))
    x = initial.as_array()
    data = np.zeros((steps + 1, len(CSV_COLUMNS)))
    states = np.zeros((steps + 1, 4))
    metadata = {
        "plant_mode": PLANT_FULL,
        "dt": dt,
        "zero_input": True,
        "friction_free": p.B1 == 0.0 and p.B2 == 0.0,
    }

    def deriv(t: float, s: np.ndarray) -> np.ndarray:
        return full_state_derivative(p, s, 0.0)

    for k in range(steps + 1):
        data[k, :6] = (k * dt, 0.0, x[0], x[1], x[2], x[3])
        states[k] = x
        if k == steps:
            break
        try:
            x = rk4_step(deriv, x, dt, k * dt)
        except NumericalError as e:
            partial = Trace(data[: k + 1], metadata=metadata, plant_state=states[: k + 1])
            raise DivergenceError(f"Free swing diverged: {e}", trace=partial, time=k * dt) from e
    return Trace(data, metadata=metadata, plant_state=states)


def run_state_feedback(
    r: ReducedDynamics,
    K: GainVector,
    Z0: np.ndarray,
    duration: float,
    dt: float,
    include_cubic: bool = True,
) -> StateTrace:
    """
    Integrate Z' = A_d Z + N_d(Z) with ideal continuous feedback.

    A run whose norm passes BLOWUP_FACTOR * max(1, |Z0|) is cut short and
    flagged `diverged` in its metadata.
    """
    if not duration > 0 or not dt > 0:
        raise ValidationError("duration and dt must be positive")
    A_d = closed_loop_matrix(r, K).A_d
    cubic = r.cubic if include_cubic else np.zeros((2, 3))
    Z = np.asarray(Z0, dtype=float).reshape(5)
    limit = BLOWUP_FACTOR * max(1.0, float(np.linalg.norm(Z)))

    def deriv(t: float, z: np.ndarray) -> np.ndarray:
        dz = A_d @ z
        alpha, theta_dot, alpha_dot = z[2], z[3], z[4]
        terms = np.array([alpha * theta_dot * alpha_dot, alpha * alpha_dot ** 2, alpha * theta_dot ** 2])
        dz[3:] += cubic @ terms
        return dz

    steps = int(round(duration / dt))
    t = np.arange(steps + 1) * dt
    out = np.zeros((steps + 1, 5))
    out[0] = Z
    metadata = {"dt": dt, "include_cubic": include_cubic, "diverged": False}
    for k in range(steps):
        try:
            Z = rk4_step(deriv, Z, dt, t[k])
        except NumericalError as e:
            raise DivergenceError(
                f"State-feedback run diverged: {e}", trace=StateTrace(t[: k + 1], out[: k + 1], metadata), time=t[k]
            ) from e
        out[k + 1] = Z
        if np.linalg.norm(Z) > limit:
            metadata["diverged"] = True
            logger.warning("State-feedback run left %.3g at t=%.4f s", limit, t[k + 1])
            return StateTrace(t[: k + 2], out[: k + 2], metadata)
    return StateTrace(t, out, metadata)
