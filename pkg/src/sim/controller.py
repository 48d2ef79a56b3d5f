"""
Sampled balancing controller: references, rate estimation, saturated state
feedback with back-calculation anti-windup, and disturbance injection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from common.errors import ValidationError
from design.synthesis import GainVector
from lti.disturbance import DisturbanceProfile

DERIVATIVE_MODES = ("filtered_difference", "filtered_position")
REFERENCE_KINDS = ("constant", "square_pulse")


@dataclass(frozen=True)
class ControllerRuntimeConfig:
    """Hardware-facing controller settings; angles in radians."""

    sample_period: float = 1e-3
    v_sat: float = 15.0
    filter_cutoff: float = 20.0 * math.pi  # rad/s
    antiwindup_reset: float = 1.0
    catch_angle: float = math.radians(20.0)
    theta_limit: float = math.radians(45.0)
    quantization: Optional[float] = None  # rad/count
    derivative_mode: str = "filtered_difference"

    def __post_init__(self):
        for name in ("sample_period", "v_sat", "filter_cutoff", "antiwindup_reset", "catch_angle", "theta_limit"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive and finite, got {value}")
        if not self.catch_angle < math.pi / 2:
            raise ValidationError("catch_angle must be below 90 degrees")
        # Forward-Euler low-pass is only well damped below this product
        if not self.sample_period * self.filter_cutoff < 1.0:
            raise ValidationError(
                f"sample_period * filter_cutoff must be < 1, got {self.sample_period * self.filter_cutoff:.3g}"
            )
        if self.quantization is not None and not self.quantization > 0:
            raise ValidationError(f"quantization must be positive when set, got {self.quantization}")
        if self.derivative_mode not in DERIVATIVE_MODES:
            raise ValidationError(f"derivative_mode must be one of {DERIVATIVE_MODES}, got {self.derivative_mode!r}")


@dataclass(frozen=True)
class ReferenceSignal:
    """
    Arm-angle reference.

    constant:     offset, plus amplitude from start_time on
    square_pulse: offset before start_time, then +amplitude for the first half
                  of each period and -amplitude for the second
    """

    kind: str = "constant"
    amplitude: float = 0.0
    period: float = 0.0
    start_time: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValidationError(f"Reference kind must be one of {REFERENCE_KINDS}, got {self.kind!r}")
        for name in ("amplitude", "period", "start_time", "offset"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"Reference {name} must be finite")
        if self.kind == "square_pulse" and not self.period > 0:
            raise ValidationError(f"square_pulse needs a positive period, got {self.period}")

    def value(self, t: float) -> float:
        if t < self.start_time:
            return self.offset
        if self.kind == "constant":
            return self.offset + self.amplitude
        half = 0.5 * self.period
        # Tolerance keeps sample times that land on an edge in the new half
        k = math.floor((t - self.start_time) / half + 1e-9)
        return self.offset + (self.amplitude if k % 2 == 0 else -self.amplitude)


@dataclass
class DerivativeFilter:
    """State of one rate-estimation channel."""

    prev: float = 0.0
    est: float = 0.0
    smoothed: float = 0.0
    primed: bool = False


def filtered_derivative_update(
    state: DerivativeFilter, raw: float, dt: float, cutoff: float, mode: str = "filtered_difference"
) -> tuple[DerivativeFilter, float]:
    """
    One step of the rate estimator.

    filtered_difference: est' = est + dt*wc*((raw - prev)/dt - est)
    filtered_position:   low-pass the angle, then difference the filtered angle

    The first call only primes the channel and returns a zero rate.
    """
    if not cutoff > 0:
        raise ValidationError(f"Filter cutoff must be positive, got {cutoff}")
    if not state.primed:
        return DerivativeFilter(prev=raw, est=0.0, smoothed=raw, primed=True), 0.0
    gain = dt * cutoff
    if mode == "filtered_difference":
        est = state.est + gain * ((raw - state.prev) / dt - state.est)
        return DerivativeFilter(prev=raw, est=est, smoothed=raw, primed=True), est
    if mode == "filtered_position":
        smoothed = state.smoothed + gain * (raw - state.smoothed)
        est = (smoothed - state.smoothed) / dt
        return DerivativeFilter(prev=raw, est=est, smoothed=smoothed, primed=True), est
    raise ValidationError(f"Unknown derivative mode {mode!r}")


def quantize(angle: float, quantum: Optional[float]) -> float:
    """Floor an angle to the encoder grid."""
    if quantum is None:
        return angle
    return quantum * math.floor(angle / quantum)


def controller_update(
    K: GainVector,
    measured: np.ndarray,
    theta_ref: float,
    cfg: ControllerRuntimeConfig,
    x0: float,
    dt: float,
) -> tuple[float, float, float]:
    """
    Saturated state feedback with back-calculation anti-windup.

    Args:
        measured: (theta, alpha, theta' estimate, alpha' estimate)
        x0: integral of the arm tracking error before this sample

    Returns:
        (V_sat, x0 after one forward-Euler step of dt, V_cmd)
    """
    theta, alpha, theta_dot, alpha_dot = measured
    z_theta = theta - theta_ref
    v_cmd = -(K.k0 * x0 + K.k1 * z_theta + K.k2 * alpha + K.k3 * theta_dot + K.k4 * alpha_dot)
    v_sat = min(max(v_cmd, -cfg.v_sat), cfg.v_sat)
    # Excess is fed back in the direction that pulls V_cmd toward the limit
    direction = -math.copysign(1.0, K.k0) if K.k0 != 0.0 else 0.0
    x0_dot = z_theta + direction * (v_sat - v_cmd) / cfg.antiwindup_reset
    return v_sat, x0 + dt * x0_dot, v_cmd


def inject_disturbance(profile: DisturbanceProfile, t: float) -> float:
    """Arm torque from a step-sequence profile."""
    return profile.value_at(t)
