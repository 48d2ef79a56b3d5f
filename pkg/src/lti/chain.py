"""
General integral + derivative controller for nth-order chain plants.

Plant (chain-of-integrators reading of the general LTI form):

    x^(n) + sum_{i=1..n} a_i x^(i-1) = u + T_d

Controller, with z = x_d - x:

    u = b_0 * int(z) + sum_{i=1..n} b_i z^(i-1)

Closed-loop denominator: s^(n+1) + sum_{i=1..n} (a_i + b_i) s^i + b_0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from common.errors import DivergenceError, NumericalError, ValidationError
from lti.disturbance import DisturbanceProfile
from lti.polynomial import Polynomial, check_pole_set, is_hurwitz
from sim.integrators import rk4_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainPlant:
    """x^(n) + sum a_i x^(i-1) = u + T_d, with a = (a_1, ..., a_n)."""

    a: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if len(a) < 1:
            raise ValidationError("Chain plant order must be at least 1")
        if not all(math.isfinite(v) for v in a):
            raise ValidationError(f"Plant coefficients must be finite: {a}")
        object.__setattr__(self, "a", a)

    @property
    def order(self) -> int:
        return len(self.a)

    def open_loop_polynomial(self) -> Polynomial:
        return Polynomial(self.a + (1.0,))


@dataclass(frozen=True)
class GeneralController:
    """u = b0 * int(z) + sum b_i z^(i-1); `integral=False` drops the b0 term."""

    b0: float
    b: tuple[float, ...]
    integral: bool = True
    u_max: Optional[float] = None

    def __post_init__(self):
        b = tuple(float(v) for v in self.b)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "b0", float(self.b0))
        if self.integral and not self.b0 > 0:
            raise ValidationError(f"Integral gain b0 must be positive, got {self.b0}")
        if not self.integral and self.b0 != 0.0:
            raise ValidationError("A controller without integral action must have b0 = 0")
        if self.u_max is not None and not self.u_max > 0:
            raise ValidationError(f"u_max must be positive when set, got {self.u_max}")

    @property
    def order(self) -> int:
        return len(self.b)

    def without_integral(self) -> "GeneralController":
        return replace(self, b0=0.0, integral=False)

    def with_saturation(self, u_max: Optional[float]) -> "GeneralController":
        return replace(self, u_max=u_max)


@dataclass
class ChainTrace:
    """Time-indexed record of a chain-plant closed-loop run."""

    t: np.ndarray
    states: np.ndarray  # columns: z_int, x, x', ..., x^(n-1)
    u: np.ndarray
    disturbance: np.ndarray
    x_d: float
    metadata: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def final_output(self) -> float:
        return float(self.states[-1, 1])

    def header(self) -> list[str]:
        order = self.states.shape[1] - 1
        return ["t", "z_int", "x"] + [f"dx{k}" for k in range(1, order)] + ["u", "disturbance"]

    def to_csv(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        table = np.column_stack([self.t, self.states, self.u, self.disturbance])
        np.savetxt(path, table, delimiter=",", header=",".join(self.header()), comments="", fmt="%.9g")
        return path


def closed_loop_polynomial(plant: ChainPlant, ctrl: GeneralController) -> Polynomial:
    """Denominator of the closed loop; drops to order n without integral action."""
    _check_dimensions(plant, ctrl)
    summed = tuple(a + b for a, b in zip(plant.a, ctrl.b))
    if ctrl.integral:
        return Polynomial((ctrl.b0,) + summed + (1.0,))
    return Polynomial(summed + (1.0,))


def synthesize_controller(plant: ChainPlant, desired_poles: Iterable[complex]) -> GeneralController:
    """
    Match s^(n+1) + sum (a_i + b_i) s^i + b_0 to the monic polynomial with the
    desired roots.

    Raises:
        ValidationError: poles not n+1, not conjugate-closed or not strictly stable.
    """
    poles = check_pole_set(desired_poles, count=plant.order + 1)
    target = Polynomial.from_roots(poles)
    coeffs = target.coeffs  # d_0 .. d_n, d_{n+1} = 1
    b0 = coeffs[0]
    b = tuple(coeffs[i] - plant.a[i - 1] for i in range(1, plant.order + 1))
    ctrl = GeneralController(b0=b0, b=b)
    if not is_hurwitz(closed_loop_polynomial(plant, ctrl)):
        raise NumericalError("Synthesized closed loop is not Hurwitz")
    logger.info("Synthesized chain controller: b0=%.6g, b=%s", b0, np.round(b, 6).tolist())
    return ctrl


def _check_dimensions(plant: ChainPlant, ctrl: GeneralController) -> None:
    if ctrl.order != plant.order:
        raise ValidationError(
            f"Controller order {ctrl.order} does not match plant order {plant.order}"
        )


def _control_input(plant: ChainPlant, ctrl: GeneralController, state: np.ndarray, x_d: float) -> float:
    n = plant.order
    z_int = state[0]
    chain = state[1:]
    u = ctrl.b0 * z_int + ctrl.b[0] * (x_d - chain[0])
    for i in range(2, n + 1):
        u -= ctrl.b[i - 1] * chain[i - 1]
    if ctrl.u_max is not None:
        u = min(max(u, -ctrl.u_max), ctrl.u_max)
    return u


def simulate_chain(
    plant: ChainPlant,
    ctrl: GeneralController,
    x_d: float,
    dist: DisturbanceProfile,
    duration: float,
    dt: float,
    initial: Optional[Sequence[float]] = None,
) -> ChainTrace:
    """
    Integrate the augmented (n+1)-state closed loop with RK4.

    State layout: [z_int, x, x', ..., x^(n-1)]; z_int starts at 0.

    Raises:
        DivergenceError: a non-finite state appeared; the partial trace is attached.
    """
    _check_dimensions(plant, ctrl)
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if not duration > 0:
        raise ValidationError(f"duration must be positive, got {duration}")

    n = plant.order
    a = np.asarray(plant.a)
    steps = int(round(duration / dt))
    state = np.zeros(n + 1)
    if initial is not None:
        if len(initial) != n:
            raise ValidationError(f"Initial chain state must have {n} entries")
        state[1:] = np.asarray(initial, dtype=float)

    def deriv(t: float, s: np.ndarray) -> np.ndarray:
        u = _control_input(plant, ctrl, s, x_d)
        ds = np.empty_like(s)
        ds[0] = x_d - s[1]
        ds[1:n] = s[2:]
        ds[n] = -float(np.dot(a, s[1:])) + u + dist.value_at(t)
        return ds

    t = np.arange(steps + 1) * dt
    states = np.zeros((steps + 1, n + 1))
    u = np.zeros(steps + 1)
    td = np.zeros(steps + 1)
    states[0] = state
    u[0] = _control_input(plant, ctrl, state, x_d)
    td[0] = dist.value_at(0.0)

    for k in range(steps):
        try:
            state = rk4_step(deriv, state, dt, t[k])
        except NumericalError as e:
            partial = ChainTrace(t[: k + 1], states[: k + 1], u[: k + 1], td[: k + 1], x_d)
            raise DivergenceError(f"Chain simulation diverged: {e}", trace=partial, time=t[k]) from e
        states[k + 1] = state
        u[k + 1] = _control_input(plant, ctrl, state, x_d)
        td[k + 1] = dist.value_at(t[k + 1])

    return ChainTrace(t, states, u, td, x_d, metadata={"order": n, "dt": dt, "integral": ctrl.integral})


def steady_state_value(
    plant: ChainPlant, ctrl: GeneralController, step_amplitude: float, x_d: float
) -> float:
    """
    Final value of x for a setpoint x_d and a constant disturbance step.

    With integral action the disturbance term has no 1/s left after the
    controller's b0/s, so the limit is x_d regardless of the step. Without it
    the output settles at (b_1 x_d + alpha_0) / (a_1 + b_1).

    Raises:
        ValidationError: the closed-loop denominator is not Hurwitz.
    """
    if not is_hurwitz(closed_loop_polynomial(plant, ctrl)):
        raise ValidationError("Closed loop is not Hurwitz; no final value exists")
    if ctrl.integral:
        return float(x_d)
    return float((ctrl.b[0] * x_d + step_amplitude) / (plant.a[0] + ctrl.b[0]))
