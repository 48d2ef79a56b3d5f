import math
from dataclasses import dataclass, fields

import numpy as np

from common.errors import ValidationError


def _require_finite(obj, names) -> None:
    for name in names:
        value = getattr(obj, name)
        if not np.all(np.isfinite(value)):
            raise ValidationError(f"{type(obj).__name__}.{name} must be finite, got {value}")


def _frozen_array(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PhysicalParams:
    """Rotary pendulum plant parameters in SI units."""

    M1: float  # arm mass [kg]
    M2: float  # pendulum mass [kg]
    L1: float  # arm length [m]
    L2: float  # pendulum length [m]
    J1: float  # arm inertia about its centre of mass [kg m^2]
    J2: float  # pendulum inertia about its centre of mass [kg m^2]
    B1: float  # arm (yaw) viscous friction [N m s/rad]
    B2: float  # pendulum (pitch) viscous friction [N m s/rad]
    g: float = 9.81
    eta_g: float = 0.9
    eta_m: float = 0.69
    K_g: float = 70.0
    K_t: float = 0.00768
    K_m: float = 0.00768
    R_m: float = 2.6
    arm_com_ratio: float = 2.0 / 7.0

    def __post_init__(self):
        _require_finite(self, [f.name for f in fields(self)])
        for name in ("M1", "M2", "L1", "L2", "J1", "J2", "R_m", "g", "K_g", "K_t", "K_m"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"PhysicalParams.{name} must be strictly positive")
        for name in ("B1", "B2"):
            if getattr(self, name) < 0:
                raise ValidationError(f"PhysicalParams.{name} must be non-negative")
        for name in ("eta_g", "eta_m"):
            if not 0 < getattr(self, name) <= 1:
                raise ValidationError(f"PhysicalParams.{name} must lie in (0, 1]")
        if not 0 < self.arm_com_ratio < 1:
            raise ValidationError("PhysicalParams.arm_com_ratio must lie in (0, 1)")

    @property
    def u1(self) -> float:
        """Voltage-to-torque gain."""
        return self.eta_g * self.K_g * self.eta_m * self.K_t / self.R_m

    @property
    def u2(self) -> float:
        """Back-emf damping on the arm rate."""
        return self.u1 * self.K_g * self.K_m

    @property
    def arm_inertia(self) -> float:
        """Upright arm-axis inertia J1 + r^2 M1 L1^2 + M2 L1^2."""
        return self.J1 + self.arm_com_ratio ** 2 * self.M1 * self.L1 ** 2 + self.M2 * self.L1 ** 2

    @property
    def pendulum_inertia(self) -> float:
        """Pendulum-axis inertia J2 + M2 L2^2 / 4."""
        return self.J2 + 0.25 * self.M2 * self.L2 ** 2

    @property
    def coupling(self) -> float:
        """M2 L1 L2 / 2."""
        return 0.5 * self.M2 * self.L1 * self.L2

    @property
    def gravity_torque(self) -> float:
        """M2 g L2 / 2."""
        return 0.5 * self.M2 * self.g * self.L2

    def frictionless(self) -> "PhysicalParams":
        return _replace(self, B1=0.0, B2=0.0)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _replace(params, **changes):
    values = {f.name: getattr(params, f.name) for f in fields(params)}
    values.update(changes)
    return type(params)(**values)


@dataclass(frozen=True, eq=False)
class SmallAngleMatrices:
    """A X2' + B X2 + C X1 = U V_m + N, linear part only."""

    A_mass: np.ndarray
    B_damp: np.ndarray
    C_stiff: np.ndarray
    U_in: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A_mass", _frozen_array(self.A_mass, (2, 2)))
        object.__setattr__(self, "B_damp", _frozen_array(self.B_damp, (2, 2)))
        object.__setattr__(self, "C_stiff", _frozen_array(self.C_stiff, (2, 2)))
        object.__setattr__(self, "U_in", _frozen_array(self.U_in, (2, 1)))
        _require_finite(self, ("A_mass", "B_damp", "C_stiff", "U_in"))
        if not np.allclose(self.A_mass, self.A_mass.T, rtol=1e-12, atol=0.0):
            raise ValidationError("Mass matrix must be symmetric")
        if np.any(np.linalg.eigvalsh(self.A_mass) <= 0):
            raise ValidationError("Mass matrix must be positive definite")


@dataclass(frozen=True, eq=False)
class ReducedDynamics:
    """
    Numeric small-angle dynamics after left-multiplying by the inverse mass matrix.

        theta''  = v1 V - b11 theta' - b12 alpha' - c1 alpha + a1 x2 x3 x4 + a2 x2 x4^2 + a3 x2 x3^2
        alpha''  = v2 V - b21 theta' - b22 alpha' - c2 alpha + a4 x2 x3 x4 + a5 x2 x4^2 + a6 x2 x3^2
    """

    Ainv: np.ndarray
    b11: float
    b12: float
    b21: float
    b22: float
    c1: float
    c2: float
    v1: float
    v2: float
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float

    def __post_init__(self):
        object.__setattr__(self, "Ainv", _frozen_array(self.Ainv, (2, 2)))
        _require_finite(self, [f.name for f in fields(self)])
        if not np.allclose(self.Ainv, self.Ainv.T, rtol=1e-9, atol=0.0):
            raise ValidationError("Ainv must be symmetric")
        if np.any(np.linalg.eigvalsh(self.Ainv) <= 0):
            raise ValidationError("Ainv must be positive definite")

    @property
    def damping(self) -> np.ndarray:
        return np.array([[self.b11, self.b12], [self.b21, self.b22]])

    @property
    def stiffness(self) -> np.ndarray:
        return np.array([self.c1, self.c2])

    @property
    def input_gain(self) -> np.ndarray:
        return np.array([self.v1, self.v2])

    @property
    def cubic(self) -> np.ndarray:
        return np.array([[self.a1, self.a2, self.a3], [self.a4, self.a5, self.a6]])

    @property
    def torque_gain(self) -> np.ndarray:
        """Accelerations per unit arm torque (first column of Ainv)."""
        return np.array(self.Ainv[:, 0])

    def linear_only(self) -> "ReducedDynamics":
        return _replace(self, a1=0.0, a2=0.0, a3=0.0, a4=0.0, a5=0.0, a6=0.0)

    def as_dict(self) -> dict:
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["Ainv"] = self.Ainv.tolist()
        return values


@dataclass(frozen=True)
class FullState:
    """Physical configuration; alpha = 0 is upright, CCW positive."""

    theta: float = 0.0
    alpha: float = 0.0
    theta_dot: float = 0.0
    alpha_dot: float = 0.0

    def __post_init__(self):
        _require_finite(self, ("theta", "alpha", "theta_dot", "alpha_dot"))

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.alpha, self.theta_dot, self.alpha_dot], dtype=float)

    @classmethod
    def from_array(cls, values) -> "FullState":
        theta, alpha, theta_dot, alpha_dot = (float(v) for v in values)
        return cls(theta, alpha, theta_dot, alpha_dot)


@dataclass(frozen=True)
class PendulumState:
    """Augmented state (int theta, theta, alpha, theta', alpha')."""

    x0: float = 0.0
    x1: float = 0.0
    x2: float = 0.0
    x3: float = 0.0
    x4: float = 0.0

    def __post_init__(self):
        _require_finite(self, ("x0", "x1", "x2", "x3", "x4"))

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.x1, self.x2, self.x3, self.x4], dtype=float)

    @classmethod
    def from_array(cls, values) -> "PendulumState":
        return cls(*(float(v) for v in values))

    @classmethod
    def from_full(cls, state: FullState, integral: float = 0.0) -> "PendulumState":
        return cls(integral, state.theta, state.alpha, state.theta_dot, state.alpha_dot)

    def full(self) -> FullState:
        return FullState(self.x1, self.x2, self.x3, self.x4)


def wrap_angle(angle: float) -> float:
    """Map an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped
