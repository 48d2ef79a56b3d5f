"""
Energies and full nonlinear equations of motion of the rotary pendulum.

Generalized coordinates are the arm angle theta and the pendulum angle alpha
(0 = upright). Friction enters through the Rayleigh dissipation function
D = B1 theta'^2 / 2 + B2 alpha'^2 / 2 and the motor torque acts on theta.
No small-angle approximation is made here.
"""

import math

import numpy as np

from plant.models import FullState, PhysicalParams


def potential_energy(p: PhysicalParams, alpha: float) -> float:
    """alpha-dependent potential energy M2 g (L2/2) cos(alpha)."""
    return p.gravity_torque * math.cos(alpha)


def kinetic_energy(p: PhysicalParams, s: FullState) -> float:
    """Rotational plus translational kinetic energy of arm and pendulum."""
    r = p.arm_com_ratio
    sin_a = math.sin(s.alpha)
    rotational = 0.5 * p.J1 * s.theta_dot ** 2 + 0.5 * p.J2 * s.alpha_dot ** 2
    translational = (
        (0.5 * r * r * p.M1 * p.L1 ** 2 + 0.5 * p.M2 * p.L1 ** 2) * s.theta_dot ** 2
        + p.M2 * p.L2 ** 2 / 8.0 * (s.alpha_dot ** 2 + sin_a * sin_a * s.theta_dot ** 2)
        - p.coupling * math.cos(s.alpha) * s.alpha_dot * s.theta_dot
    )
    return rotational + translational


def lagrangian(p: PhysicalParams, s: FullState) -> float:
    return kinetic_energy(p, s) - potential_energy(p, s.alpha)


def total_energy(p: PhysicalParams, s: FullState) -> float:
    return kinetic_energy(p, s) + potential_energy(p, s.alpha)


def motor_torque(p: PhysicalParams, V_m: float, theta_dot: float) -> float:
    """tau = u1 V_m - u2 theta'."""
    return p.u1 * V_m - p.u2 * theta_dot


def mass_matrix(p: PhysicalParams, alpha: float) -> np.ndarray:
    """Configuration-dependent inertia matrix of the full model."""
    sin_a = math.sin(alpha)
    off = -p.coupling * math.cos(alpha)
    return np.array(
        [
            [p.arm_inertia + 0.25 * p.M2 * p.L2 ** 2 * sin_a * sin_a, off],
            [off, p.pendulum_inertia],
        ]
    )


def full_dynamics(p: PhysicalParams, s: FullState, tau: float) -> tuple[float, float]:
    """
    Solve the coupled Euler-Lagrange equations for (theta'', alpha'').

    The 2x2 mass matrix is solved in closed form; its determinant is bounded
    below by J1 * J2 > 0 so no singular case exists.
    """
    return _accelerations(p, s.alpha, s.theta_dot, s.alpha_dot, tau)


def _accelerations(p: PhysicalParams, alpha: float, theta_dot: float, alpha_dot: float, tau: float):
    sin_a = math.sin(alpha)
    cos_a = math.cos(alpha)
    sin_2a = 2.0 * sin_a * cos_a
    quarter_m2l2sq = 0.25 * p.M2 * p.L2 ** 2
    q = p.coupling

    m11 = p.arm_inertia + quarter_m2l2sq * sin_a * sin_a
    m12 = -q * cos_a
    m22 = p.pendulum_inertia

    f1 = (
        tau
        - quarter_m2l2sq * sin_2a * alpha_dot * theta_dot
        - q * sin_a * alpha_dot * alpha_dot
        - p.B1 * theta_dot
    )
    f2 = (
        0.5 * quarter_m2l2sq * sin_2a * theta_dot * theta_dot
        + p.gravity_torque * sin_a
        - p.B2 * alpha_dot
    )

    det = m11 * m22 - m12 * m12
    theta_ddot = (m22 * f1 - m12 * f2) / det
    alpha_ddot = (m11 * f2 - m12 * f1) / det
    return theta_ddot, alpha_ddot


def full_state_derivative(p: PhysicalParams, x: np.ndarray, tau: float) -> np.ndarray:
    """d/dt of [theta, alpha, theta', alpha'] under an arm torque tau."""
    theta_ddot, alpha_ddot = _accelerations(p, x[1], x[2], x[3], tau)
    return np.array([x[2], x[3], theta_ddot, alpha_ddot])
