"""
Small-angle model, reduced numeric dynamics, state-space form and
controllability checks.

State conventions:
    4-state X  = [theta, alpha, theta', alpha']
    5-state    = [int theta, theta, alpha, theta', alpha'] (PendulumState)
"""

import logging
from typing import Iterable

import control as ctrl
import numpy as np
from scipy.linalg import svdvals

from common.errors import ValidationError
from plant.models import PendulumState, PhysicalParams, ReducedDynamics, SmallAngleMatrices

logger = logging.getLogger(__name__)

# Singular values above largest * RANK_RTOL * dimension count toward rank
RANK_RTOL = 1e-9

CHANNEL_INDEX = {"theta": 0, "alpha": 1}


def small_angle_matrices(p: PhysicalParams) -> SmallAngleMatrices:
    """Matrix form A X2' + B X2 + C X1 = U V_m with motor terms folded in."""
    A_mass = [[p.arm_inertia, -p.coupling], [-p.coupling, p.pendulum_inertia]]
    B_damp = [[p.B1 + p.u2, 0.0], [0.0, p.B2]]
    C_stiff = [[0.0, 0.0], [0.0, -p.gravity_torque]]
    U_in = [[p.u1], [0.0]]
    return SmallAngleMatrices(A_mass=A_mass, B_damp=B_damp, C_stiff=C_stiff, U_in=U_in)


def reduced_dynamics(m: SmallAngleMatrices, p: PhysicalParams) -> ReducedDynamics:
    """
    Left-multiply the small-angle model by the inverse mass matrix.

    The alpha^2 corrections to the mass matrix are dropped; the remaining
    cubic terms of N are kept:

        N = [-(M2 L2^2 / 2) alpha alpha' theta' - (M2 L1 L2 / 2) alpha alpha'^2,
             (M2 L2^2 / 4) alpha theta'^2]
    """
    det = np.linalg.det(m.A_mass)
    if abs(det) <= np.finfo(float).eps * np.linalg.norm(m.A_mass) ** 2:
        raise ValidationError("Mass matrix is singular")
    Ainv = np.linalg.inv(m.A_mass)
    Ainv = 0.5 * (Ainv + Ainv.T)

    damping = Ainv @ m.B_damp
    stiffness = Ainv @ m.C_stiff[:, 1]
    gain = Ainv @ m.U_in[:, 0]

    half_m2l2sq = 0.5 * p.M2 * p.L2 ** 2
    # N columns: (alpha alpha' theta', alpha alpha'^2, alpha theta'^2)
    N = np.array(
        [
            [-half_m2l2sq, -p.coupling, 0.0],
            [0.0, 0.0, 0.5 * half_m2l2sq],
        ]
    )
    cubic = Ainv @ N
    logger.debug("Reduced dynamics: v=%s, c=%s", np.round(gain, 4).tolist(), np.round(stiffness, 4).tolist())

    return ReducedDynamics(
        Ainv=Ainv,
        b11=damping[0, 0],
        b12=damping[0, 1],
        b21=damping[1, 0],
        b22=damping[1, 1],
        # model subtracts c * alpha, so c = (Ainv C)[:, 1]
        c1=stiffness[0],
        c2=stiffness[1],
        v1=gain[0],
        v2=gain[1],
        a1=cubic[0, 0],
        a2=cubic[0, 1],
        a3=cubic[0, 2],
        a4=cubic[1, 0],
        a5=cubic[1, 1],
        a6=cubic[1, 2],
    )


def nonlinear_reduced_dynamics(r: ReducedDynamics, s: PendulumState, V_m: float) -> np.ndarray:
    """Five-state derivative including the cubic terms."""
    return reduced_state_derivative(r, s.as_array(), V_m)


def reduced_state_derivative(r: ReducedDynamics, x: np.ndarray, V_m: float, tau_d: float = 0.0) -> np.ndarray:
    """Array form of the reduced model; tau_d is an extra arm torque."""
    return np.concatenate(([x[1]], reduced_plant_derivative(r, x[1:], V_m, tau_d)))


def reduced_plant_derivative(r: ReducedDynamics, x: np.ndarray, V_m: float, tau_d: float = 0.0) -> np.ndarray:
    """d/dt of the 4-state [theta, alpha, theta', alpha'] under the reduced model."""
    x2, x3, x4 = x[1], x[2], x[3]
    a334 = x2 * x3 * x4
    a44 = x2 * x4 * x4
    a33 = x2 * x3 * x3
    theta_ddot = (
        r.v1 * V_m - r.b11 * x3 - r.b12 * x4 - r.c1 * x2 + r.a1 * a334 + r.a2 * a44 + r.a3 * a33
    )
    alpha_ddot = (
        r.v2 * V_m - r.b21 * x3 - r.b22 * x4 - r.c2 * x2 + r.a4 * a334 + r.a5 * a44 + r.a6 * a33
    )
    if tau_d:
        theta_ddot += r.Ainv[0, 0] * tau_d
        alpha_ddot += r.Ainv[1, 0] * tau_d
    return np.array([x3, x4, theta_ddot, alpha_ddot])


def state_space(r: ReducedDynamics) -> tuple[np.ndarray, np.ndarray]:
    """Linear 4-state pair (A1, U1) = ([[0, I], [C~, B~]], [0; U~])."""
    A1 = np.zeros((4, 4))
    A1[0, 2] = 1.0
    A1[1, 3] = 1.0
    A1[2:, 1] = -r.stiffness
    A1[2:, 2:] = -r.damping
    U1 = np.zeros((4, 1))
    U1[2:, 0] = r.input_gain
    return A1, U1


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValidationError(f"A must be square, got shape {A.shape}")
    B = np.asarray(B, dtype=float).reshape(n, -1)
    return np.asarray(ctrl.ctrb(A, B), dtype=float)


def controllability_rank(A: np.ndarray, B: np.ndarray) -> int:
    """Numeric rank of [B, AB, ..., A^(n-1) B] from its singular values."""
    ctrb = controllability_matrix(A, B)
    sv = svdvals(ctrb)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    threshold = sv[0] * RANK_RTOL * max(ctrb.shape)
    return int(np.sum(sv > threshold))


def augment_integral(
    A1: np.ndarray, U1: np.ndarray, channels: Iterable[str] = ("theta",)
) -> tuple[np.ndarray, np.ndarray]:
    """
    Prepend integral states for the selected outputs.

    The augmented state is [int y_c for c in channels] + X with each integral
    driven by its output (theta or alpha).
    """
    selected = list(dict.fromkeys(channels))
    if not selected:
        raise ValidationError("At least one integral channel is required")
    unknown = [c for c in selected if c not in CHANNEL_INDEX]
    if unknown:
        raise ValidationError(f"Unknown integral channels: {unknown}")

    A1 = np.asarray(A1, dtype=float)
    n = A1.shape[0]
    U1 = np.asarray(U1, dtype=float).reshape(n, -1)
    m = len(selected)
    A_aug = np.zeros((n + m, n + m))
    A_aug[m:, m:] = A1
    for row, channel in enumerate(selected):
        A_aug[row, m + CHANNEL_INDEX[channel]] = 1.0
    B_aug = np.vstack([np.zeros((m, U1.shape[1])), U1])
    return A_aug, B_aug
