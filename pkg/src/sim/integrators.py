"""Fixed-step integration backbone."""

from typing import Callable

import numpy as np

from common.errors import NumericalError, ValidationError

Derivative = Callable[[float, np.ndarray], np.ndarray]


def rk4_step(deriv: Derivative, state: np.ndarray, dt: float, t: float = 0.0) -> np.ndarray:
    """
    Classical 4th-order Runge-Kutta update of `state` over one step `dt`.

    Args:
        deriv: f(t, x) returning dx/dt with the shape of x
        state: current state vector
        dt: step size, strictly positive
        t: time at the start of the step

    Returns:
        The state at t + dt.

    Raises:
        NumericalError: if any stage produces a non-finite value.
    """
    if not dt > 0:
        raise ValidationError(f"Step size must be positive, got {dt}")
    x = np.asarray(state, dtype=float)
    half = 0.5 * dt
    try:
        k1 = np.asarray(deriv(t, x), dtype=float)
        k2 = np.asarray(deriv(t + half, x + half * k1), dtype=float)
        k3 = np.asarray(deriv(t + half, x + half * k2), dtype=float)
        k4 = np.asarray(deriv(t + dt, x + dt * k3), dtype=float)
    except (OverflowError, ValueError) as e:
        raise NumericalError(f"Derivative evaluation failed at t={t:.6g}: {e}") from e
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # A non-finite stage always propagates into the update
    if not np.all(np.isfinite(x_next)):
        raise NumericalError(f"Non-finite state after RK4 step at t={t:.6g}")
    return x_next
