"""
Real polynomials in ascending-degree order and Hurwitz tests.

Two independent Hurwitz tests are provided: companion-matrix eigenvalues
(the default) and the Routh array. They must agree on every input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import companion

from common.errors import ValidationError

logger = logging.getLogger(__name__)

# Roots with real part above -HURWITZ_MARGIN * max(1, |root|) count as unstable.
HURWITZ_MARGIN = 1e-10


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, coefficients in ascending degree (c0 + c1 s + ...)."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        values = [float(c) for c in self.coeffs]
        if not all(np.isfinite(values)):
            raise ValidationError(f"Polynomial coefficients must be finite: {values}")
        # Strip zero leading (highest-degree) coefficients
        while len(values) > 1 and values[-1] == 0.0:
            values.pop()
        object.__setattr__(self, "coeffs", tuple(values))

    @classmethod
    def from_roots(cls, roots: Iterable[complex]) -> "Polynomial":
        """Monic polynomial with the given roots (must be conjugate-closed)."""
        descending = np.poly(np.asarray(list(roots), dtype=complex))
        if np.max(np.abs(descending.imag)) > 1e-9 * max(1.0, np.max(np.abs(descending.real))):
            raise ValidationError("Roots are not closed under conjugation")
        return cls(tuple(descending.real[::-1]))

    @classmethod
    def from_descending(cls, coeffs: Sequence[float]) -> "Polynomial":
        return cls(tuple(float(c) for c in coeffs)[::-1])

    @property
    def degree(self) -> int:
        if self.is_zero:
            return -1
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0.0

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    def monic(self) -> "Polynomial":
        if self.is_zero:
            raise ValidationError("Zero polynomial cannot be normalized")
        return Polynomial(tuple(c / self.leading for c in self.coeffs))

    def descending(self) -> np.ndarray:
        return np.asarray(self.coeffs[::-1], dtype=float)

    def __call__(self, s: complex) -> complex:
        return np.polyval(self.descending(), s)

    def roots(self) -> np.ndarray:
        """Roots from the eigenvalues of the companion matrix."""
        self._require_degree()
        if self.degree == 1:
            return np.array([-self.coeffs[0] / self.coeffs[1]], dtype=complex)
        return np.linalg.eigvals(companion(self.descending())).astype(complex)

    def _require_degree(self) -> None:
        if self.is_zero:
            raise ValidationError("Zero polynomial has no Hurwitz status")
        if self.degree < 1:
            raise ValidationError(f"Polynomial must have degree >= 1, got {self.degree}")


def routh_array(p: Polynomial) -> np.ndarray:
    """
    Build the Routh array of p.

    Rows are padded with zeros; row k has the coefficients of the s^(n-k)
    auxiliary polynomial. A zero in the first column stops construction and
    the remaining rows are left as zeros.
    """
    p._require_degree()
    desc = p.descending()
    n = p.degree
    width = n // 2 + 1
    table = np.zeros((n + 1, width))
    table[0, : len(desc[0::2])] = desc[0::2]
    table[1, : len(desc[1::2])] = desc[1::2]
    for row in range(2, n + 1):
        pivot = table[row - 1, 0]
        if pivot == 0.0:
            break
        for col in range(width - 1):
            table[row, col] = (
                pivot * table[row - 2, col + 1] - table[row - 2, 0] * table[row - 1, col + 1]
            ) / pivot
    return table


def _routh_hurwitz(p: Polynomial) -> bool:
    first_column = routh_array(p)[:, 0] * np.sign(p.leading)
    scale = max(1.0, float(np.max(np.abs(p.coeffs))))
    return bool(np.all(first_column > HURWITZ_MARGIN * scale))


def _eigen_hurwitz(p: Polynomial) -> bool:
    roots = p.roots()
    bound = -HURWITZ_MARGIN * np.maximum(1.0, np.abs(roots))
    return bool(np.all(roots.real < bound))


def is_hurwitz(p: Polynomial, method: str = "eigen") -> bool:
    """True iff every root of p has strictly negative real part."""
    if method == "eigen":
        p._require_degree()
        return _eigen_hurwitz(p)
    if method == "routh":
        return _routh_hurwitz(p)
    raise ValidationError(f"Unknown Hurwitz method: {method!r}")


def check_pole_set(poles: Iterable[complex], count: int | None = None, rtol: float = 1e-9) -> np.ndarray:
    """
    Validate a requested pole set and return it as a complex array.

    Poles must be finite, strictly in the open left half-plane and closed under
    complex conjugation (each non-real pole paired with its conjugate).
    """
    values = np.asarray(list(poles), dtype=complex)
    if count is not None and values.size != count:
        raise ValidationError(f"Expected {count} poles, got {values.size}")
    if values.size == 0:
        raise ValidationError("Pole set is empty")
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"Poles must be finite: {values}")
    unstable = values[values.real >= 0]
    if unstable.size:
        raise ValidationError(f"Poles must have negative real part, got {unstable.tolist()}")

    scale = max(1.0, float(np.max(np.abs(values))))
    unmatched = list(values[np.abs(values.imag) > rtol * scale])
    while unmatched:
        pole = unmatched.pop(0)
        distances = [abs(other - np.conj(pole)) for other in unmatched]
        if not distances or min(distances) > rtol * scale * 1e3:
            raise ValidationError(f"Pole {pole} has no conjugate partner")
        unmatched.pop(int(np.argmin(distances)))
    return values
