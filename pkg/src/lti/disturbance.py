"""
Step-sequence disturbance model.

A bounded disturbance is approximated by a sum of delayed unit steps,
T_d(t) ~ sum_i alpha_i * r(t - t_i), with r(t) = 1 for t >= 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from common.errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DisturbanceProfile:
    """Ordered (t_i, alpha_i) step pairs; times strictly increasing."""

    steps: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        steps = tuple((float(t), float(a)) for t, a in self.steps)
        for t, a in steps:
            if not (math.isfinite(t) and math.isfinite(a)):
                raise ValidationError(f"Disturbance step ({t}, {a}) is not finite")
        times = [t for t, _ in steps]
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise ValidationError(f"Disturbance step times must be strictly increasing: {times}")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "DisturbanceProfile":
        return cls(tuple((p[0], p[1]) for p in pairs))

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.steps], dtype=float)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for _, a in self.steps], dtype=float)

    @property
    def last_time(self) -> float:
        return self.steps[-1][0] if self.steps else 0.0

    def value_at(self, t: float) -> float:
        total = 0.0
        for t_i, a_i in self.steps:
            if t >= t_i:
                total += a_i
            else:
                break
        return total

    def reconstruct(self, times: Sequence[float]) -> np.ndarray:
        """Cumulative step sum evaluated at each time."""
        return np.array([self.value_at(t) for t in times], dtype=float)

    def to_pairs(self) -> list[list[float]]:
        return [[t, a] for t, a in self.steps]


def approximate_disturbance(
    samples: Sequence[Sequence[float]], tolerance: float = 0.0
) -> DisturbanceProfile:
    """
    Greedy step approximation of a sampled signal.

    The held level only changes when a sample deviates from it by more than
    `tolerance`; each change becomes one step whose amplitude is the
    increment. The first sample always opens the profile.
    """
    if tolerance < 0 or not math.isfinite(tolerance):
        raise ValidationError(f"Tolerance must be a finite non-negative number, got {tolerance}")
    if len(samples) == 0:
        return DisturbanceProfile()

    pairs = []
    for sample in samples:
        if len(sample) != 2:
            raise ValidationError(f"Each sample must be a (t, value) pair, got {sample!r}")
        pairs.append((float(sample[0]), float(sample[1])))
    times = [t for t, _ in pairs]
    if any(later <= earlier for earlier, later in zip(times, times[1:])):
        raise ValidationError("Samples must be strictly time-ordered")

    t0, level = pairs[0]
    steps = [(t0, level)]
    for t, value in pairs[1:]:
        if abs(value - level) > tolerance:
            steps.append((t, value - level))
            level = value

    logger.debug("Approximated %d samples with %d steps (tol=%g)", len(pairs), len(steps), tolerance)
    return DisturbanceProfile(tuple(steps))
