"""
Simulation records, their CSV form and per-segment summaries.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from common.errors import ValidationError

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "t",
    "theta_ref",
    "theta",
    "alpha",
    "theta_dot_est",
    "alpha_dot_est",
    "x0",
    "v_cmd",
    "v_sat",
    "engaged",
    "terminated",
)
FLAG_COLUMNS = ("engaged", "terminated")
COLUMN_INDEX = {name: i for i, name in enumerate(CSV_COLUMNS)}


def config_hash(tree: dict) -> str:
    """sha256 of the canonical JSON form of a config tree."""
    payload = json.dumps(tree, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(eq=False)
class Trace:
    """
    Uniformly sampled record of a pendulum run.

    `data` holds one row per plant step with the CSV_COLUMNS layout. The
    optional `plant_state` holds the true [theta, alpha, theta', alpha'] per
    row; it is kept in memory only.
    """

    data: np.ndarray
    metadata: dict = field(default_factory=dict)
    plant_state: Optional[np.ndarray] = None

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.shape[1] != len(CSV_COLUMNS):
            raise ValidationError(f"Trace rows need {len(CSV_COLUMNS)} columns, got {self.data.shape[1]}")
        if self.data.shape[0] == 0:
            raise ValidationError("Trace is empty")
        if np.any(np.diff(self.data[:, 0]) <= 0):
            raise ValidationError("Trace time must be strictly increasing")
        for name in FLAG_COLUMNS:
            if np.any(np.diff(self.column(name)) < 0):
                raise ValidationError(f"Trace flag {name!r} must latch on")
        if self.plant_state is not None:
            self.plant_state = np.asarray(self.plant_state, dtype=float)
            if self.plant_state.shape != (self.data.shape[0], 4):
                raise ValidationError("plant_state must have one 4-entry row per trace row")

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, COLUMN_INDEX[name]]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def terminated(self) -> bool:
        return bool(self.column("terminated")[-1])

    @property
    def engaged_time(self) -> Optional[float]:
        engaged = np.flatnonzero(self.column("engaged") > 0)
        return float(self.t[engaged[0]]) if engaged.size else None

    def state_matrix(self) -> np.ndarray:
        """
        Tracking-error state Z = (x0, theta - theta_ref, alpha, theta', alpha').

        True rates are used when the plant state is available, otherwise the
        controller's estimates from the CSV columns.
        """
        if self.plant_state is not None:
            theta, alpha, theta_dot, alpha_dot = self.plant_state.T
        else:
            theta = self.column("theta")
            alpha = self.column("alpha")
            theta_dot = self.column("theta_dot_est")
            alpha_dot = self.column("alpha_dot_est")
        return np.column_stack(
            [self.column("x0"), theta - self.column("theta_ref"), alpha, theta_dot, alpha_dot]
        )

    def to_csv(self, path: Path | str) -> Path:
        """Write the CSV and a `.meta.json` sidecar holding the metadata."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fmt = ["%.9g"] * (len(CSV_COLUMNS) - len(FLAG_COLUMNS)) + ["%d"] * len(FLAG_COLUMNS)
        np.savetxt(path, self.data, delimiter=",", header=",".join(CSV_COLUMNS), comments="", fmt=fmt)
        meta_path = metadata_path(path)
        with open(meta_path, "w", encoding="utf-8") as f:
            json.dump(self.metadata, f, indent=2, sort_keys=True)
        logger.info("Wrote trace with %d rows to %s", len(self), path)
        return path

    @classmethod
    def from_csv(cls, path: Path | str) -> "Trace":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValidationError(f"Unexpected trace header in {path}: {header}")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        metadata = {}
        meta_path = metadata_path(path)
        if meta_path.exists():
            with open(meta_path, "r", encoding="utf-8") as f:
                metadata = json.load(f)
        return cls(data=data, metadata=metadata)


def metadata_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + ".meta.json")


@dataclass(eq=False)
class StateTrace:
    """Time series of the augmented state Z from an ideal state-feedback run."""

    t: np.ndarray
    Z: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        if self.t.size == 0 or self.Z.shape[0] != self.t.size:
            raise ValidationError("StateTrace needs one state row per time sample")
        if np.any(np.diff(self.t) <= 0):
            raise ValidationError("StateTrace time must be strictly increasing")

    def __len__(self) -> int:
        return self.t.size

    def state_matrix(self) -> np.ndarray:
        return self.Z


@dataclass(frozen=True)
class SegmentSummary:
    start: float
    end: float
    theta_ref_deg: float
    steady_theta_error_deg: float
    steady_alpha_max_deg: float


@dataclass(frozen=True)
class TraceSummary:
    engaged_time: Optional[float]
    terminated: bool
    final_time: float
    max_abs_alpha_after_engagement_deg: float
    max_abs_v_sat: float
    segments: tuple[SegmentSummary, ...]

    @property
    def worst_steady_theta_error_deg(self) -> float:
        errors = [s.steady_theta_error_deg for s in self.segments]
        return max(errors) if errors else math.nan


def summarize_trace(trace: Trace, settle_window: float = 2.0) -> TraceSummary:
    """
    Reduce a trace to the numbers the simulate report prints.

    Segments are maximal runs of constant theta_ref. For each segment the last
    `settle_window` seconds give the steady theta error and the largest |alpha|;
    segments shorter than the window are skipped.
    """
    t = trace.t
    ref = trace.column("theta_ref")
    theta = trace.column("theta")
    alpha = trace.column("alpha")
    engaged = trace.column("engaged") > 0

    after = np.abs(alpha[engaged])
    max_alpha = float(np.degrees(after.max())) if after.size else math.nan

    edges = np.flatnonzero(np.diff(ref) != 0) + 1
    bounds = np.concatenate(([0], edges, [len(t)]))
    segments = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        start, end = float(t[lo]), float(t[hi - 1])
        if end - start < settle_window:
            continue
        window = (t[lo:hi] >= end - settle_window) & engaged[lo:hi]
        if not np.any(window):
            continue
        err = np.abs(theta[lo:hi][window] - ref[lo:hi][window])
        segments.append(
            SegmentSummary(
                start=start,
                end=end,
                theta_ref_deg=float(np.degrees(ref[lo])),
                steady_theta_error_deg=float(np.degrees(err.max())),
                steady_alpha_max_deg=float(np.degrees(np.abs(alpha[lo:hi][window]).max())),
            )
        )

    return TraceSummary(
        engaged_time=trace.engaged_time,
        terminated=trace.terminated,
        final_time=float(t[-1]),
        max_abs_alpha_after_engagement_deg=max_alpha,
        max_abs_v_sat=float(np.abs(trace.column("v_sat")).max()),
        segments=tuple(segments),
    )
