"""
The four workflows behind the command line: synthesize, simulate, analyze
and lti-demo. Each takes a validated RunConfig, prints a summary and returns
its results.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from common.errors import DivergenceError, TerminatedRunError, ValidationError
from design.analysis import (
    BoundCheck,
    BoundednessReport,
    CauchyTable,
    boundedness_constants,
    cauchy_check,
    verify_bounded,
)
from design.synthesis import GainVector, augmented_pair, closed_loop_matrix, place_poles, pole_errors, poles_from_pairs
from lti.chain import ChainPlant, ChainTrace, GeneralController, simulate_chain, steady_state_value, synthesize_controller
from lti.polynomial import check_pole_set
from plant.linear import controllability_rank, state_space
from sim.simulator import run_scenario
from sim.trace import Trace, TraceSummary, summarize_trace
from workflow.config import (
    ConfigIOError,
    RunConfig,
    build_disturbance,
    build_dynamics,
    build_gains,
    build_poles,
    build_scenario,
)
from workflow.report import print_header, print_pairs, print_status, print_table, print_warning

logger = logging.getLogger(__name__)

MAX_LTI_ORDER = 6
FINAL_VALUE_TOL = 1e-3
DEFAULT_WINDOW = 1.0


@dataclass
class SynthesisResult:
    gains: GainVector
    requested: np.ndarray
    eigenvalues: np.ndarray
    rank_plant: int
    rank_augmented: int


def cmd_synthesize(cfg: RunConfig) -> SynthesisResult:
    """Place the requested poles and report gains, eigenvalues and ranks."""
    r = build_dynamics(cfg)
    poles = check_pole_set(build_poles(cfg), count=5)
    A1, U1 = state_space(r)
    rank_plant = controllability_rank(A1, U1)
    rank_augmented = controllability_rank(*augmented_pair(r))
    gains = place_poles(r, poles)
    cl = closed_loop_matrix(r, gains)
    worst = float(np.max(pole_errors(cl.poles, poles)))

    print_header("📐 Pole placement")
    print_pairs(
        [
            ("requested poles", sorted(poles, key=lambda p: (p.real, p.imag))),
            ("gains k0..k4", gains.as_array()),
            ("closed-loop poles", sorted(cl.poles, key=lambda p: (p.real, p.imag))),
            ("worst pole error", worst),
            ("rank ctrb (4-state)", rank_plant),
            ("rank ctrb (with int theta)", rank_augmented),
        ]
    )
    print_status(cl.is_stable, "closed loop is Hurwitz" if cl.is_stable else "closed loop is NOT Hurwitz")
    return SynthesisResult(gains, poles, cl.poles, rank_plant, rank_augmented)


@dataclass
class SimulationResult:
    trace: Trace
    summary: TraceSummary
    csv_path: Path


def write_trace(trace: Trace, out: Path) -> Path:
    try:
        return trace.to_csv(out)
    except OSError as e:
        raise ConfigIOError(f"Cannot write trace to {out}: {e}") from e


def cmd_simulate(cfg: RunConfig, out: Path) -> SimulationResult:
    """
    Run the configured scenario and write its trace CSV to `out`.

    Raises:
        DivergenceError: after the partial trace has been written.
        TerminatedRunError: the arm limit stopped the run; the trace is written.
    """
    sc = build_scenario(cfg)
    try:
        trace = run_scenario(sc)
    except DivergenceError as e:
        if e.trace is not None:
            write_trace(e.trace, out)
            print_status(False, f"Diverged at t={e.time:.4f} s; partial trace written to {out}")
        raise

    csv_path = write_trace(trace, out)
    summary = summarize_trace(trace)
    print_simulation_summary(summary, csv_path)
    if summary.terminated:
        raise TerminatedRunError(
            f"Arm limit reached at t={summary.final_time:.4f} s", trace=trace, time=summary.final_time
        )
    return SimulationResult(trace, summary, csv_path)


def print_simulation_summary(summary: TraceSummary, csv_path: Optional[Path] = None) -> None:
    print_header("🧪 Simulation summary")
    pairs = [
        ("engaged at [s]", summary.engaged_time),
        ("final time [s]", summary.final_time),
        ("max |alpha| after engage [deg]", summary.max_abs_alpha_after_engagement_deg),
        ("max |V_sat| [V]", summary.max_abs_v_sat),
        ("worst steady theta error [deg]", summary.worst_steady_theta_error_deg),
        ("terminated", summary.terminated),
    ]
    if csv_path is not None:
        pairs.append(("trace", str(csv_path)))
    print_pairs(pairs)
    if summary.segments:
        print()
        print_table(
            ["start", "end", "ref_deg", "err_deg", "max|alpha|_deg"],
            [
                (s.start, s.end, s.theta_ref_deg, s.steady_theta_error_deg, s.steady_alpha_max_deg)
                for s in summary.segments
            ],
        )
    print_status(not summary.terminated, "run completed" if not summary.terminated else "run terminated")


@dataclass
class AnalysisResult:
    report: BoundednessReport
    bound_check: Optional[BoundCheck] = None
    cauchy: Optional[CauchyTable] = None


def cmd_analyze(cfg: RunConfig, trace_path: Optional[Path] = None) -> AnalysisResult:
    """
    Boundedness constants for the configured loop; with a trace, also the
    bound check and the Cauchy table.
    """
    section = cfg.section("analysis")
    trace_path = trace_path or (Path(section["trace"]) if "trace" in section else None)
    trace = None
    if trace_path is not None:
        try:
            trace = Trace.from_csv(trace_path)
        except FileNotFoundError as e:
            raise ConfigIOError(f"Trace not found: {trace_path}") from e

    r = build_dynamics(cfg)
    gains = build_gains(cfg, r)
    cl = closed_loop_matrix(r, gains)
    if "z0_norm" in section:
        z0_norm = float(section["z0_norm"])
    elif trace is not None:
        z0_norm = float(np.linalg.norm(trace.state_matrix()[0]))
    else:
        z0_norm = 0.0
    report = boundedness_constants(cl, r, z0_norm, sign_safe=section.get("sign_safe", False))

    print_header("📏 Boundedness constants")
    print_pairs(
        [
            ("beta", report.beta),
            ("kappa", report.kappa),
            ("kappa (sign-safe)", report.kappa_abs),
            ("lambda1", report.lambda1),
            ("|Z0|", report.z0_norm),
            ("gamma_turn", report.gamma_turn),
            ("gamma*", report.gamma_star),
            ("z0_max", report.z0_max),
            ("normalization", report.normalization),
        ]
    )
    if report.kappa_discrepancy:
        print_warning("signed kappa is smaller than the sign-safe bound")
    if not report.feasible:
        print_warning("bound infeasible for this Z(0)")

    result = AnalysisResult(report)
    if trace is None:
        return result

    if report.feasible:
        result.bound_check = verify_bounded(trace, report.gamma_star)
        check = result.bound_check
        print_status(
            check.bounded,
            f"|Z(t)| <= gamma* on every sample (max {check.max_norm:.4g})"
            if check.bounded
            else f"bound violated first at t={check.violation_time:.4f} s",
        )
    window = float(section.get("window", DEFAULT_WINDOW))
    result.cauchy = cauchy_check(trace, window)
    table = result.cauchy
    print_header(f"🔁 Cauchy check (window {table.window:.3g} s)")
    print_table(["T", "d(T)"], table.rows(every=max(window, float(table.T[-1] - table.T[0]) / 20.0)))
    print_status(table.is_nonincreasing(), f"d(T) nonincreasing, final {table.final:.3e}")
    return result


@dataclass
class LtiDemoResult:
    trace: ChainTrace
    controller: GeneralController
    final_error: float
    predicted_final: Optional[float]
    csv_path: Path

    @property
    def rejected(self) -> bool:
        return self.final_error < FINAL_VALUE_TOL


def cmd_lti_demo(cfg: RunConfig, out: Path) -> LtiDemoResult:
    """Synthesize a chain controller, simulate a setpoint step under disturbances."""
    section = cfg.section("lti", required=True)
    if "a" not in section or "poles" not in section:
        raise ValidationError("lti needs plant coefficients 'a' and 'poles'")
    plant = ChainPlant(tuple(section["a"]))
    if plant.order > MAX_LTI_ORDER:
        raise ValidationError(f"Chain order must be at most {MAX_LTI_ORDER}, got {plant.order}")
    ctrl = synthesize_controller(plant, poles_from_pairs(section["poles"]))
    if not section.get("integral", True):
        ctrl = ctrl.without_integral()
    if "u_max" in section:
        ctrl = ctrl.with_saturation(float(section["u_max"]))
    dist = build_disturbance(section.get("disturbance", []))
    x_d = float(section.get("x_d", 1.0))
    duration = float(section.get("duration", 20.0))
    dt = float(section.get("dt", 1e-3))

    trace = simulate_chain(plant, ctrl, x_d, dist, duration, dt)
    try:
        csv_path = trace.to_csv(out)
    except OSError as e:
        raise ConfigIOError(f"Cannot write trace to {out}: {e}") from e

    final_error = abs(trace.final_output - x_d)
    total_step = float(dist.amplitudes.sum()) if dist.steps else 0.0
    try:
        predicted = steady_state_value(plant, ctrl, total_step, x_d)
    except ValidationError as e:
        logger.warning("No final value: %s", e)
        predicted = None

    print_header("📈 Chain plant demo")
    print_pairs(
        [
            ("order", plant.order),
            ("integral action", ctrl.integral),
            ("b0", ctrl.b0),
            ("b1..bn", ctrl.b),
            ("setpoint", x_d),
            ("disturbance steps", dist.to_pairs()),
            ("final output", trace.final_output),
            ("final |x - x_d|", final_error),
            ("predicted final value", predicted),
            ("trace", str(csv_path)),
        ]
    )
    result = LtiDemoResult(trace, ctrl, final_error, predicted, csv_path)
    if result.rejected:
        print_status(True, "disturbance rejected, output at setpoint")
    else:
        print_status(False, f"steady offset {final_error:.4g} remains")
    return result
