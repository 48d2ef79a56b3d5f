"""
Scenario sweeps: several configs run in a process pool, one CSV each.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from tqdm import tqdm

from common.errors import EXIT_NUMERICAL, EXIT_OK, DivergenceError, RipError
from common.settings import get_settings
from sim.simulator import run_scenario
from sim.trace import summarize_trace
from workflow.commands import write_trace
from workflow.config import ConfigIOError, build_scenario, load_config

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchOutcome:
    config: str
    csv_path: Optional[str]
    ok: bool
    terminated: bool = False
    worst_theta_error_deg: Optional[float] = None
    max_abs_alpha_deg: Optional[float] = None
    error: Optional[str] = None
    exit_code: int = EXIT_OK


def run_one(config_path: str, out_dir: str, overrides: tuple[str, ...] = ()) -> BatchOutcome:
    """Load, run and write one scenario; errors become a failed outcome."""
    out = Path(out_dir) / f"{Path(config_path).stem}.csv"
    try:
        cfg = load_config(config_path, overrides)
        trace = run_scenario(build_scenario(cfg))
    except DivergenceError as e:
        if e.trace is None:
            return BatchOutcome(config_path, None, ok=False, error=str(e), exit_code=e.exit_code)
        try:
            write_trace(e.trace, out)
        except ConfigIOError as io:
            logger.error("%s: %s", config_path, io)
            return BatchOutcome(config_path, None, ok=False, error=f"{e}; {io}", exit_code=io.exit_code)
        return BatchOutcome(config_path, str(out), ok=False, error=str(e), exit_code=e.exit_code)
    except RipError as e:
        return BatchOutcome(config_path, None, ok=False, error=str(e), exit_code=e.exit_code)

    summary = summarize_trace(trace)
    try:
        write_trace(trace, out)
    except ConfigIOError as io:
        logger.error("%s: %s", config_path, io)
        return BatchOutcome(
            config_path, None, ok=False, terminated=summary.terminated, error=str(io), exit_code=io.exit_code
        )
    return BatchOutcome(
        config=config_path,
        csv_path=str(out),
        ok=not summary.terminated,
        terminated=summary.terminated,
        worst_theta_error_deg=summary.worst_steady_theta_error_deg,
        max_abs_alpha_deg=summary.max_abs_alpha_after_engagement_deg,
        exit_code=EXIT_NUMERICAL if summary.terminated else EXIT_OK,
    )


def run_batch(
    config_paths: Iterable[Path | str],
    out_dir: Path | str,
    workers: Optional[int] = None,
    overrides: Iterable[str] = (),
) -> list[BatchOutcome]:
    """
    Run every config, `workers` at a time (RIP_BATCH_WORKERS by default).

    Outcomes come back in the order of `config_paths`.
    """
    paths = [str(p) for p in config_paths]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    overrides = tuple(overrides)
    workers = workers or get_settings().batch_workers
    logger.info("Running %d scenarios with %d worker(s)", len(paths), workers)

    results: dict[int, BatchOutcome] = {}
    if workers <= 1:
        for i, path in enumerate(tqdm(paths, desc="Scenarios", unit="run")):
            results[i] = run_one(path, str(out_dir), overrides)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(run_one, path, str(out_dir), overrides): i for i, path in enumerate(paths)}
            for future in tqdm(as_completed(futures), total=len(futures), desc="Scenarios", unit="run"):
                results[futures[future]] = future.result()

    failed = [o for o in results.values() if not o.ok]
    if failed:
        logger.warning("%d of %d scenarios failed", len(failed), len(paths))
    return [results[i] for i in range(len(paths))]
