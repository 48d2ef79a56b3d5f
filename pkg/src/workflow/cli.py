"""
Command-line front end.

    rip synthesize --config configs/synthesize_bench.json
    rip simulate   --config configs/bench_scenario.json --out outputs/bench.csv
    rip analyze    --config configs/bench_scenario.json --trace outputs/bench.csv
    rip lti-demo   --config configs/lti_demo.json
    rip batch      configs/a.json configs/b.json --out outputs/sweep

Exit codes: 0 success, 2 validation failure, 3 numerical or run failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from common.errors import EXIT_IO, EXIT_OK, RipError
from common.settings import configure_logging, get_settings
from workflow.batch import run_batch
from workflow.commands import cmd_analyze, cmd_lti_demo, cmd_simulate, cmd_synthesize
from workflow.config import load_config
from workflow.report import print_header, print_pairs, print_status

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rip", description="Rotary inverted pendulum integral control toolkit")
    parser.add_argument("--log-level", default=None, help="Overrides RIP_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out: bool = True) -> None:
        p.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        p.add_argument(
            "--override", action="append", default=[], metavar="KEY=VALUE",
            help="Set a config value, e.g. runtime.v_sat=6 (repeatable)",
        )
        p.add_argument("--plant", choices=("full", "reduced"), default=None, help="Plant model to integrate")
        if out:
            p.add_argument("--out", type=Path, default=None, help="Output CSV path")

    common(sub.add_parser("synthesize", help="Place closed-loop poles and print the gains"), out=False)
    common(sub.add_parser("simulate", help="Run a scenario and write its trace"))
    analyze = sub.add_parser("analyze", help="Boundedness constants and convergence checks")
    common(analyze, out=False)
    analyze.add_argument("--trace", type=Path, default=None, help="Trace CSV to check")
    common(sub.add_parser("lti-demo", help="Integral control of a chain-of-integrators plant"))

    batch = sub.add_parser("batch", help="Run several scenario configs")
    batch.add_argument("configs", nargs="+", type=Path)
    batch.add_argument("--out", type=Path, default=None, help="Output directory")
    batch.add_argument("--workers", type=int, default=None)
    batch.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def _overrides(args: argparse.Namespace) -> list[str]:
    overrides = list(args.override)
    if getattr(args, "plant", None):
        overrides.append(f"plant.mode={args.plant}")
    return overrides


def _default_out(name: str) -> Path:
    return get_settings().output_dir / name


def run(args: argparse.Namespace) -> int:
    if args.command == "batch":
        outcomes = run_batch(args.configs, args.out or _default_out("batch"), args.workers, args.override)
        print_header("📦 Batch results")
        print_pairs([(Path(o.config).name, o.csv_path if o.ok else (o.error or "terminated")) for o in outcomes])
        failed = [o for o in outcomes if not o.ok]
        print_status(not failed, f"{len(outcomes) - len(failed)}/{len(outcomes)} scenarios completed")
        return EXIT_OK if not failed else max(o.exit_code for o in failed)

    cfg = load_config(args.config, _overrides(args))
    if args.command == "synthesize":
        cmd_synthesize(cfg)
    elif args.command == "simulate":
        cmd_simulate(cfg, args.out or _default_out("trace.csv"))
    elif args.command == "analyze":
        cmd_analyze(cfg, args.trace)
    elif args.command == "lti-demo":
        cmd_lti_demo(cfg, args.out or _default_out("lti_demo.csv"))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and map failures to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return run(args)
    except RipError as e:
        logger.error("%s", e)
        print_status(False, str(e))
        return e.exit_code
    except OSError as e:
        logger.error("I/O failure: %s", e)
        print_status(False, f"I/O failure: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
