import json
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Add src directory to Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src_path = os.path.join(project_root, 'src')
sys.path.insert(0, src_path)

from common.settings import configure_logging, get_settings
from workflow.batch import run_batch

# Saturation levels and initial pendulum angles to sweep
V_SAT_LEVELS = [6.0, 10.0, 15.0]
ALPHA0_DEG = [5.0, 10.0, 15.0]


def write_variants(base_path: Path, out_dir: Path) -> list[Path]:
    """One config per (v_sat, alpha0) pair, derived from the bench scenario."""
    with open(base_path, 'r') as f:
        base = json.load(f)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for v_sat in V_SAT_LEVELS:
        for alpha0 in ALPHA0_DEG:
            tree = json.loads(json.dumps(base))
            tree["name"] = f"vsat{v_sat:g}_alpha{alpha0:g}"
            tree["runtime"]["v_sat"] = v_sat
            tree["initial"]["alpha_deg"] = alpha0
            path = out_dir / f"{tree['name']}.json"
            with open(path, 'w') as f:
                json.dump(tree, f, indent=2)
            paths.append(path)
    return paths


def main():
    configure_logging()
    settings = get_settings()
    output_dir = Path(project_root) / settings.output_dir / "sweep"
    configs = write_variants(Path(project_root) / settings.config_dir / "bench_scenario.json", output_dir / "configs")

    print(f"🚀 Sweeping {len(configs)} scenarios with {settings.batch_workers} worker(s)")
    outcomes = run_batch(configs, output_dir / "traces", settings.batch_workers)

    print("\n📊 Sweep results")
    print("=" * 60)
    for outcome in outcomes:
        name = Path(outcome.config).stem
        if outcome.ok:
            print(f"✅ {name:<20} worst theta error {outcome.worst_theta_error_deg:.3f} deg, "
                  f"max |alpha| {outcome.max_abs_alpha_deg:.2f} deg")
        else:
            print(f"❌ {name:<20} {outcome.error or 'terminated'}")
    return 0 if all(o.ok for o in outcomes) else 3


if __name__ == "__main__":
    sys.exit(main())
