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

from common.errors import RipError
from common.settings import configure_logging, get_settings
from workflow.commands import cmd_analyze, cmd_simulate, cmd_synthesize
from workflow.config import load_config


def main():
    """Design the gains, run the balance-and-track scenario and analyze its trace."""
    configure_logging()
    settings = get_settings()
    config_dir = Path(project_root) / settings.config_dir
    out = Path(project_root) / settings.output_dir / "bench_scenario.csv"

    print("🚀 Balance-and-track experiment")
    print("=" * 60)
    try:
        design = cmd_synthesize(load_config(config_dir / "synthesize_bench.json"))
        scenario = load_config(config_dir / "bench_scenario.json")
        sim = cmd_simulate(scenario, out)
        analysis = cmd_analyze(scenario, sim.csv_path)
    except RipError as e:
        print(f"❌ {e}")
        return e.exit_code

    print("\n🎯 Summary")
    print("=" * 60)
    print(f"Placed gains:        {[round(k, 3) for k in design.gains.as_array()]}")
    print(f"Trace:               {sim.csv_path}")
    print(f"Worst steady error:  {sim.summary.worst_steady_theta_error_deg:.3f} deg")
    print(f"kappa / sign-safe:   {analysis.report.kappa:.4f} / {analysis.report.kappa_abs:.4f}")
    if analysis.cauchy is not None:
        print(f"Final Cauchy d(T):   {analysis.cauchy.final:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
