import os
import sys

# Add src directory to Python path
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(project_root, "src"))

from workflow.cli import main


if __name__ == "__main__":
    sys.exit(main())
