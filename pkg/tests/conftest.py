import math
import os
import sys
from pathlib import Path

import pytest

# Add the src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from design.synthesis import GainVector
from plant.presets import DEFAULT_PHYSICAL, IDENTIFIED_DYNAMICS, BENCH_GAINS, BENCH_POLES
from sim.controller import ControllerRuntimeConfig

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"


@pytest.fixture
def identified():
    return IDENTIFIED_DYNAMICS


@pytest.fixture
def physical():
    return DEFAULT_PHYSICAL


@pytest.fixture
def bench_gains():
    return GainVector(*BENCH_GAINS)


@pytest.fixture
def bench_poles():
    return list(BENCH_POLES)


@pytest.fixture
def runtime():
    """Bench hardware settings with a generous arm limit."""
    return ControllerRuntimeConfig(
        sample_period=1e-3,
        v_sat=15.0,
        filter_cutoff=20.0 * math.pi,
        antiwindup_reset=1.0,
        catch_angle=math.radians(20.0),
        theta_limit=math.radians(45.0),
    )


@pytest.fixture
def config_dir():
    return CONFIG_DIR
