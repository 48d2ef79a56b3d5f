import os
import logging
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


@dataclass(frozen=True)
class Settings:
    log_level: str
    output_dir: Path
    config_dir: Path
    batch_workers: int


def get_settings() -> Settings:
    """Read process settings from the environment (and .env if present)."""
    workers = os.getenv("RIP_BATCH_WORKERS", "1")
    try:
        batch_workers = max(1, int(workers))
    except ValueError:
        batch_workers = 1
    return Settings(
        log_level=os.getenv("RIP_LOG_LEVEL", "INFO").upper(),
        output_dir=Path(os.getenv("RIP_OUTPUT_DIR", "outputs")),
        config_dir=Path(os.getenv("RIP_CONFIG_DIR", "configs")),
        batch_workers=batch_workers,
    )


def configure_logging(level: str | None = None) -> None:
    """Set up root logging once; later calls only adjust the level."""
    level_name = (level or get_settings().log_level).upper()
    numeric = getattr(logging, level_name, logging.INFO)
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=numeric, format=LOG_FORMAT)
    else:
        root.setLevel(numeric)
