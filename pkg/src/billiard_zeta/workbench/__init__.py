"""Configuration, persistence, reports and the command-line pipeline."""

from .config import RunConfig, load_config, parse_config
from .pipeline import ALL_STAGES, Run, StageError, run_pipeline
from .store import load_orbits, save_orbits

__all__ = ["ALL_STAGES", "Run", "RunConfig", "StageError", "load_config", "load_orbits",
           "parse_config", "run_pipeline", "save_orbits"]
