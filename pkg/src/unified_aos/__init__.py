"""Compositional adaptive operator selection hosted in differential evolution."""
from .bench import Problem, make_problem
from .config import AosConfig, DEParams, load_config, save_config
from .engine import RunResult, run
from .presets import preset

__all__ = ["AosConfig", "DEParams", "Problem", "RunResult", "load_config", "make_problem",
           "preset", "run", "save_config"]
__version__ = "0.1.0"
