"""Sliding-mode control of second-order plants with mismatched disturbances.

The package compares four controllers (SMC, integral SMC, SMC with a basic
nonlinear disturbance observer and SMC with a self-learning neuro-fuzzy
observer) on a benchmark plant, and scores them with a small metrics suite.
"""

from .controllers import ControllerGains, ControllerKind
from .config import PRESETS, config_from_dict, config_to_dict, dump_config, load_config, preset
from .errors import ConfigError, DivergenceError, MismatchSmcError, SingularInputGainError
from .model import DisturbanceProfile, PlantModel, PlantState, Segment, benchmark_plant, scenario_profile
from .neurofuzzy import NfsParameters, nfs_forward
from .simulation import COLUMNS, NfsConfig, RunMetrics, ScenarioConfig, TrajectoryRecord, compute_metrics, simulate

__version__ = "0.1.0"

__all__ = [
    "COLUMNS",
    "ConfigError",
    "ControllerGains",
    "ControllerKind",
    "DisturbanceProfile",
    "DivergenceError",
    "MismatchSmcError",
    "NfsConfig",
    "NfsParameters",
    "PRESETS",
    "PlantModel",
    "PlantState",
    "RunMetrics",
    "ScenarioConfig",
    "Segment",
    "SingularInputGainError",
    "TrajectoryRecord",
    "benchmark_plant",
    "compute_metrics",
    "config_from_dict",
    "config_to_dict",
    "dump_config",
    "load_config",
    "nfs_forward",
    "preset",
    "scenario_profile",
    "simulate",
]
