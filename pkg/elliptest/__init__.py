"""elliptest - KL-divergence test for elliptical distributions."""

import json
import os as _os

# Importing generators registers the built-in simulation settings
from .generators import SettingSpec, generate, sample_sphere, true_moments

from .config import ExperimentGrid, TestConfig
from .decorators import register_setting
from .exceptions import (
    ConfigError,
    DegenerateDirection,
    DuplicatePoints,
    ElliptestError,
    InvalidInput,
    InvalidK,
    NotPositiveDefinite,
    WeightInfeasible,
)
from .inference import PairwiseResult, TestResult, pairwise_test, run_test
from .kl_entropy import choose_k, estimate_entropy, l2_optimal_weights
from .setting_registry import get_registered_settings_metadata
from .simharness import RejectionTable, emit_table, run_grid

_basepath = _os.path.dirname(__file__)
_filepath = _os.path.abspath(_os.path.join(_basepath, "package-info.json"))
with open(_filepath) as f:
    package = json.load(f)

package_name = package["name"].replace(" ", "_").replace("-", "_")
__version__ = package["version"]

# Public API exports
__all__ = [
    "ConfigError",
    "DegenerateDirection",
    "DuplicatePoints",
    "ElliptestError",
    "ExperimentGrid",
    "InvalidInput",
    "InvalidK",
    "NotPositiveDefinite",
    "PairwiseResult",
    "RejectionTable",
    "SettingSpec",
    "TestConfig",
    "TestResult",
    "WeightInfeasible",
    "choose_k",
    "emit_table",
    "estimate_entropy",
    "generate",
    "get_registered_settings_metadata",
    "l2_optimal_weights",
    "pairwise_test",
    "register_setting",
    "run_grid",
    "run_test",
    "sample_sphere",
    "true_moments",
]
