"""Wide-field motion direction estimation with two-quadrant detectors.

Two variants share one front end (retina, lamina, medulla split, delay):
``classic`` correlates the half-wave rectified ON/OFF channels directly,
``improved`` first passes each channel through a local max operation.
"""
__version__ = "0.1.0"

from .config import ConfigError, ModelConfig
from .correlator import (DIRECTION_NAMES, DIRECTIONS, VARIANTS, DirectionalField,
                         DirectionEstimate, estimate_direction, lptc_output, normalize)
from .estimator import MotionDirectionEstimator
from .metrics import MetricsReport, ReportCell, ThresholdSchedule, compare_models
from .model import MotionModel
from .pipeline import Pipeline
from .stimulus import StimulusSpec, generate, read_sequence, write_sequence

__all__ = [
    "__version__", "ConfigError", "ModelConfig", "DIRECTION_NAMES", "DIRECTIONS", "VARIANTS",
    "DirectionalField", "DirectionEstimate", "estimate_direction", "lptc_output", "normalize",
    "MotionDirectionEstimator", "MetricsReport", "ReportCell", "ThresholdSchedule",
    "compare_models", "MotionModel", "Pipeline", "StimulusSpec", "generate", "read_sequence",
    "write_sequence",
]
