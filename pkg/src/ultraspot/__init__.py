"""Predict entry and exit of a narrow mmWave beam-alignment spot between two UAVs.

Carrier-phase ranging from several airframe-mounted devices is fused into a
center distance, RSSI footprints gate the approach and check pose, and a
likelihood scan localizes the spot from a recorded pass.
"""

__version__ = "0.1.0"

from .errors import UltraspotError  # noqa: E402
from .estimator import DetectionPipeline, PipelineConfig  # noqa: E402
from .likelihood import grid_scan, likelihood_ratio  # noqa: E402
from .sim import ScenarioConfig, monte_carlo, run_scenario, simulate  # noqa: E402

__all__ = [
    "__version__",
    "DetectionPipeline",
    "PipelineConfig",
    "ScenarioConfig",
    "UltraspotError",
    "grid_scan",
    "likelihood_ratio",
    "monte_carlo",
    "run_scenario",
    "simulate",
]
