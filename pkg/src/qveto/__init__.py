"""Anonymous veto voting simulated over Bell, GHZ and cluster states."""

from .election import (
    ElectionConfig,
    ElectionReport,
    IterationResult,
    noise_sweep,
    run_election,
)
from .noise import (
    NoiseModel,
    bundled_calibration,
    channel_for,
    device_model_from_calibration,
    load_calibration,
)
from .protocols import (
    Decision,
    VoteVector,
    protocol_a_run,
    protocol_b_run,
    variant_by_name,
)
from .qcore import fidelity

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "ElectionConfig",
    "ElectionReport",
    "IterationResult",
    "NoiseModel",
    "VoteVector",
    "bundled_calibration",
    "channel_for",
    "device_model_from_calibration",
    "fidelity",
    "load_calibration",
    "noise_sweep",
    "protocol_a_run",
    "protocol_b_run",
    "run_election",
    "variant_by_name",
]
