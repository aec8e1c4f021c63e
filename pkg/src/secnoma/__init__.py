"""Power-minimizing beamforming for a secure two-user MISO NOMA downlink with
artificial noise and a non-linear energy-harvesting eavesdropper."""

from .algorithms import SolveReport, SolverOptions, run_algorithm1, run_algorithm2, solve
from .baselines import tdma_min_power
from .errors import (
    ConfigError,
    DimensionError,
    IndefiniteMatrixError,
    InfeasibleError,
    NotHermitianError,
    RandomizationFailure,
    SecnomaError,
    UnattainableEHError,
)
from .model import (
    ChannelRealization,
    CovarianceDesign,
    EhModel,
    Requirements,
    VectorDesign,
    eh_input_threshold,
    secrecy_rates,
    verify_design,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "ConfigError",
    "CovarianceDesign",
    "DimensionError",
    "EhModel",
    "IndefiniteMatrixError",
    "InfeasibleError",
    "NotHermitianError",
    "RandomizationFailure",
    "Requirements",
    "SecnomaError",
    "SolveReport",
    "SolverOptions",
    "UnattainableEHError",
    "VectorDesign",
    "eh_input_threshold",
    "run_algorithm1",
    "run_algorithm2",
    "secrecy_rates",
    "solve",
    "tdma_min_power",
    "verify_design",
]
