"""Sequential Monte Carlo forecasting for a stochastic volatility model with leverage."""
from .filters import (
    AuxiliaryLiuWestFilter,
    FilterRecord,
    LiuWestConfig,
    LiuWestFilter,
    ParticleCloud,
    ParticleSwarmFilter,
    SISRFilter,
)
from .kernels import BACKEND
from .model import SV, ParameterVector
from .pmmh import ProposalConfig, averaged_log_likelihood, pmmh_run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "SV",
    "AuxiliaryLiuWestFilter",
    "FilterRecord",
    "LiuWestConfig",
    "LiuWestFilter",
    "ParameterVector",
    "ParticleCloud",
    "ParticleSwarmFilter",
    "ProposalConfig",
    "SISRFilter",
    "averaged_log_likelihood",
    "pmmh_run",
]
