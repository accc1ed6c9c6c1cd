from .core import (
    AugmentedCloud,
    DegenerateCloudError,
    FilterRecord,
    ParticleCloud,
    ess,
    multinomial_resample,
    normalize,
)
from .liu_west import AuxiliaryLiuWestFilter, LiuWestConfig, LiuWestFilter, kernel_shrinkage
from .sisr import (
    BootstrapProposal,
    InflatedTransitionProposal,
    SISRFilter,
    bootstrap_loglik,
    sisr_init,
    sisr_step,
)
from .swarm import ParticleSwarmFilter, SwarmBundle, aggregate, swarm_init, swarm_step

ALGORITHMS = {
    "sisr": SISRFilter,
    "lw1": AuxiliaryLiuWestFilter,
    "lw2": LiuWestFilter,
    "swarm": ParticleSwarmFilter,
}

__all__ = [
    "ALGORITHMS",
    "AugmentedCloud",
    "AuxiliaryLiuWestFilter",
    "BootstrapProposal",
    "DegenerateCloudError",
    "FilterRecord",
    "InflatedTransitionProposal",
    "LiuWestConfig",
    "LiuWestFilter",
    "ParticleCloud",
    "ParticleSwarmFilter",
    "SISRFilter",
    "SwarmBundle",
    "aggregate",
    "bootstrap_loglik",
    "ess",
    "kernel_shrinkage",
    "multinomial_resample",
    "normalize",
    "sisr_init",
    "sisr_step",
    "swarm_init",
    "swarm_step",
]
