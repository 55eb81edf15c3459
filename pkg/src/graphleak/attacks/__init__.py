"""Graph reconstruction attacks: similarity scoring and structure learning."""

from .gsl import (
    ConfigurationError,
    GeneratorState,
    GslConfig,
    LossBreakdown,
    ReconScore,
    VARIANT_REQUIREMENTS,
    black_box_labels,
    combine_generators,
    generator_forward,
    generator_scores,
    init_generator,
    run_gsl_attack,
)
from .similarity import cosine_pair_scores, explain_sim, feature_sim, lsa_posterior

__all__ = [
    "ConfigurationError",
    "GeneratorState",
    "GslConfig",
    "LossBreakdown",
    "ReconScore",
    "VARIANT_REQUIREMENTS",
    "black_box_labels",
    "combine_generators",
    "cosine_pair_scores",
    "explain_sim",
    "feature_sim",
    "generator_forward",
    "generator_scores",
    "init_generator",
    "lsa_posterior",
    "run_gsl_attack",
]
