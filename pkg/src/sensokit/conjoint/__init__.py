from .longform import Factor, LongTable, melt
from .terms import ModelSpec, build_terms, term_name, random_term_name
from .reml import FittedLmm, fit_reml
from .inference import (
    anova_fixed,
    effect_plot_payload,
    ls_means,
    pairwise_differences,
    test_random,
)
from .driver import ConjointResult, run_conjoint

__all__ = [
    "Factor",
    "LongTable",
    "melt",
    "ModelSpec",
    "build_terms",
    "term_name",
    "random_term_name",
    "FittedLmm",
    "fit_reml",
    "anova_fixed",
    "test_random",
    "ls_means",
    "pairwise_differences",
    "effect_plot_payload",
    "ConjointResult",
    "run_conjoint",
]
