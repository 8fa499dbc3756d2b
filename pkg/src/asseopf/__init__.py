"""Adaptive stochastic spectral embedding surrogates for probabilistic AC-OPF."""

__version__ = "0.1.0"

from .uncertainty import (
    MarginalDistribution,
    RandomVector,
    SampleMatrix,
    Space,
    eval_marginal,
    sample_qmc,
    to_physical,
    to_unit,
)
from .sparse_pce import (
    MultiIndexSet,
    PceModel,
    adaptive_fit,
    hybrid_lar_fit,
    hyperbolic_index_set,
    loo_error,
    pce_moments,
    sobol_first_order,
)
from .sse import (
    SseConfig,
    SseNode,
    SseTree,
    Subdomain,
    compute_residuals,
    evaluate_sse,
    fit_asse,
    refinement_score,
    select_refinement_domain,
    split_node,
)
from .analytics import SurrogateReport, compare_methods, summarize, validation_error

__all__ = [
    "MarginalDistribution",
    "RandomVector",
    "SampleMatrix",
    "Space",
    "eval_marginal",
    "sample_qmc",
    "to_physical",
    "to_unit",
    "MultiIndexSet",
    "PceModel",
    "adaptive_fit",
    "hybrid_lar_fit",
    "hyperbolic_index_set",
    "loo_error",
    "pce_moments",
    "sobol_first_order",
    "SseConfig",
    "SseNode",
    "SseTree",
    "Subdomain",
    "compute_residuals",
    "evaluate_sse",
    "fit_asse",
    "refinement_score",
    "select_refinement_domain",
    "split_node",
    "SurrogateReport",
    "compare_methods",
    "summarize",
    "validation_error",
]
