"""Candidate-pool-free active-learning Kriging-HDMR reliability analysis.

Builds a composite surrogate of a high-dimensional limit state function
from adaptively trained low-dimensional Kriging sub-models, then estimates
the failure probability by Monte Carlo simulation on the surrogate.
"""

from .distributions import (
    Distribution,
    sample_standard_normal,
    to_physical,
    to_standard,
)
from .errors import (
    ConfigError,
    DegenerateProbeError,
    EvaluationError,
    ModelFitError,
    RelhdmrError,
    StructureError,
)
from .hdmr import CompositeSurrogate, SubSurrogate, coupling_index, embed_point, sigma_bar
from .hdmr import predict as composite_predict
from .kriging import DoeSet, KrigingModel, correlation, fit, predict, predict_mean
from .mcs import McsResult, aggregate_runs, estimate_pf
from .pso import PsoResult, SwarmConfig, minimize
from .active_learning import (
    AlParams,
    LsfHandle,
    build_first_order,
    identify_couplings,
    refine_composite,
    run_analysis,
)

__version__ = "0.1.0"

__all__ = [
    "AlParams",
    "CompositeSurrogate",
    "ConfigError",
    "DegenerateProbeError",
    "Distribution",
    "DoeSet",
    "EvaluationError",
    "KrigingModel",
    "LsfHandle",
    "McsResult",
    "ModelFitError",
    "PsoResult",
    "RelhdmrError",
    "StructureError",
    "SubSurrogate",
    "SwarmConfig",
    "aggregate_runs",
    "build_first_order",
    "composite_predict",
    "correlation",
    "coupling_index",
    "embed_point",
    "estimate_pf",
    "fit",
    "identify_couplings",
    "minimize",
    "predict",
    "predict_mean",
    "refine_composite",
    "run_analysis",
    "sample_standard_normal",
    "sigma_bar",
    "to_physical",
    "to_standard",
    "__version__",
]
