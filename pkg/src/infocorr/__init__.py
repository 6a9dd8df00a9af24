"""Maximal correlation, information-correlation functions and source synthesis."""

from .errors import (
    DomainError,
    EnumerationCapExceeded,
    InconsistentDecomposition,
    InfoCorrError,
    NotNormalized,
    OptimizerBudgetExhausted,
    ParseError,
    ShapeMismatch,
    UnsupportedSupport,
)
from .probability import (
    Channel,
    ConditionedJoint,
    JointPmf,
    attach_condition,
    entropy,
    flatten,
    marginals,
    mi_xy_u,
    mutual_information,
    tv_distance,
)
from .correlation import (
    CorrelationReport,
    SmoothQuery,
    cond_max_correlation,
    correlation_ratio,
    correlation_report,
    max_correlation,
    pearson,
    smooth_max_correlation,
)
from .common_info import (
    Certificate,
    CBetaSolution,
    GaussianPair,
    SolverConfig,
    beta_c_inverse,
    c_beta_curve,
    gacs_korner,
    gaussian_c_beta,
    solve_c_beta,
)
from .synthesis import SynthesisExperiment, audit_synthesis, sweep

__version__ = "0.1.0"
