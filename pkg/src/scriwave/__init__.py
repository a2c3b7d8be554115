"""Characteristic evolution of linear waves to null infinity.

Library layout mirrors the pipeline: backgrounds and their conformal
reduction (metric), operator assembly and mode reduction (operator),
the tau-marching solver (solver), the energy-framework audits (energy),
asymptotic expansion extraction (expansion), and independent
verification oracles (oracle). The cli module is the batch front end.
"""

__version__ = "0.1.0"

from .errors import (
    AssumptionViolationError, CertificateError, ConfigError,
    CornerCompatibilityError, DomainError, ExpressionError,
    FitConditioningError, InstabilityError, ResolutionError,
    ScriwaveError, UnsupportedClassError, UnsupportedOracleError,
)
from .metric import (
    BondiSachsMetric, ReducedProblem, ValidationReport,
    conformal_reduce, load_metric_file, make_minkowski, make_schwarzschild,
    validate_asymptotics,
)
from .operator import ModeCoefficients, OperatorCoefficients, assemble, mode_reduce
from .solver import (
    BoundaryData, ConvergenceReport, Grid, ModeField,
    check_compatibility, convergence_study, initial_slice_constraint, solve,
)
from .energy import (
    BulkCertificate, EnergyAuditReport, EnergyWeights, FrameVectors, VectorField,
    audit_h1, bulk_positivity_certificate, curve_velocity_margin,
    deformation_tensor, default_weights, divergence_identity_residual,
    frame_vectors, gradient_vectors, metric_pair, multiplier_field,
    q_tensor, timelike_curve, timelike_curve_rate,
)
from .expansion import (
    ExpansionTable, MetricSeries, extract_radiation_field,
    fit_coefficients, recursion_coefficients, remainder_certificate,
)
from .oracle import SeriesSolution, SignReport, evaluate_series, substitution_oracle, taylor_solve
from .expressions import Expression, parse_expression

__all__ = [name for name in dir() if not name.startswith("_")]
