"""Numerical laboratory for stochastic parabolic Dirichlet problems.

Half-space model equations with time-dependent coefficients and
gradient noise: kernel-based one-dimensional boundary profiles,
ensemble finite-difference solves, stochastic parabolic Holder norms,
and the studies that probe wall regularity, noise compatibility and
the operator continuation argument.
"""

from .fields import (
    FieldEnsemble,
    GridMismatch,
    ParityViolation,
    SpaceTimeGrid,
    finite_diff,
    linear_combine,
    load_field,
    restrict_to_boundary,
    save_field,
)
from .extension import even_extend, odd_extend, translated_forcing
from .halfline import (
    BoundaryData,
    KernelQuadrature,
    QuadratureError,
    StabilityReport,
    dt_v,
    kernel_dy,
    kernel_mass,
    poisson_kernel,
    solve_halfline,
    stability_gap,
)
from .norms import (
    NormResult,
    NormSpec,
    SchauderReport,
    parabolic_seminorm,
    schauder_ratio,
    space_seminorm,
    sup_norm,
    time_seminorm,
    trace_parabolic_norm,
)
from .pipeline import PipelineOutput, decompose_pipeline, halfline_heat_dirichlet
from .rng import SeedSpec, WienerBatch, coarsen, partial_sums, standard_normals, wiener_increments
from .solver import (
    BlowUpError,
    Forcing,
    ModelCoefficients,
    ModelError,
    check_compatibility,
    check_parabolicity,
    continuity_step,
    interpolate_coefficients,
    laplace_coefficients,
    solve_additive_heat,
    solve_model_halfspace,
    solve_periodic_line,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SpaceTimeGrid",
    "FieldEnsemble",
    "GridMismatch",
    "ParityViolation",
    "finite_diff",
    "linear_combine",
    "restrict_to_boundary",
    "save_field",
    "load_field",
    "odd_extend",
    "even_extend",
    "translated_forcing",
    "poisson_kernel",
    "kernel_dy",
    "kernel_mass",
    "KernelQuadrature",
    "QuadratureError",
    "BoundaryData",
    "solve_halfline",
    "dt_v",
    "stability_gap",
    "StabilityReport",
    "NormSpec",
    "NormResult",
    "sup_norm",
    "space_seminorm",
    "parabolic_seminorm",
    "trace_parabolic_norm",
    "time_seminorm",
    "schauder_ratio",
    "SchauderReport",
    "SeedSpec",
    "WienerBatch",
    "standard_normals",
    "wiener_increments",
    "partial_sums",
    "coarsen",
    "ModelCoefficients",
    "Forcing",
    "ModelError",
    "BlowUpError",
    "check_parabolicity",
    "check_compatibility",
    "laplace_coefficients",
    "interpolate_coefficients",
    "solve_model_halfspace",
    "solve_periodic_line",
    "solve_additive_heat",
    "continuity_step",
    "PipelineOutput",
    "decompose_pipeline",
    "halfline_heat_dirichlet",
]
