"""Numerical laboratory for linear transport on a bounded planar domain.

The package builds divergence-free velocity fields that vanish near the
boundary, pushes densities along their characteristics, and measures the
quantities the renormalization theory says must behave: conserved Lp norms,
weak-form residuals, mollification commutators, and stability under field
perturbations.
"""

from transportlab.analysis import (
    AnalysisError,
    NormReport,
    RenormalizationTrend,
    StabilityReport,
    TruncationProfile,
    amplitude_family,
    bochner_norm_u,
    boundary_flux_decay,
    conservation_report,
    initial_data_family,
    lp_norm,
    renormalization_convergence_check,
    stability_experiment,
    truncation_thresholds,
)
from transportlab.characteristics import (
    CharacteristicsError,
    FlowEscapeError,
    FlowMapIntegrator,
    flow_map,
    iter_solution_layers,
    slice_identity_residual,
    solve_classical,
)
from transportlab.fields import (
    AdmissibleBeta,
    FieldError,
    Kernel,
    ScalarField,
    StreamFunction,
    TestFunction,
    TimeProfile,
    VelocityField,
    beta_bounded_power,
    beta_smooth_approx,
    beta_truncation,
    cosine_decay_profile,
    dirac_time_family,
    eval_velocity,
    from_stream_function,
    gaussian_blob,
    load_snapshot,
    make_kernel,
    make_test_function,
    quadratic_decay_profile,
    save_snapshot,
    static_field,
    time_modulation,
    vortex_field,
)
from transportlab.geometry import (
    Domain,
    GeometryError,
    Grid,
    TimePartition,
    boundary_layer_measure,
    dist_to_boundary,
    integrate,
    shrink,
    unit_square,
)
from transportlab.studies import (
    CheckResult,
    StudiesError,
    StudyConfig,
    StudyOutcome,
    build_case,
    config_text,
    parse_study_config,
    run_conservation_study,
    run_mollification_study,
    run_renormalization_study,
    run_stability_study,
    run_study,
)
from transportlab.weakform import (
    InnerLayer,
    RemainderCurve,
    ResidualAccumulator,
    ResidualReport,
    WeakformError,
    commutator_at_points,
    commutator_remainder,
    gamma_exponent,
    mollify_at_points,
    mollify_density,
    remainder_decay_study,
    renormalized_residual,
    streamed_weak_residuals,
    weak_residual,
)

__all__ = [
    "AdmissibleBeta",
    "AnalysisError",
    "CharacteristicsError",
    "CheckResult",
    "Domain",
    "FieldError",
    "FlowEscapeError",
    "FlowMapIntegrator",
    "GeometryError",
    "Grid",
    "InnerLayer",
    "Kernel",
    "NormReport",
    "RemainderCurve",
    "RenormalizationTrend",
    "ResidualAccumulator",
    "ResidualReport",
    "ScalarField",
    "StabilityReport",
    "StreamFunction",
    "StudiesError",
    "StudyConfig",
    "StudyOutcome",
    "TestFunction",
    "TimePartition",
    "TimeProfile",
    "TruncationProfile",
    "VelocityField",
    "WeakformError",
    "amplitude_family",
    "beta_bounded_power",
    "beta_smooth_approx",
    "beta_truncation",
    "bochner_norm_u",
    "boundary_flux_decay",
    "boundary_layer_measure",
    "build_case",
    "commutator_at_points",
    "commutator_remainder",
    "config_text",
    "conservation_report",
    "cosine_decay_profile",
    "dirac_time_family",
    "dist_to_boundary",
    "eval_velocity",
    "flow_map",
    "from_stream_function",
    "gamma_exponent",
    "gaussian_blob",
    "initial_data_family",
    "integrate",
    "iter_solution_layers",
    "load_snapshot",
    "lp_norm",
    "make_kernel",
    "make_test_function",
    "mollify_at_points",
    "mollify_density",
    "parse_study_config",
    "quadratic_decay_profile",
    "remainder_decay_study",
    "renormalization_convergence_check",
    "renormalized_residual",
    "run_conservation_study",
    "run_mollification_study",
    "run_renormalization_study",
    "run_stability_study",
    "run_study",
    "save_snapshot",
    "shrink",
    "slice_identity_residual",
    "solve_classical",
    "stability_experiment",
    "static_field",
    "streamed_weak_residuals",
    "time_modulation",
    "truncation_thresholds",
    "unit_square",
    "vortex_field",
    "weak_residual",
]

__version__ = "0.1.0"
