"""Pointer-state distributions for weak spin measurements and
macroscopic-locality checks for noisy PR-boxes."""

from .pointer import (
    InvalidMagnetizationError,
    Magnetization,
    PointerShape,
    ShiftMixture,
    SpinAmplitudes,
    cjk_squared,
    collapse_posterior,
    log_binomial_weight,
    magnet_amplitudes,
    no_signaling_deviation,
    pointer_density,
    pointer_distribution_of_state,
    reduce_single_sum,
    rho_x_conditional,
    rho_z_conditional,
    rho_z_marginal,
    total_variation,
    valid_magnetizations,
)
from .prbox import (
    BoxDistribution,
    BoxValidationError,
    FeasibilityResult,
    IsotropicParams,
    MacroscopicSummary,
    admissible_s_interval,
    analytic_eigenvalues,
    box_check_report,
    build_isotropic_K,
    centered_corr_matrix,
    chsh_value,
    correlators_from_box,
    is_macroscopically_local,
    psd_completion_feasible,
    tsirelson_scan,
)
from .montecarlo import (
    EnsembleRunResult,
    RngSpec,
    gaussianity_check,
    run_ensemble,
    run_ensemble_batch,
    sample_box,
    sample_singlet_protocol,
    sample_singlet_runs,
    two_sample_check,
)

__version__ = "0.1.0"
