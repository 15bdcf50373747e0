"""Sieve maximum-likelihood estimation of incubation-period and
generation-time densities from transmission-pair exposure windows."""

__version__ = "0.1.0"

from .densities import (
    GenericDensity,
    exponential_density,
    lognormal_density,
    parse_density,
    weibull_density,
)
from .errors import (
    DegenerateFitError,
    DegenerateNormalizerError,
    DegenerateProjectionError,
    DivergentIntegralError,
    DomainError,
    LagsieveError,
    QuadratureAccuracyError,
    UnsupportedDegreeError,
    ValidationError,
)
from .features import (
    FeatureReport,
    feature_report,
    presymptomatic_probability,
    reproduction_number,
)
from .fitting import (
    FitOptions,
    FitResult,
    SelectionResult,
    bic,
    child_seed,
    fit,
    select_model,
)
from .laguerre import (
    LaguerreDensity,
    angles_to_theta,
    best_approx,
    canonical_sign,
    hellinger_sq,
    laguerre_eval,
    rho_alpha,
    theta_to_angles,
)
from .likelihood import (
    ExposureModel,
    LogLikEvaluator,
    Observation,
    QuadratureConfig,
    dataset_loglik,
    joint_density,
    obs_loglik,
)
from .simulate import (
    BootstrapResult,
    GeneratorConfig,
    StudyReport,
    bootstrap_test,
    default_generator_config,
    impute_windows,
    infection_offset_cdf,
    run_study,
    sample_batch,
    sample_dataset,
    sample_infection_offset,
    simulate_null_statistics,
)

__all__ = [name for name in dir() if not name.startswith("_")]
