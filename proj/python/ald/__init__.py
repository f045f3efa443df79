"""Annealed Langevin sampling: spectral conditions, EM and ELP integrators, kNN KL estimates."""

from ._core import (
    AnnealingSchedule,
    EstimationError,
    ExperimentConfig,
    IoError,
    MixtureSpec,
    SpectralSequence,
    UnsupportedError,
    F,
    Psi,
    __version__,
    admissible_range,
    balanced_preconditioner,
    conditions,
    elp_coeffs,
    factorized_kl_init,
    knn_kl,
    run_chain,
    run_kl_curve,
    sample_target,
    selftest,
    stability,
)

__all__ = [
    "AnnealingSchedule",
    "EstimationError",
    "ExperimentConfig",
    "IoError",
    "MixtureSpec",
    "SpectralSequence",
    "UnsupportedError",
    "F",
    "Psi",
    "admissible_range",
    "balanced_preconditioner",
    "conditions",
    "elp_coeffs",
    "factorized_kl_init",
    "knn_kl",
    "run_chain",
    "run_kl_curve",
    "sample_target",
    "selftest",
    "stability",
]
