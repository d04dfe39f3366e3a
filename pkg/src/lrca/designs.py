"""Simulation designs: DGP presets and one-replication kernels.

A kernel maps (config, seed) to the statistic value of every configured
test. Kernels are module-level so they pickle into worker processes.
"""
from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np

from lrca.arch import arch_criterion, arch_ols, arch_qmle, arch_simulate
from lrca.config import COVARIATE_STREAM
from lrca.errors import ConfigInvalid, NotConverged, NonStationary
from lrca.inference import (
    c_alpha,
    check_coincidence_identity,
    classic_lm,
    classic_lr,
    covariance,
    fixed_restriction,
    lrc_alpha,
    wald,
)
from lrca.models import (
    ArchParams,
    CriterionEvaluation,
    ExperimentConfig,
    FitResult,
    Restriction,
    WeibullParams,
)
from lrca.synthetic import (
    gaussian_linear_criterion,
    gaussian_linear_fit,
    gaussian_linear_simulate,
)
from lrca.weibull import (
    weibull_criterion,
    weibull_mle,
    weibull_moment_eta,
    weibull_simulate,
)

logger = logging.getLogger(__name__)

# (ω, α₁, …, α_p); the last α is the tested coefficient
ARCH_PRESETS: dict[str, tuple[float, ...]] = {
    "DGP1": (1.0, 0.1, 0.0),
    "DGP2": (10.0 / 9.0, 0.0, 0.0),
    "DGP3": (1.0, 0.1, 0.1, 0.1, 0.0),
    "DGP4": (1.0, 0.15, 0.15, 0.0, 0.0),
    "DGP5": (1.0, 0.3, 0.0, 0.0, 0.0),
    "DGP6": (10.0 / 7.0, 0.0, 0.0, 0.0, 0.0),
}
WEIBULL_TRUTH = (-5.0, 1.0, 1.0)  # (β₀, β₁, η)
GAUSSIAN_TRUTH = (0.0, 0.0)

ALL_TESTS = ["LRCa", "Ca", "LRCa2", "Ca2", "LR", "LM", "Wald"]
PLAIN_TESTS = ["LRCa", "Ca", "LR", "LM", "Wald"]

# the TestOutcome level is irrelevant here: only statistics leave a kernel
_LEVEL = 0.05


def family_of(dgp: str) -> str:
    if dgp in ARCH_PRESETS or dgp == "custom":
        return "arch"
    if dgp.startswith("weibull"):
        return "weibull"
    return "gaussian-linear"


def truth(config: ExperimentConfig) -> np.ndarray:
    if config.params is not None:
        return np.asarray(config.params, dtype=float)
    family = family_of(config.dgp)
    if family == "arch":
        if config.dgp == "custom":
            raise ConfigInvalid("dgp 'custom' needs explicit params (ω, α₁, …, α_p)")
        return np.asarray(ARCH_PRESETS[config.dgp])
    if family == "weibull":
        return np.asarray(WEIBULL_TRUTH)
    return np.asarray(GAUSSIAN_TRUTH)


def restricted_indices(config: ExperimentConfig) -> list[int]:
    if config.restrict is not None:
        return list(config.restrict)
    family = family_of(config.dgp)
    d = truth(config).size
    if family == "arch":
        return [d - 1]
    if family == "weibull":
        return list(range(d - 1))
    return [0]


def null_values(config: ExperimentConfig) -> list[float]:
    indices = restricted_indices(config)
    if config.null is not None:
        return list(config.null)
    theta = truth(config)
    return [float(theta[i]) for i in indices]


def null_dimension(config: ExperimentConfig) -> int:
    return len(restricted_indices(config))


def default_tests(config: ExperimentConfig) -> list[str]:
    if config.tests is not None:
        return list(config.tests)
    if family_of(config.dgp) == "gaussian-linear":
        return list(PLAIN_TESTS)
    if family_of(config.dgp) == "weibull" and restricted_indices(config) != list(range(truth(config).size - 1)):
        return list(PLAIN_TESTS)
    return list(ALL_TESTS)


def validate(config: ExperimentConfig) -> None:
    """Raise ConfigInvalid for configs no kernel can run."""
    theta = truth(config)
    family = family_of(config.dgp)
    indices = restricted_indices(config)
    nulls = null_values(config)
    if not indices or len(set(indices)) != len(indices):
        raise ConfigInvalid(f"restricted indices {indices} must be distinct and nonempty")
    if any(not 0 <= i < theta.size for i in indices):
        raise ConfigInvalid(f"restricted indices {indices} outside 0..{theta.size - 1}")
    if len(nulls) != len(indices):
        raise ConfigInvalid(f"{len(nulls)} null values for {len(indices)} restricted indices")
    if len(indices) >= theta.size:
        raise ConfigInvalid("at least one parameter must remain free under the null")
    tests = default_tests(config)
    if family == "arch":
        try:
            ArchParams.from_vector(theta)
            if sum(theta[1:]) >= 1.0:
                raise NonStationary("Σα ≥ 1")
        except (ValueError, NonStationary) as e:
            raise ConfigInvalid(f"ARCH parameters {list(theta)} invalid: {e}") from e
        if 0 in indices:
            raise ConfigInvalid("ω cannot be restricted in the ARCH designs")
    elif family == "weibull":
        if theta[-1] <= 0:
            raise ConfigInvalid(f"Weibull shape must be positive, got {theta[-1]}")
        if (d := theta.size - 1) in indices:
            raise ConfigInvalid(f"the shape (index {d}) is the nuisance parameter")
        if {"LRCa2", "Ca2"} & set(tests) and indices != list(range(d)):
            raise ConfigInvalid("LRCa2/Ca2 need every β pinned by the null")
    else:
        if theta.size != 2 or indices != [0]:
            raise ConfigInvalid("gaussian-linear tests θ₁ with θ = (θ₁, θ₂)")
        if {"LRCa2", "Ca2"} & set(tests):
            raise ConfigInvalid("gaussian-linear has no auxiliary restricted estimator")


def _converged(fit: FitResult, what: str) -> np.ndarray:
    if not fit.converged:
        raise NotConverged(f"{what} fit: {fit.message}")
    return fit.point


def _statistics(
    tests: list[str],
    eu: CriterionEvaluation,
    er: CriterionEvaluation,
    r: Restriction,
    auxiliary: Optional[CriterionEvaluation],
    self_check: bool,
) -> dict[str, float]:
    builders: dict[str, Callable[[], float]] = {
        "LRCa": lambda: lrc_alpha(eu, er, r, _LEVEL).statistic,
        "Ca": lambda: c_alpha(er, r, _LEVEL).statistic,
        "LR": lambda: classic_lr(eu, er, r.q, _LEVEL).statistic,
        "LM": lambda: classic_lm(er, r, _LEVEL).statistic,
        "Wald": lambda: wald(eu.point, covariance(eu), r, _LEVEL).statistic,
        "LRCa2": lambda: lrc_alpha(eu, auxiliary, r, _LEVEL, name="LRCa2").statistic,
        "Ca2": lambda: c_alpha(auxiliary, r, _LEVEL, name="Ca2").statistic,
    }
    if self_check:
        check_coincidence_identity(er, r)
    return {name: builders[name]() for name in tests}


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------
def arch_replication(config: ExperimentConfig, seed) -> dict[str, float]:
    theta = truth(config)
    p = theta.size - 1
    fixed = dict(zip(restricted_indices(config), null_values(config)))
    tests = default_tests(config)
    info = config.info or "hessian"

    series = arch_simulate(ArchParams.from_vector(theta), config.n, seed)
    theta_hat = _converged(arch_qmle(series, p, start=config.qmle_start), "unrestricted QMLE")
    theta_tilde = _converged(arch_qmle(series, p, start=config.qmle_start, fixed=fixed), "restricted QMLE")

    r = fixed_restriction(p + 1, fixed)
    eu = arch_criterion(theta_hat, series, info)
    er = arch_criterion(theta_tilde, series, info)
    auxiliary = None
    if {"LRCa2", "Ca2"} & set(tests):
        theta_ols = arch_ols(series, p, restricted=True, fixed=fixed)
        auxiliary = arch_criterion(theta_ols, series, info)
    return _statistics(tests, eu, er, r, auxiliary, config.self_check)


def weibull_covariates(config: ExperimentConfig) -> np.ndarray:
    """(1, x₁ᵢ) with x₁ᵢ ~ U(0, 1), one draw per (master_seed, n)."""
    rng = np.random.default_rng([config.master_seed, config.n, COVARIATE_STREAM])
    return np.column_stack([np.ones(config.n), rng.uniform(size=config.n)])


def weibull_replication(config: ExperimentConfig, seed) -> dict[str, float]:
    theta = truth(config)
    k = theta.size - 1
    fixed = dict(zip(restricted_indices(config), null_values(config)))
    tests = default_tests(config)
    info = config.info or "hessian"

    X = weibull_covariates(config)
    times = weibull_simulate(WeibullParams.from_vector(theta), X, seed)
    theta_hat = _converged(weibull_mle(X, times), "unrestricted MLE")
    theta_tilde = _converged(
        weibull_mle(X, times, shape_restricted=config.shape_restricted, fixed=fixed),
        "restricted MLE",
    )

    r = fixed_restriction(k + 1, fixed)
    eu = weibull_criterion(theta_hat, X, times, info)
    er = weibull_criterion(theta_tilde, X, times, info)
    auxiliary = None
    if {"LRCa2", "Ca2"} & set(tests):
        beta_null = np.array([fixed[i] for i in range(k)])
        eta = weibull_moment_eta(beta_null, X, times)
        auxiliary = weibull_criterion(np.append(beta_null, eta), X, times, info)
    return _statistics(tests, eu, er, r, auxiliary, config.self_check)


def gaussian_replication(config: ExperimentConfig, seed) -> dict[str, float]:
    theta = truth(config)
    null = null_values(config)[0]
    info = config.info or "hessian"

    sample = gaussian_linear_simulate(theta, config.rho, config.n, seed)
    theta_hat = gaussian_linear_fit(sample, config.rho)
    theta_tilde = gaussian_linear_fit(sample, config.rho, theta1=null)

    r = fixed_restriction(2, {0: null})
    eu = gaussian_linear_criterion(theta_hat, sample, config.rho, info)
    er = gaussian_linear_criterion(theta_tilde, sample, config.rho, info)
    return _statistics(default_tests(config), eu, er, r, None, config.self_check)


KERNELS: dict[str, Callable[[ExperimentConfig, object], dict[str, float]]] = {
    "arch": arch_replication,
    "weibull": weibull_replication,
    "gaussian-linear": gaussian_replication,
}


def kernel_for(config: ExperimentConfig) -> Callable[[ExperimentConfig, object], dict[str, float]]:
    return KERNELS[family_of(config.dgp)]
