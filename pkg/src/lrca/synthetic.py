"""Bivariate Gaussian mean model with a nonnegative nuisance mean.

z_i ~ N(θ, Σ), Σ = [[1, ρ], [ρ, 1]], θ₂ ≥ 0. Testing θ₁ = 0 with the true
θ₂ = 0 puts the nuisance on its bound. The criterion is exactly quadratic,
so LRC_α with I_n := H_n equals n·z̄₁², exactly χ²₁ under the null.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from lrca.errors import DimensionMismatch
from lrca.models import CriterionEvaluation, InfoKind
from lrca.numeric_core import as_vector, information


def _covariance(rho: float) -> np.ndarray:
    return np.array([[1.0, rho], [rho, 1.0]])


def gaussian_linear_simulate(theta, rho: float, n: int, seed) -> np.ndarray:
    theta = as_vector(theta)
    rng = np.random.default_rng(seed)
    return rng.multivariate_normal(theta, _covariance(rho), size=n, method="cholesky")


def gaussian_linear_criterion(theta, sample, rho: float, info: InfoKind = "hessian") -> CriterionEvaluation:
    """Average −½(z_i − θ)ᵀΣ⁻¹(z_i − θ)."""
    theta = as_vector(theta)
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    if sample.shape[1] != 2 or theta.size != 2:
        raise DimensionMismatch("the Gaussian-linear model is bivariate")
    precision = np.linalg.inv(_covariance(rho))
    centered = sample - theta
    contributions = centered @ precision
    hessian = precision
    n = sample.shape[0]
    return CriterionEvaluation(
        point=theta,
        value=-0.5 * float(np.mean(np.sum(contributions * centered, axis=1))),
        score=contributions.mean(axis=0),
        hessian=hessian,
        info=information(contributions, n, hessian, info),
        n=n,
    )


def gaussian_linear_fit(sample, rho: float, theta1: Optional[float] = None) -> np.ndarray:
    """Closed-form maximizer over θ₂ ≥ 0, with θ₁ pinned when given."""
    mean = np.atleast_2d(np.asarray(sample, dtype=float)).mean(axis=0)
    if theta1 is not None:
        return np.array([theta1, max(0.0, mean[1] - rho * (mean[0] - theta1))])
    if mean[1] >= 0:
        return mean.copy()
    return np.array([mean[0] - rho * mean[1], 0.0])
