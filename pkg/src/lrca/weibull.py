"""Weibull regression, log t_i = (−x_iᵀβ + u_i)/η with Gumbel-min errors u_i.

Per-observation log-likelihood with z_i = η·log t_i + x_iᵀβ:
    ℓ_i = log η + z_i − exp(z_i)
"""
from __future__ import annotations

import logging
from typing import Literal, Optional, Union

import numpy as np

from lrca.config import DIGAMMA_ONE, EULER_GAMMA, GUMBEL_SD
from lrca.errors import (
    DegenerateDenominator,
    DimensionMismatch,
    NonFiniteEvaluation,
    NonPositiveShape,
    NonPositiveTime,
)
from lrca.models import (
    Bounds,
    CriterionEvaluation,
    FitResult,
    InfoKind,
    OptimizeOptions,
    WeibullParams,
)
from lrca.numeric_core import as_vector, information
from lrca.optimize import maximize_box, maximize_fixed

logger = logging.getLogger(__name__)

ETA_FLOOR = 1e-8

WeibullTheta = Union[WeibullParams, np.ndarray, list, tuple]
MomentConvention = Literal["consistent", "negated"]

_conventions_logged: set[str] = set()


def _theta(params: WeibullTheta) -> np.ndarray:
    if isinstance(params, WeibullParams):
        return params.vector
    return as_vector(params)


def _design(X, k: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != k:
        raise DimensionMismatch(f"X has {X.shape[1]} columns, β has {k} entries")
    return X


def _log_times(times) -> np.ndarray:
    times = as_vector(times)
    if np.any(times <= 0):
        raise NonPositiveTime("event times must be positive")
    return np.log(times)


def weibull_simulate(params: WeibullParams, X, seed) -> np.ndarray:
    X = _design(X, len(params.beta))
    uniform = 1.0 - np.random.default_rng(seed).random(X.shape[0])
    u = np.log(-np.log(uniform))
    return np.exp((-X @ np.asarray(params.beta) + u) / params.eta)


def weibull_hazard(t, x, params: WeibullParams) -> np.ndarray:
    """λ(t | x) = exp(xᵀβ)·η·t^{η−1}."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise NonPositiveTime("hazard is defined for t > 0")
    index = np.asarray(x, dtype=float) @ np.asarray(params.beta)
    return np.exp(index) * params.eta * t ** (params.eta - 1.0)


def _pieces(theta: np.ndarray, X: np.ndarray, y: np.ndarray):
    beta, eta = theta[:-1], theta[-1]
    if eta <= 0:
        raise NonPositiveShape(f"η = {eta} must be positive")
    z = eta * y + X @ beta
    with np.errstate(over="ignore"):
        ez = np.exp(z)
    if not np.all(np.isfinite(ez)):
        raise NonFiniteEvaluation("exp(ηy + xβ) overflowed")
    return eta, z, ez


def _value_and_score(theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    eta, z, ez = _pieces(theta, X, y)
    value = float(np.mean(np.log(eta) + z - ez))
    resid = 1.0 - ez
    score = np.append(X.T @ resid, np.sum(1.0 / eta + y * resid)) / y.size
    return value, score


def _hessian(theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    eta, _, ez = _pieces(theta, X, y)
    n, k = X.shape
    hess = np.empty((k + 1, k + 1))
    hess[:k, :k] = (X * ez[:, None]).T @ X / n
    hess[:k, k] = hess[k, :k] = X.T @ (ez * y) / n
    hess[k, k] = 1.0 / eta**2 + float(np.mean(ez * y**2))
    return hess


def weibull_criterion(params: WeibullTheta, X, times, info: InfoKind = "opg") -> CriterionEvaluation:
    theta = _theta(params)
    X = _design(X, theta.size - 1)
    y = _log_times(times)
    eta, z, ez = _pieces(theta, X, y)
    resid = 1.0 - ez
    contributions = np.column_stack([X * resid[:, None], 1.0 / eta + y * resid])
    hessian = _hessian(theta, X, y)
    return CriterionEvaluation(
        point=theta,
        value=float(np.mean(np.log(eta) + z - ez)),
        score=contributions.mean(axis=0),
        hessian=hessian,
        info=information(contributions, y.size, hessian, info),
        n=y.size,
    )


def weibull_moment_eta(
    beta,
    X,
    times,
    convention: MomentConvention = "consistent",
) -> float:
    """η from the first moment of u_i = η·log t_i + x_iᵀβ.

    consistent: (−Σxᵀβ + n·Γ′(1)) / Σ log t, which uses E[u] = Γ′(1).
    negated:    (−Σxᵀβ − n·Γ′(1)) / Σ log t, the Γ′(1) sign flipped.
    """
    beta = as_vector(beta)
    X = _design(X, beta.size)
    y = _log_times(times)
    denominator = float(np.sum(y))
    if denominator == 0.0:
        raise DegenerateDenominator("Σ log t = 0")
    sign = 1.0 if convention == "consistent" else -1.0
    if convention not in _conventions_logged:
        _conventions_logged.add(convention)
        logger.info("Weibull moment estimator uses the %s sign convention", convention)
    eta = (-float(np.sum(X @ beta)) + sign * y.size * DIGAMMA_ONE) / denominator
    if not eta > 0:
        raise DegenerateDenominator(f"moment estimate of η is {eta:.4g}")
    return eta


def weibull_start(X, times) -> np.ndarray:
    """OLS of log t on X, rescaled by the Gumbel standard deviation.

    Assumes the first column of X is the intercept when it is constant 1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = _log_times(times)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    spread = float(np.std(y - X @ coef))
    eta = GUMBEL_SD / spread if spread > 0 else 1.0
    beta = -coef * eta
    if np.all(X[:, 0] == 1.0):
        beta[0] -= EULER_GAMMA
    return np.append(beta, eta)


def weibull_bounds(k: int, shape_restricted: bool = False) -> Bounds:
    return Bounds(
        lower=np.append(np.full(k, -np.inf), 1.0 if shape_restricted else ETA_FLOOR),
        upper=np.full(k + 1, np.inf),
    )


def weibull_objective(X, times):
    """(fun, hess) for the optimizer: fun returns (value, score)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = _log_times(times)
    return (
        lambda theta: _value_and_score(theta, X, y),
        lambda theta: _hessian(theta, X, y),
    )


def weibull_mle(
    X,
    times,
    shape_restricted: bool = False,
    fixed: Optional[dict[int, float]] = None,
    start: Optional[np.ndarray] = None,
    options: Optional[OptimizeOptions] = None,
) -> FitResult:
    """MLE of (β, η); shape_restricted imposes η ≥ 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    bounds = weibull_bounds(X.shape[1], shape_restricted)
    x0 = bounds.project(weibull_start(X, times) if start is None else as_vector(start))
    fun, hess = weibull_objective(X, times)
    if fixed:
        return maximize_fixed(fun, x0, bounds, fixed, jac=True, hess=hess, options=options)
    return maximize_box(fun, x0, bounds, jac=True, hess=hess, options=options)
