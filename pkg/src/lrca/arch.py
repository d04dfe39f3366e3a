"""Gaussian ARCH(p): simulation, quasi-likelihood, OLS/NNLS and QMLE.

σ_t² = ω + Σ_j α_j x²_{t−j} with presample values fixed at zero, both in
the simulator and in the criterion.
"""
from __future__ import annotations

import logging
from typing import Literal, Optional, Union

import numpy as np
from scipy.optimize import nnls

from lrca.config import ARCH_ALPHA_CAP, ARCH_OMEGA_FLOOR
from lrca.errors import NonPositiveVariance, NonStationary, SingularDesign
from lrca.models import (
    ArchParams,
    Bounds,
    CriterionEvaluation,
    FitResult,
    InfoKind,
    OptimizeOptions,
)
from lrca.numeric_core import as_vector, information
from lrca.optimize import maximize_box, maximize_fixed

logger = logging.getLogger(__name__)

ArchTheta = Union[ArchParams, np.ndarray, list, tuple]
Curvature = Literal["expected", "observed"]


def _theta(params: ArchTheta) -> np.ndarray:
    if isinstance(params, ArchParams):
        return params.vector
    return as_vector(params)


def arch_design(series, p: int) -> np.ndarray:
    """Rows (1, x²_{t−1}, …, x²_{t−p}) with zero presample."""
    x2 = as_vector(series) ** 2
    n = x2.size
    design = np.zeros((n, p + 1))
    design[:, 0] = 1.0
    for j in range(1, p + 1):
        design[j:, j] = x2[: n - j]
    return design


def arch_bounds(p: int) -> Bounds:
    return Bounds(
        lower=np.concatenate([[ARCH_OMEGA_FLOOR], np.zeros(p)]),
        upper=np.concatenate([[np.inf], np.full(p, ARCH_ALPHA_CAP)]),
    )


def arch_simulate(params: ArchParams, n: int, seed) -> np.ndarray:
    if sum(params.alpha) >= 1.0:
        raise NonStationary(f"Σα = {sum(params.alpha):.4f} must be below 1")
    if n < 1:
        raise ValueError(f"series length must be positive, got {n}")
    eps = np.random.default_rng(seed).standard_normal(n)
    alpha = np.asarray(params.alpha, dtype=float)
    lagged = np.zeros(params.p)  # x²_{t−1}, …, x²_{t−p}
    x = np.empty(n)
    for t in range(n):
        sigma2 = params.omega + float(alpha @ lagged)
        x[t] = np.sqrt(sigma2) * eps[t]
        if params.p:
            lagged[1:] = lagged[:-1]
            lagged[0] = x[t] ** 2
    return x


def _variances(theta: np.ndarray, design: np.ndarray) -> np.ndarray:
    if theta[0] <= 0:
        raise NonPositiveVariance(f"ω = {theta[0]} must be positive")
    sigma2 = design @ theta
    if np.any(sigma2 <= 0):
        raise NonPositiveVariance("conditional variance not positive")
    return sigma2


def _value_and_score(theta: np.ndarray, design: np.ndarray, x2: np.ndarray) -> tuple[float, np.ndarray]:
    sigma2 = _variances(theta, design)
    ratio = x2 / sigma2
    value = -0.5 * float(np.mean(np.log(sigma2) + ratio))
    score = (0.5 * (ratio - 1.0) / sigma2) @ design / x2.size
    return value, score


def _hessian(
    theta: np.ndarray,
    design: np.ndarray,
    x2: np.ndarray,
    curvature: Curvature = "expected",
) -> np.ndarray:
    """Negative average second derivative.

    observed weights row t by (x_t²/σ_t² − ½)/σ_t⁴; expected replaces
    x_t²/σ_t² by its conditional mean 1, which keeps the matrix positive
    definite whenever the design has full column rank.
    """
    sigma2 = _variances(theta, design)
    if curvature == "expected":
        weight = 0.5 / sigma2**2
    else:
        weight = (x2 / sigma2 - 0.5) / sigma2**2
    return (design * weight[:, None]).T @ design / x2.size


def arch_criterion(
    params: ArchTheta,
    series,
    info: InfoKind = "opg",
    curvature: Curvature = "expected",
) -> CriterionEvaluation:
    """Average ℓ_t = −½(log σ_t² + x_t²/σ_t²) with analytic score and Hessian.

    curvature selects the expected (default) or observed Hessian.
    """
    theta = _theta(params)
    series = as_vector(series)
    design = arch_design(series, theta.size - 1)
    x2 = series**2
    sigma2 = _variances(theta, design)
    ratio = x2 / sigma2
    contributions = (0.5 * (ratio - 1.0) / sigma2)[:, None] * design
    hessian = _hessian(theta, design, x2, curvature)
    return CriterionEvaluation(
        point=theta,
        value=-0.5 * float(np.mean(np.log(sigma2) + ratio)),
        score=contributions.mean(axis=0),
        hessian=hessian,
        info=information(contributions, series.size, hessian, info),
        n=series.size,
    )


def arch_ols(
    series,
    p: int,
    restricted: bool = False,
    fixed: Optional[dict[int, float]] = None,
) -> np.ndarray:
    """Regress x_t² on (1, x²_{t−1}, …, x²_{t−p}).

    restricted=True solves the same problem by NNLS with ω ≥ 1e-8.
    Coordinates in `fixed` are pinned and their columns moved to the
    left-hand side. Returns θ = (ω, α₁, …, α_p); the unrestricted fit may
    leave the parameter space.
    """
    series = as_vector(series)
    if series.size <= p + 1:
        raise SingularDesign(f"n={series.size} observations for {p + 1} regressors")
    design = arch_design(series, p)
    if np.linalg.matrix_rank(design) < p + 1:
        raise SingularDesign("lagged squares are collinear")
    fixed = fixed or {}
    free = [j for j in range(p + 1) if j not in fixed]
    theta = np.zeros(p + 1)
    for j, v in fixed.items():
        theta[j] = v
    target = series**2 - design @ theta
    if not free:
        return theta
    sub = design[:, free]
    if not restricted:
        theta[free] = np.linalg.lstsq(sub, target, rcond=None)[0]
        return theta
    floor = ARCH_OMEGA_FLOOR if 0 in free else 0.0
    coef = nnls(sub, target - floor)[0]
    if 0 in free:
        coef[0] += floor
    theta[free] = coef
    return theta


def arch_objective(series, p: int):
    """(fun, hess) for the optimizer: fun returns (value, score)."""
    series = as_vector(series)
    design = arch_design(series, p)
    x2 = series**2
    return (
        lambda theta: _value_and_score(theta, design, x2),
        lambda theta: _hessian(theta, design, x2),
    )


def arch_qmle(
    series,
    p: int,
    start: Union[str, np.ndarray, None] = "restricted-ols",
    fixed: Optional[dict[int, float]] = None,
    options: Optional[OptimizeOptions] = None,
) -> FitResult:
    """Bounded QMLE: ω ≥ 1e-8, α_j ∈ [0, 0.9999]; optional pinned coordinates."""
    series = as_vector(series)
    bounds = arch_bounds(p)

    if isinstance(start, str) or start is None:
        x0 = arch_ols(series, p, restricted=start != "ols")
    else:
        x0 = as_vector(start)
    x0 = bounds.project(x0)
    fun, hess = arch_objective(series, p)
    if fixed:
        return maximize_fixed(fun, x0, bounds, fixed, jac=True, hess=hess, options=options)
    return maximize_box(fun, x0, bounds, jac=True, hess=hess, options=options)
