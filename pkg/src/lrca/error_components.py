"""Balanced two-way error-components regression.

y_it = x_itᵀβ + η_i + λ_t + v_it, with Cov(y) = σ²_v I + σ²_η (I_N ⊗ J_T)
+ σ²_λ (J_N ⊗ I_T). The covariance is diagonal on four orthogonal
projectors, so the likelihood needs only group means of the residual.

    eigenvalue                     multiplicity
    σ²_v                           (N−1)(T−1)
    σ²_v + Tσ²_η                   N−1
    σ²_v + Nσ²_λ                   T−1
    σ²_v + Tσ²_η + Nσ²_λ           1
"""
from __future__ import annotations

import logging
import math
from typing import Optional, Union

import numpy as np

from lrca.config import EC_FD_STEP, EC_SIGMA2_V_FLOOR
from lrca.errors import (
    DimensionMismatch,
    NonPositiveIdiosyncraticVariance,
    NonPositiveVariance,
    SingularDesign,
)
from lrca.models import (
    Bounds,
    CriterionEvaluation,
    EcParams,
    FitResult,
    InfoKind,
    OptimizeOptions,
    PanelData,
)
from lrca.numeric_core import as_vector, fd_jacobian, information
from lrca.optimize import maximize_box, maximize_fixed

logger = logging.getLogger(__name__)

EcTheta = Union[EcParams, np.ndarray, list, tuple]


def _theta(params: EcTheta) -> np.ndarray:
    if isinstance(params, EcParams):
        return params.vector
    return as_vector(params)


def _eigen(sigma2: np.ndarray, N: int, T: int) -> tuple[np.ndarray, np.ndarray]:
    s_v, s_eta, s_lam = sigma2
    lam = np.array([s_v, s_v + T * s_eta, s_v + N * s_lam, s_v + T * s_eta + N * s_lam])
    mult = np.array([(N - 1) * (T - 1), N - 1, T - 1, 1], dtype=float)
    if np.any(lam[mult > 0] <= 0):
        raise NonPositiveVariance(f"covariance eigenvalues {lam} not all positive")
    return lam, mult


def _decompose(resid: np.ndarray, N: int, T: int):
    """Projections of the residual onto the four eigenspaces, as N×T arrays."""
    u = resid.reshape(N, T)
    grand = u.mean()
    ind = u.mean(axis=1) - grand
    per = u.mean(axis=0) - grand
    within = u - ind[:, None] - per[None, :] - grand
    parts = (
        within,
        np.broadcast_to(ind[:, None], (N, T)),
        np.broadcast_to(per[None, :], (N, T)),
        np.full((N, T), grand),
    )
    q = np.array([float(np.sum(p * p)) for p in parts])
    return parts, q


def _check(theta: np.ndarray, panel: PanelData) -> None:
    panel.require_balanced()
    if theta.size != panel.k + 3:
        raise DimensionMismatch(f"θ has {theta.size} entries, expected k + 3 = {panel.k + 3}")


def _evaluate(theta: np.ndarray, panel: PanelData):
    N, T, k, n = panel.N, panel.T, panel.k, panel.n
    beta, sigma2 = theta[:k], theta[k:]
    lam, mult = _eigen(sigma2, N, T)
    parts, q = _decompose(panel.y - panel.X @ beta, N, T)
    used = mult > 0
    value = -0.5 * (
        n * math.log(2.0 * math.pi)
        + float(np.sum(mult[used] * np.log(lam[used])))
        + float(np.sum(q[used] / lam[used]))
    ) / n
    # r = Σ⁻¹u on the N×T grid
    r = sum(parts[j] / lam[j] for j in range(4) if used[j])

    trace = np.array([
        float(np.sum(mult[used] / lam[used])),
        T * float(sum(mult[j] / lam[j] for j in (1, 3) if used[j])),
        N * float(sum(mult[j] / lam[j] for j in (2, 3) if used[j])),
    ])
    # per-individual pieces of rᵀ(∂Σ/∂σ²)r
    row_sums = r.sum(axis=1)
    col_sums = r.sum(axis=0)
    quad = np.column_stack([
        np.sum(r * r, axis=1),
        row_sums**2,
        r @ col_sums,
    ])
    var_contrib = -0.5 * trace[None, :] / N + 0.5 * quad
    beta_contrib = np.einsum("itk,it->ik", panel.X.reshape(N, T, k), r)
    contributions = np.hstack([beta_contrib, var_contrib])
    return value, contributions


def _value_and_score(theta: np.ndarray, panel: PanelData) -> tuple[float, np.ndarray]:
    value, contributions = _evaluate(theta, panel)
    return value, contributions.sum(axis=0) / panel.n


def _hessian(theta: np.ndarray, panel: PanelData) -> np.ndarray:
    """−∂S_n/∂θ by central differences of the analytic score."""
    steps = EC_FD_STEP * np.maximum(1.0, np.abs(theta))
    jac = fd_jacobian(lambda t: _value_and_score(t, panel)[1], theta, h=steps)
    return -0.5 * (jac + jac.T)


def ec_criterion(params: EcTheta, panel: PanelData, info: InfoKind = "opg") -> CriterionEvaluation:
    theta = _theta(params)
    _check(theta, panel)
    if theta[panel.k] <= 0:
        raise NonPositiveIdiosyncraticVariance(f"σ²_v = {theta[panel.k]} must be positive")
    value, contributions = _evaluate(theta, panel)
    hessian = _hessian(theta, panel)
    return CriterionEvaluation(
        point=theta,
        value=value,
        score=contributions.sum(axis=0) / panel.n,
        hessian=hessian,
        info=information(contributions, panel.n, hessian, info),
        n=panel.n,
    )


def ec_bounds(k: int) -> Bounds:
    return Bounds(
        lower=np.concatenate([np.full(k, -np.inf), [EC_SIGMA2_V_FLOOR, 0.0, 0.0]]),
        upper=np.full(k + 3, np.inf),
    )


def ec_start(panel: PanelData) -> np.ndarray:
    """OLS β and ANOVA-type variance components of the OLS residual."""
    N, T = panel.N, panel.T
    beta = np.linalg.lstsq(panel.X, panel.y, rcond=None)[0]
    _, q = _decompose(panel.y - panel.X @ beta, N, T)
    if N > 1 and T > 1:
        s_v = q[0] / ((N - 1) * (T - 1))
    else:
        s_v = float(np.var(panel.y - panel.X @ beta))
    s_eta = max((q[1] / (N - 1) - s_v) / T, 0.0) if N > 1 else 0.0
    s_lam = max((q[2] / (T - 1) - s_v) / N, 0.0) if T > 1 else 0.0
    return np.concatenate([beta, [max(s_v, EC_SIGMA2_V_FLOOR), s_eta, s_lam]])


def ec_objective(panel: PanelData):
    """(fun, hess) for the optimizer: fun returns (value, score)."""
    panel.require_balanced()
    return (
        lambda theta: _value_and_score(theta, panel),
        lambda theta: _hessian(theta, panel),
    )


def ec_fit(
    panel: PanelData,
    bounds: Optional[Bounds] = None,
    fixed: Optional[dict[int, float]] = None,
    start: Optional[np.ndarray] = None,
    options: Optional[OptimizeOptions] = None,
) -> FitResult:
    """Gaussian MLE over (β, σ²_v, σ²_η, σ²_λ)."""
    panel.require_balanced()
    if panel.n <= panel.k + 3:
        raise SingularDesign(f"N·T = {panel.n} observations for {panel.k + 3} parameters")
    if np.linalg.matrix_rank(panel.X) < panel.k:
        raise SingularDesign("covariate matrix is rank deficient")
    bounds = bounds or ec_bounds(panel.k)
    x0 = bounds.project(ec_start(panel) if start is None else as_vector(start))
    fun, hess = ec_objective(panel)
    if fixed:
        return maximize_fixed(fun, x0, bounds, fixed, jac=True, hess=hess, options=options)
    return maximize_box(fun, x0, bounds, jac=True, hess=hess, options=options)


def ec_simulate(params: EcParams, X, N: int, T: int, seed) -> PanelData:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    rng = np.random.default_rng(seed)
    individual = math.sqrt(params.sigma2_eta) * rng.standard_normal(N)
    period = math.sqrt(params.sigma2_lambda) * rng.standard_normal(T)
    noise = math.sqrt(params.sigma2_v) * rng.standard_normal((N, T))
    u = individual[:, None] + period[None, :] + noise
    y = X @ np.asarray(params.beta) + u.ravel()
    return PanelData.build(N, T, y, X)
