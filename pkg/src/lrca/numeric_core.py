from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve
from scipy.special import gammainc, gammaincc, gammaln, ndtri

from lrca.config import (
    ASYMMETRY_RTOL,
    CHI2_MAX_NEWTON,
    CHI2_XTOL,
    FD_GRADIENT_STEP,
    FD_HESSIAN_STEP,
    PIVOT_RATIO,
)
from lrca.errors import (
    AsymmetricMatrix,
    DimensionMismatch,
    InvalidProbability,
    NegativeStatistic,
    NonFiniteEvaluation,
    NotPositiveDefinite,
)

ScalarFn = Callable[[np.ndarray], float]
VectorFn = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------
def as_vector(values) -> np.ndarray:
    """1-d float array; NaN/Inf rejected."""
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {v.shape}")
    if v.size == 0:
        raise DimensionMismatch("empty vector")
    if not np.all(np.isfinite(v)):
        raise NonFiniteEvaluation(f"non-finite vector entries: {v}")
    return v


def sym_matrix(values, rtol: float = ASYMMETRY_RTOL) -> np.ndarray:
    """Symmetric square matrix as (A + Aᵀ)/2.

    Asymmetry beyond rtol (relative to the largest entry) is a model bug, not
    rounding, and raises AsymmetricMatrix.
    """
    a = np.atleast_2d(np.asarray(values, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEvaluation("non-finite matrix entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    gap = float(np.max(np.abs(a - a.T)))
    if gap > rtol * scale:
        raise AsymmetricMatrix(f"asymmetry {gap:.3e} exceeds {rtol:.0e} relative")
    return 0.5 * (a + a.T)


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------
def spd_solve(a, b) -> np.ndarray:
    """Solve A·X = B for symmetric positive definite A by Cholesky.

    A is declared PD only when the smallest pivot exceeds PIVOT_RATIO times
    the largest diagonal entry. No ridge is added.
    """
    a = sym_matrix(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, matrix is {a.shape[0]}x{a.shape[0]}")
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite("Cholesky factorization failed") from e
    pivots = np.diag(lower) ** 2
    largest = float(np.max(np.diag(a)))
    if not largest > 0 or float(pivots.min()) <= PIVOT_RATIO * largest:
        raise NotPositiveDefinite(
            f"smallest pivot {pivots.min():.3e} vs largest diagonal {largest:.3e}"
        )
    return cho_solve((lower, True), b)


def spd_inverse(a) -> np.ndarray:
    a = sym_matrix(a)
    return sym_matrix(spd_solve(a, np.eye(a.shape[0])))


# ---------------------------------------------------------------------------
# Distribution functions
# ---------------------------------------------------------------------------
def _check_df(df: int) -> None:
    if int(df) != df or df < 1:
        raise InvalidProbability(f"degrees of freedom must be a positive integer, got {df}")


def chi2_cdf(df: int, x: float) -> float:
    _check_df(df)
    if x <= 0:
        return 0.0
    return float(gammainc(df / 2.0, x / 2.0))


def chi2_sf(df: int, x: float) -> float:
    """P[χ²_df > x]."""
    _check_df(df)
    if x < 0:
        raise NegativeStatistic(f"chi-square argument must be nonnegative, got {x}")
    return float(gammaincc(df / 2.0, x / 2.0))


def _chi2_pdf(df: int, x: float) -> float:
    k = df / 2.0
    return math.exp((k - 1.0) * math.log(x / 2.0) - x / 2.0 - gammaln(k)) / 2.0


def chi2_quantile(df: int, p: float) -> float:
    """x with P[χ²_df ≤ x] = p.

    Newton on the regularized incomplete gamma from a Wilson–Hilferty start;
    the residual is taken in the upper tail for p ≥ 0.5. Falls back to
    bisection after CHI2_MAX_NEWTON iterations.
    """
    _check_df(df)
    if not 0.0 <= p < 1.0:
        raise InvalidProbability(f"probability must lie in [0, 1), got {p}")
    if p == 0.0:
        return 0.0

    k = df / 2.0
    upper = p >= 0.5

    def residual(x: float) -> float:
        if upper:
            return (1.0 - p) - float(gammaincc(k, x / 2.0))
        return float(gammainc(k, x / 2.0)) - p

    c = 2.0 / (9.0 * df)
    x = df * (1.0 - c + float(ndtri(p)) * math.sqrt(c)) ** 3
    if not x > 0:
        x = df * 1e-3

    for _ in range(CHI2_MAX_NEWTON):
        pdf = _chi2_pdf(df, x)
        if not pdf > 0 or not math.isfinite(pdf):
            break
        step = residual(x) / pdf
        x_new = x - step
        if x_new <= 0:
            x_new = x / 2.0
        if abs(x_new - x) <= CHI2_XTOL * max(1.0, x):
            return x_new
        x = x_new

    return _chi2_bisect(df, p)


def _chi2_bisect(df: int, p: float) -> float:
    lo, hi = 0.0, max(1.0, float(df))
    while chi2_cdf(df, hi) < p:
        hi *= 2.0
    while hi - lo > CHI2_XTOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(df, mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidProbability(f"probability must lie in (0, 1), got {p}")
    return float(ndtri(p))


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------
def _steps(theta: np.ndarray, h, base: float) -> np.ndarray:
    if h is None:
        return base * np.maximum(1.0, np.abs(theta))
    steps = np.broadcast_to(np.asarray(h, dtype=float), theta.shape).copy()
    if not np.all(steps > 0):
        raise ValueError(f"finite-difference steps must be positive, got {h}")
    return steps


def _finite(value, where: np.ndarray):
    if not np.all(np.isfinite(value)):
        raise NonFiniteEvaluation(f"non-finite evaluation at {where}")
    return value


def fd_gradient(f: ScalarFn, theta, h=None) -> np.ndarray:
    """Central-difference gradient."""
    theta = as_vector(theta)
    steps = _steps(theta, h, FD_GRADIENT_STEP)
    grad = np.empty_like(theta)
    for i, step in enumerate(steps):
        e = np.zeros_like(theta)
        e[i] = step
        f_plus = _finite(f(theta + e), theta + e)
        f_minus = _finite(f(theta - e), theta - e)
        grad[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def fd_hessian(f: ScalarFn, theta, h=None) -> np.ndarray:
    """Central-difference Hessian (second derivative, not its negative)."""
    theta = as_vector(theta)
    steps = _steps(theta, h, FD_HESSIAN_STEP)
    d = theta.size
    hess = np.empty((d, d))

    def at(*shifts: tuple[int, float]) -> float:
        point = theta.copy()
        for idx, delta in shifts:
            point[idx] += delta
        return _finite(f(point), point)

    for i in range(d):
        for j in range(i, d):
            hi, hj = steps[i], steps[j]
            value = (
                at((i, hi), (j, hj))
                - at((i, hi), (j, -hj))
                - at((i, -hi), (j, hj))
                + at((i, -hi), (j, -hj))
            ) / (4.0 * hi * hj)
            hess[i, j] = hess[j, i] = value
    return sym_matrix(hess)


def fd_jacobian(g: VectorFn, theta, h=None) -> np.ndarray:
    """Central-difference Jacobian J[i, j] = ∂g_i/∂θ_j."""
    theta = as_vector(theta)
    steps = _steps(theta, h, FD_GRADIENT_STEP)
    columns = []
    for j, step in enumerate(steps):
        e = np.zeros_like(theta)
        e[j] = step
        g_plus = _finite(np.asarray(g(theta + e), dtype=float), theta + e)
        g_minus = _finite(np.asarray(g(theta - e), dtype=float), theta - e)
        columns.append((g_plus - g_minus) / (2.0 * step))
    return np.column_stack(columns)


# ---------------------------------------------------------------------------
# Information estimators
# ---------------------------------------------------------------------------
def opg(contributions, n: int, centered: bool = False) -> np.ndarray:
    """Outer product of score contributions divided by n.

    contributions has one row per independent unit (observation or cluster)
    and its rows sum to n·S_n.
    """
    c = np.atleast_2d(np.asarray(contributions, dtype=float))
    if centered:
        c = c - c.mean(axis=0)
    return sym_matrix(c.T @ c / n)


def information(contributions, n: int, hessian, kind: str = "opg") -> np.ndarray:
    """I_n by the requested estimator: "opg", "opg-centered" or "hessian"."""
    if kind == "hessian":
        return sym_matrix(hessian)
    if kind not in ("opg", "opg-centered"):
        raise ValueError(f"unknown information estimator {kind!r}")
    return opg(contributions, n, centered=kind == "opg-centered")
