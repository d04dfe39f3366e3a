"""LRC_α, C(α), LR, LM and Wald statistics and confidence sets by inversion.

Every criterion quantity is a per-observation average; the sample size n
enters only through the explicit n / 2n factors of the statistics.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import Callable, Literal, Optional

import numpy as np
from scipy.linalg import qr

from lrca.config import (
    CI_MAX_SPAN,
    CI_EXTRA_DOUBLINGS,
    CI_REL_WIDTH,
    RANK_TOL,
    RESTRICTION_TOL,
)
from lrca.errors import (
    CenterRejected,
    IdentityViolation,
    NoBracket,
    NonPositiveSE,
    RankDeficientJacobian,
    RestrictionViolated,
    SampleSizeMismatch,
)
from lrca.models import (
    ConfidenceInterval,
    CriterionEvaluation,
    EstimatePair,
    Restriction,
    TestOutcome,
)
from lrca.numeric_core import (
    as_vector,
    chi2_quantile,
    chi2_sf,
    normal_quantile,
    spd_inverse,
    spd_solve,
    sym_matrix,
)

logger = logging.getLogger(__name__)

TestBuilder = Callable[[float], TestOutcome]


# ---------------------------------------------------------------------------
# Restrictions
# ---------------------------------------------------------------------------
def _take(indices: list[int], theta: np.ndarray) -> np.ndarray:
    return np.asarray(theta, dtype=float)[indices]


def _linear(coefficients: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return coefficients @ np.asarray(theta, dtype=float)


def _constant(matrix: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return matrix


def fixed_restriction(d: int, fixed: dict[int, float], label: str = "") -> Restriction:
    """θ_i = v_i for every (i, v_i) in fixed."""
    indices = sorted(fixed)
    if not indices or indices[0] < 0 or indices[-1] >= d:
        raise RestrictionViolated(f"restricted indices {indices} outside 0..{d - 1}")
    selector = np.zeros((len(indices), d))
    selector[np.arange(len(indices)), indices] = 1.0
    values = [float(fixed[i]) for i in indices]
    return Restriction(
        psi=partial(_take, indices),
        jacobian=partial(_constant, selector),
        target=values,
        d=d,
        fixed=dict(zip(indices, values)),
        coefficients=selector,
        label=label,
    )


def subvector_restriction(d: int, theta01) -> Restriction:
    """θ₁ = θ₀₁ on the leading d₁ = len(theta01) coordinates."""
    theta01 = as_vector(theta01)
    return fixed_restriction(d, {i: v for i, v in enumerate(theta01)})


def linear_restriction(coefficients, target, label: str = "") -> Restriction:
    """R·θ = r."""
    r_mat = np.atleast_2d(np.asarray(coefficients, dtype=float))
    return Restriction(
        psi=partial(_linear, r_mat),
        jacobian=partial(_constant, r_mat),
        target=as_vector(target),
        d=r_mat.shape[1],
        coefficients=r_mat,
        label=label,
    )


def check_full_rank(jacobian: np.ndarray) -> None:
    """Pivoted QR of ψ̇ᵀ; every diagonal of R must exceed RANK_TOL relative."""
    q = jacobian.shape[0]
    r_factor = qr(jacobian.T, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r_factor))
    if diag.size < q or diag[0] == 0 or diag.min() <= RANK_TOL * diag[0]:
        raise RankDeficientJacobian(f"jacobian rank below q={q} (R diagonal {diag})")


def restriction_holds(r: Restriction, theta) -> bool:
    gap = np.abs(r.discrepancy(theta))
    return bool(np.all(gap <= RESTRICTION_TOL * np.maximum(1.0, np.abs(r.target))))


def check_restricted_point(r: Restriction, theta) -> None:
    if not restriction_holds(r, theta):
        raise RestrictionViolated(
            f"ψ(θ̃) - ψ₀ = {r.discrepancy(theta)} at θ̃ = {np.asarray(theta)}"
        )


def estimate_pair(
    unrestricted,
    restricted,
    r: Restriction,
    unrestricted_extremum: bool = True,
    restricted_extremum: bool = True,
) -> EstimatePair:
    check_restricted_point(r, restricted)
    return EstimatePair(
        unrestricted=unrestricted,
        restricted=restricted,
        unrestricted_extremum=unrestricted_extremum,
        restricted_extremum=restricted_extremum,
    )


# ---------------------------------------------------------------------------
# Adjusted criteria
# ---------------------------------------------------------------------------
def _unrestricted_correction(e: CriterionEvaluation) -> float:
    return 0.5 * float(e.score @ spd_solve(e.hessian, e.score))


def _restricted_correction(e: CriterionEvaluation, r: Restriction) -> float:
    w = projection_matrix(e, r)
    return 0.5 * float(e.score @ w @ e.score)


def adjusted_unrestricted(e: CriterionEvaluation) -> float:
    """L^u(θ) = L_n(θ) + ½ S_nᵀ H_n⁻¹ S_n."""
    return e.value + _unrestricted_correction(e)


def projection_matrix(e: CriterionEvaluation, r: Restriction) -> np.ndarray:
    """W_n = H⁻¹ − H⁻¹ψ̇ᵀ[ψ̇H⁻¹IH⁻¹ψ̇ᵀ]⁻¹ψ̇H⁻¹."""
    jac = r.jacobian_at(e.point)
    check_full_rank(jac)
    h_inv_jt = spd_solve(e.hessian, jac.T)
    middle = sym_matrix(h_inv_jt.T @ e.info @ h_inv_jt)
    w = spd_inverse(e.hessian) - h_inv_jt @ spd_solve(middle, h_inv_jt.T)
    return sym_matrix(w)


def adjusted_restricted(e: CriterionEvaluation, r: Restriction) -> float:
    """L^r(θ) = L_n(θ) + ½ S_nᵀ W_n S_n."""
    return e.value + _restricted_correction(e, r)


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------
def _clamp(name: str, raw: float) -> tuple[float, bool]:
    if raw < 0:
        logger.debug("%s statistic %.3e negative; clamped to 0", name, raw)
        return 0.0, True
    return raw, False


def make_outcome(name: str, statistic: float, df: int, level: float, clamped: bool = False) -> TestOutcome:
    """Reject iff statistic ≥ q_{1−α}(χ²_df)."""
    critical = chi2_quantile(df, 1.0 - level)
    return TestOutcome(
        name=name,
        statistic=statistic,
        df=df,
        p_value=chi2_sf(df, statistic),
        level=level,
        critical_value=critical,
        reject=statistic >= critical,
        clamped=clamped,
    )


def _same_n(unres: CriterionEvaluation, res: CriterionEvaluation) -> int:
    if unres.n != res.n:
        raise SampleSizeMismatch(f"unrestricted n={unres.n}, restricted n={res.n}")
    return unres.n


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------
def lrc_alpha(
    unres: CriterionEvaluation,
    res: CriterionEvaluation,
    r: Restriction,
    level: float,
    name: str = "LRCa",
) -> TestOutcome:
    """LRC_α = 2n(L^u(θ̂) − L^r(θ̃)), χ²_q under H0."""
    n = _same_n(unres, res)
    check_restricted_point(r, res.point)
    diff = (unres.value - res.value) + (
        _unrestricted_correction(unres) - _restricted_correction(res, r)
    )
    statistic, clamped = _clamp(name, 2.0 * n * diff)
    if r.q == r.d:
        logger.debug("q = d: χ²_d calibration is outside the stated theory")
    return make_outcome(name, statistic, r.q, level, clamped)


def c_alpha(res: CriterionEvaluation, r: Restriction, level: float, name: str = "Ca") -> TestOutcome:
    """Score-type C(α): n·SᵀH⁻¹ψ̇ᵀ(ψ̇H⁻¹IH⁻¹ψ̇ᵀ)⁻¹ψ̇H⁻¹S."""
    jac = r.jacobian_at(res.point)
    check_full_rank(jac)
    h_inv_jt = spd_solve(res.hessian, jac.T)
    middle = sym_matrix(h_inv_jt.T @ res.info @ h_inv_jt)
    u = h_inv_jt.T @ res.score
    statistic = res.n * float(u @ spd_solve(middle, u))
    return make_outcome(name, max(statistic, 0.0), r.q, level)


def check_coincidence_identity(e: CriterionEvaluation, r: Restriction, rtol: float = 1e-8) -> float:
    """2n(L^u(θ) − L^r(θ)) must equal C_α at the same point; returns the gap."""
    lhs = 2.0 * e.n * (_unrestricted_correction(e) - _restricted_correction(e, r))
    rhs = c_alpha(e, r, 0.05).statistic
    gap = abs(lhs - rhs)
    if gap > rtol * max(1.0, abs(rhs)):
        raise IdentityViolation(f"2n(L^u − L^r) = {lhs:.12g} but C_α = {rhs:.12g}")
    return gap


def lrc_alpha_subvector(
    unres: CriterionEvaluation,
    res: CriterionEvaluation,
    d1: int,
    level: float,
    name: str = "LRCa",
) -> TestOutcome:
    """Subvector form under information equality.

    L^r(θ) = L_n(θ) + ½ S₂ᵀH₂₂⁻¹S₂ with θ₁ the leading d1 coordinates.
    """
    n = _same_n(unres, res)
    s2 = res.score[d1:]
    restricted_corr = 0.0
    if s2.size:
        restricted_corr = 0.5 * float(s2 @ spd_solve(res.hessian[d1:, d1:], s2))
    diff = (unres.value - res.value) + (_unrestricted_correction(unres) - restricted_corr)
    statistic, clamped = _clamp(name, 2.0 * n * diff)
    return make_outcome(name, statistic, d1, level, clamped)


def subvector_lr_adjustment(res: CriterionEvaluation, d1: int) -> float:
    """n·S₁ᵀ(A·B⁻¹·A − A)S₁ with A = (H⁻¹)₁₁ and B = (H⁻¹IH⁻¹)₁₁.

    Added to 2n(L_n(θ̂) − L_n(θ̃)) it gives LRC_α for extremum pairs with
    S_n(θ̂) = 0 and S₂(θ̃) = 0; it vanishes when I_n = H_n.
    """
    h_inv = spd_inverse(res.hessian)
    a = h_inv[:d1, :d1]
    b = sym_matrix((h_inv @ res.info @ h_inv)[:d1, :d1])
    s1 = res.score[:d1]
    a_s1 = a @ s1
    return res.n * (float(a_s1 @ spd_solve(b, a_s1)) - float(s1 @ a_s1))


def classic_lr(
    unres: CriterionEvaluation,
    res: CriterionEvaluation,
    df: int,
    level: float,
    name: str = "LR",
) -> TestOutcome:
    n = _same_n(unres, res)
    statistic, clamped = _clamp(name, 2.0 * n * (unres.value - res.value))
    return make_outcome(name, statistic, df, level, clamped)


def classic_lm(res: CriterionEvaluation, r: Restriction, level: float, name: str = "LM") -> TestOutcome:
    """n·S_n(θ̃)ᵀH_n(θ̃)⁻¹S_n(θ̃)."""
    statistic = res.n * float(res.score @ spd_solve(res.hessian, res.score))
    return make_outcome(name, max(statistic, 0.0), r.q, level)


def covariance(e: CriterionEvaluation, kind: Literal["hessian", "sandwich"] = "hessian") -> np.ndarray:
    """Covariance of θ̂: H⁻¹/n, or the sandwich H⁻¹IH⁻¹/n."""
    h_inv = spd_inverse(e.hessian)
    if kind == "sandwich":
        return sym_matrix(h_inv @ e.info @ h_inv / e.n)
    return h_inv / e.n


def standard_errors(e: CriterionEvaluation, kind: Literal["hessian", "sandwich"] = "hessian") -> np.ndarray:
    return np.sqrt(np.diag(covariance(e, kind)))


def wald(theta_hat, cov, r: Restriction, level: float, name: str = "Wald") -> TestOutcome:
    """(ψ(θ̂)−ψ₀)ᵀ[ψ̇ cov ψ̇ᵀ]⁻¹(ψ(θ̂)−ψ₀)."""
    theta_hat = as_vector(theta_hat)
    jac = r.jacobian_at(theta_hat)
    check_full_rank(jac)
    gap = r.discrepancy(theta_hat)
    v = sym_matrix(jac @ np.asarray(cov, dtype=float) @ jac.T)
    statistic = float(gap @ spd_solve(v, gap))
    return make_outcome(name, max(statistic, 0.0), r.q, level)


# ---------------------------------------------------------------------------
# Confidence intervals
# ---------------------------------------------------------------------------
def t_interval(estimate: float, se: float, level: float) -> ConfidenceInterval:
    """estimate ± z·se; deliberately not truncated at parameter-space bounds."""
    if not se > 0 or not math.isfinite(se):
        raise NonPositiveSE(f"standard error must be positive, got {se}")
    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    return ConfidenceInterval(
        lower=estimate - z * se,
        upper=estimate + z * se,
        level=level,
        method="t_ratio",
        estimate=estimate,
    )


def _beyond(value: float, bound: float, direction: int) -> bool:
    return direction * (value - bound) >= 0


def _resolve_endpoint(
    accepts: Callable[[float], bool],
    center: float,
    direction: int,
    bound: float,
    step: float,
    width: float,
    span: float,
) -> tuple[float, bool, bool, list[tuple[float, bool]]]:
    checked: list[tuple[float, bool]] = []

    def check(value: float) -> bool:
        ok = accepts(value)
        checked.append((value, ok))
        return ok

    inner = center
    while True:
        candidate = center + direction * step
        if _beyond(candidate, bound, direction):
            if check(bound):
                return bound, True, False, checked
            outer = bound
            break
        if not check(candidate):
            outer = candidate
            break
        inner = candidate
        if step > span:
            raise NoBracket(f"no rejection within {span:.3g} of {center}")
        step *= 2.0

    disconnected = False
    reach = abs(outer - center)
    for _ in range(CI_EXTRA_DOUBLINGS):
        reach *= 2.0
        value = center + direction * reach
        if _beyond(value, bound, direction):
            break
        if check(value):
            disconnected = True
            logger.warning("acceptance region is disconnected beyond %.6g", outer)
            break

    while abs(outer - inner) > width:
        mid = 0.5 * (inner + outer)
        if check(mid):
            inner = mid
        else:
            outer = mid
    return inner, False, disconnected, checked


def invert_to_interval(
    test_builder: TestBuilder,
    center: float,
    level: float,
    bounds: Optional[tuple[float, float]] = None,
    initial_step: Optional[float] = None,
    concurrent: bool = False,
) -> ConfidenceInterval:
    """Connected acceptance component of test_builder containing center.

    Brackets expand geometrically from center until a rejection or the
    parameter-space bound, then each endpoint is bisected to width
    1e-6·max(1, |center|).
    """
    lower_bound, upper_bound = bounds if bounds is not None else (-math.inf, math.inf)
    if not lower_bound <= center <= upper_bound:
        raise ValueError(f"center {center} outside bounds {bounds}")
    if test_builder(center).reject:
        raise CenterRejected(f"test rejects at the center {center}")

    def accepts(value: float) -> bool:
        return not test_builder(value).reject

    scale = max(1.0, abs(center))
    step = initial_step if initial_step is not None else 0.1 * max(abs(center), 1e-2)
    args = dict(step=step, width=CI_REL_WIDTH * scale, span=CI_MAX_SPAN * scale)

    if concurrent:
        with ThreadPoolExecutor(max_workers=2) as pool:
            low_future = pool.submit(_resolve_endpoint, accepts, center, -1, lower_bound, **args)
            high_future = pool.submit(_resolve_endpoint, accepts, center, 1, upper_bound, **args)
            low, high = low_future.result(), high_future.result()
    else:
        low = _resolve_endpoint(accepts, center, -1, lower_bound, **args)
        high = _resolve_endpoint(accepts, center, 1, upper_bound, **args)

    return ConfidenceInterval(
        lower=low[0],
        upper=high[0],
        level=level,
        method="inversion",
        estimate=center,
        truncated_at_boundary=low[1] or high[1],
        disconnected=low[2] or high[2],
        checked=sorted([(center, True), *low[3], *high[3]]),
    )
