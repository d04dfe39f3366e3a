"""Hypothesis tests and confidence intervals on user data."""
from __future__ import annotations

import logging
from typing import Any, Literal, Optional, Union

import numpy as np

from lrca.errors import NotConverged
from lrca.families import ModelFamily
from lrca.inference import (
    c_alpha,
    classic_lm,
    classic_lr,
    covariance,
    fixed_restriction,
    invert_to_interval,
    lrc_alpha,
    standard_errors,
    t_interval,
    wald,
)
from lrca.models import (
    ConfidenceInterval,
    FitResult,
    InfoKind,
    OptimizeOptions,
    Restriction,
    TestOutcome,
    TestReport,
)

logger = logging.getLogger(__name__)

SeKind = Literal["hessian", "sandwich"]


def _require(fit: FitResult, what: str) -> FitResult:
    if not fit.converged:
        raise NotConverged(f"{what} fit did not converge: {fit.message}")
    return fit


def run_test(
    family: ModelFamily,
    data: Any,
    restriction: Union[str, Restriction],
    level: float = 0.05,
    info: Optional[InfoKind] = None,
    shape_restricted: bool = False,
    se: SeKind = "hessian",
    options: Optional[OptimizeOptions] = None,
) -> TestReport:
    """LRC_α, C_α, LR, LM and Wald for one restriction."""
    names = family.parameter_names(data)
    r = family.parse_restriction(restriction, names) if isinstance(restriction, str) else restriction
    unres = _require(family.fit(data, options=options), "unrestricted")
    res = _require(
        family.fit_restricted(data, r, shape_restricted, start=unres.point, options=options),
        "restricted",
    )
    eu = family.evaluate(unres.point, data, info)
    er = family.evaluate(res.point, data, info)
    outcomes: list[TestOutcome] = [
        lrc_alpha(eu, er, r, level),
        c_alpha(er, r, level),
        classic_lr(eu, er, r.q, level),
        classic_lm(er, r, level),
        wald(eu.point, covariance(eu, se), r, level),
    ]
    return TestReport(
        model=family.id,
        restriction=r.label,
        parameters=names,
        unrestricted=unres.point.tolist(),
        restricted=res.point.tolist(),
        outcomes=outcomes,
    )


def build_interval(
    family: ModelFamily,
    data: Any,
    param: str,
    level: float = 0.95,
    method: Literal["inversion", "t"] = "inversion",
    info: Optional[InfoKind] = None,
    se: SeKind = "hessian",
    options: Optional[OptimizeOptions] = None,
    concurrent: bool = False,
) -> ConfidenceInterval:
    """Confidence interval for one parameter at confidence `level`.

    inversion collects the values θ_j = v that LRC_α does not reject at
    1 − level, restricted to the parameter space; t is the Wald interval
    estimate ± z·se.
    """
    names = family.parameter_names(data)
    index = family.index_of(param, names)
    unres = _require(family.fit(data, options=options), "unrestricted")
    eu = family.evaluate(unres.point, data, info)
    center = float(unres.point[index])

    if method == "t":
        return t_interval(center, float(standard_errors(eu, se)[index]), level)

    bounds = family.bounds(data)
    d = len(names)

    def test_at(value: float) -> TestOutcome:
        fit = family.fit(data, fixed={index: value}, start=unres.point, options=options)
        if not fit.converged:
            logger.warning("restricted fit at %s=%.6g did not converge", param, value)
        r = fixed_restriction(d, {index: value})
        return lrc_alpha(eu, family.evaluate(fit.point, data, info), r, 1.0 - level)

    interval = invert_to_interval(
        test_at,
        center,
        level,
        bounds=(float(bounds.lower[index]), float(bounds.upper[index])),
        concurrent=concurrent,
    )
    logger.info("%s %.0f%% interval [%.6g, %.6g]", param, 100 * level, interval.lower, interval.upper)
    return interval


def estimates(family: ModelFamily, data: Any, options: Optional[OptimizeOptions] = None) -> dict[str, float]:
    fit = _require(family.fit(data, options=options), "unrestricted")
    return dict(zip(family.parameter_names(data), np.asarray(fit.point).tolist()))
