"""Model registry used by the CLI: data loading, parameter names, fits.

Restriction grammar over parameter names:
    fixed components     name=value[,name=value...]
    one linear equation  c1*name1+c2*name2=value
"""
from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from lrca.arch import arch_bounds, arch_criterion, arch_objective, arch_ols
from lrca.datasets import read_panel, read_series, read_survival
from lrca.error_components import ec_bounds, ec_criterion, ec_objective, ec_start
from lrca.errors import UnknownModel, UsageError
from lrca.inference import fixed_restriction, linear_restriction
from lrca.models import (
    Bounds,
    CriterionEvaluation,
    FitResult,
    InfoKind,
    OptimizeOptions,
    PanelData,
    Restriction,
    SurvivalData,
)
from lrca.optimize import maximize_box, maximize_fixed, maximize_linear
from lrca.weibull import weibull_bounds, weibull_criterion, weibull_objective, weibull_start

logger = logging.getLogger(__name__)

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_TERM = re.compile(rf"\s*([+-])?\s*(?:({_NUMBER})\s*\*\s*)?([A-Za-z_]\w*)\s*")
_NAME = re.compile(r"^\s*([A-Za-z_]\w*)\s*$")


class ModelFamily:
    """Common fitting logic; subclasses supply data, names and the criterion."""

    id: str = ""
    default_info: InfoKind = "opg"
    data_format: str = ""
    parameter_doc: tuple[str, ...] = ()

    def load(self, path: Path) -> Any:
        raise NotImplementedError

    def parameter_names(self, data: Any) -> list[str]:
        raise NotImplementedError

    def bounds(self, data: Any, shape_restricted: bool = False) -> Bounds:
        raise NotImplementedError

    def start(self, data: Any) -> np.ndarray:
        raise NotImplementedError

    def objective(self, data: Any) -> tuple[Callable, Callable]:
        raise NotImplementedError

    def evaluate(self, theta, data: Any, info: Optional[InfoKind] = None) -> CriterionEvaluation:
        raise NotImplementedError

    # ------------------------------------------------------------------
    # Fits
    # ------------------------------------------------------------------
    def fit(
        self,
        data: Any,
        fixed: Optional[dict[int, float]] = None,
        shape_restricted: bool = False,
        start: Optional[np.ndarray] = None,
        options: Optional[OptimizeOptions] = None,
    ) -> FitResult:
        bounds = self.bounds(data, shape_restricted)
        x0 = bounds.project(self.start(data) if start is None else start)
        fun, hess = self.objective(data)
        if fixed:
            return maximize_fixed(fun, x0, bounds, fixed, jac=True, hess=hess, options=options)
        return maximize_box(fun, x0, bounds, jac=True, hess=hess, options=options)

    def fit_restricted(
        self,
        data: Any,
        restriction: Restriction,
        shape_restricted: bool = False,
        start: Optional[np.ndarray] = None,
        options: Optional[OptimizeOptions] = None,
    ) -> FitResult:
        if restriction.fixed is not None:
            return self.fit(data, restriction.fixed, shape_restricted, start, options)
        bounds = self.bounds(data, shape_restricted)
        x0 = bounds.project(self.start(data) if start is None else start)
        fun, hess = self.objective(data)
        return maximize_linear(
            fun, x0, bounds, restriction.coefficients, restriction.target,
            jac=True, hess=hess, options=options,
        )

    # ------------------------------------------------------------------
    # Restrictions
    # ------------------------------------------------------------------
    def parse_restriction(self, spec: str, names: list[str]) -> Restriction:
        if spec.count("=") < 1:
            raise UsageError(f"restriction {spec!r} has no '='")
        clauses = spec.split(",")
        lhs, _, _ = clauses[0].partition("=")
        if len(clauses) == 1 and not _NAME.match(lhs):
            return self._parse_linear(spec, names)
        fixed: dict[int, float] = {}
        for clause in clauses:
            name, sep, value = clause.partition("=")
            match = _NAME.match(name)
            if not sep or not match:
                raise UsageError(f"cannot parse restriction clause {clause!r}")
            index = self.index_of(match.group(1), names)
            if index in fixed:
                raise UsageError(f"parameter {match.group(1)!r} restricted twice")
            fixed[index] = _number(value, clause)
        return fixed_restriction(len(names), fixed, label=spec)

    def _parse_linear(self, spec: str, names: list[str]) -> Restriction:
        lhs, _, rhs = spec.partition("=")
        row = np.zeros(len(names))
        position = 0
        while position < len(lhs):
            match = _TERM.match(lhs, position)
            if not match or match.end() == position:
                raise UsageError(f"cannot parse linear restriction {spec!r} at {lhs[position:]!r}")
            if position > 0 and match.group(1) is None:
                raise UsageError(f"missing '+' or '-' before {match.group(3)!r} in {spec!r}")
            sign = -1.0 if match.group(1) == "-" else 1.0
            coefficient = float(match.group(2)) if match.group(2) else 1.0
            row[self.index_of(match.group(3), names)] += sign * coefficient
            position = match.end()
        if not np.any(row):
            raise UsageError(f"linear restriction {spec!r} has no nonzero coefficient")
        return linear_restriction(row[None, :], [_number(rhs, spec)], label=spec)

    @staticmethod
    def index_of(name: str, names: list[str]) -> int:
        if name not in names:
            raise UsageError(f"unknown parameter {name!r}; valid names: {', '.join(names)}")
        return names.index(name)

    # ------------------------------------------------------------------
    # describe
    # ------------------------------------------------------------------
    def describe(self) -> str:
        lines = [f"model: {self.id}", "parameters:"]
        lines += [f"  {entry}" for entry in self.parameter_doc]
        lines += [
            f"default information estimator: {self.default_info}",
            "restriction syntax:",
            "  name=value[,name=value...]   fix components",
            "  c1*name1+c2*name2=value      one linear restriction",
            f"data format: {self.data_format}",
        ]
        return "\n".join(lines)


def _number(text: str, context: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise UsageError(f"not a number: {text.strip()!r} in {context!r}") from e


class ArchFamily(ModelFamily):
    id = "arch"
    default_info: InfoKind = "opg"
    data_format = "CSV with header and a single column x (the series); presample values are zero"
    parameter_doc = (
        "omega     ω > 0 (fitted with ω ≥ 1e-8)",
        "alpha1..alphap   α_j ≥ 0 (fitted with α_j ≤ 0.9999); p set by --order",
    )

    def __init__(self, order: int = 1):
        self.order = order

    def load(self, path: Path) -> np.ndarray:
        return read_series(path)

    def parameter_names(self, data: np.ndarray) -> list[str]:
        return ["omega", *(f"alpha{j}" for j in range(1, self.order + 1))]

    def bounds(self, data: np.ndarray, shape_restricted: bool = False) -> Bounds:
        return arch_bounds(self.order)

    def start(self, data: np.ndarray) -> np.ndarray:
        return arch_ols(data, self.order, restricted=True)

    def objective(self, data: np.ndarray):
        return arch_objective(data, self.order)

    def evaluate(self, theta, data: np.ndarray, info: Optional[InfoKind] = None) -> CriterionEvaluation:
        return arch_criterion(theta, data, info or self.default_info)


class WeibullFamily(ModelFamily):
    id = "weibull"
    default_info: InfoKind = "hessian"
    data_format = "CSV with header: time, then covariate columns; an intercept is added"
    parameter_doc = (
        "beta0     intercept, unbounded",
        "beta1..betak   covariate coefficients in column order, unbounded",
        "eta       shape η > 0; --shape-restricted imposes η ≥ 1 on the restricted fit",
    )

    def load(self, path: Path) -> SurvivalData:
        return read_survival(path)

    def parameter_names(self, data: SurvivalData) -> list[str]:
        return [*(f"beta{j}" for j in range(data.X.shape[1])), "eta"]

    def bounds(self, data: SurvivalData, shape_restricted: bool = False) -> Bounds:
        return weibull_bounds(data.X.shape[1], shape_restricted)

    def start(self, data: SurvivalData) -> np.ndarray:
        return weibull_start(data.X, data.times)

    def objective(self, data: SurvivalData):
        return weibull_objective(data.X, data.times)

    def evaluate(self, theta, data: SurvivalData, info: Optional[InfoKind] = None) -> CriterionEvaluation:
        return weibull_criterion(theta, data.X, data.times, info or self.default_info)


class ErrorComponentsFamily(ModelFamily):
    id = "error-components"
    default_info: InfoKind = "hessian"
    data_format = (
        "CSV with header: id, t, y, then covariate columns; balanced, sorted by id then t; "
        "an intercept is added"
    )
    parameter_doc = (
        "beta0     intercept, unbounded",
        "beta1..betak   covariate coefficients in column order, unbounded",
        "sigma2_v        idiosyncratic variance > 0 (fitted with ≥ 1e-10)",
        "sigma2_eta      individual-effect variance ≥ 0",
        "sigma2_lambda   time-effect variance ≥ 0",
    )

    def load(self, path: Path) -> PanelData:
        return read_panel(path)

    def parameter_names(self, data: PanelData) -> list[str]:
        return [*(f"beta{j}" for j in range(data.k)), "sigma2_v", "sigma2_eta", "sigma2_lambda"]

    def bounds(self, data: PanelData, shape_restricted: bool = False) -> Bounds:
        return ec_bounds(data.k)

    def start(self, data: PanelData) -> np.ndarray:
        return ec_start(data)

    def objective(self, data: PanelData):
        return ec_objective(data)

    def evaluate(self, theta, data: PanelData, info: Optional[InfoKind] = None) -> CriterionEvaluation:
        return ec_criterion(theta, data, info or self.default_info)


FAMILIES: dict[str, type[ModelFamily]] = {
    "arch": ArchFamily,
    "weibull": WeibullFamily,
    "error-components": ErrorComponentsFamily,
}
ALIASES = {"ec": "error-components"}


def get_family(model_id: str, order: int = 1) -> ModelFamily:
    key = ALIASES.get(model_id, model_id)
    if key not in FAMILIES:
        raise UnknownModel(f"unknown model {model_id!r}; valid models: {', '.join(FAMILIES)}")
    if key == "arch":
        return ArchFamily(order)
    return FAMILIES[key]()


def describe(model_id: str) -> str:
    return get_family(model_id).describe()
