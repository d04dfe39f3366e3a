from __future__ import annotations

import math
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveInt,
    field_validator,
    model_validator,
)

from lrca.config import (
    ACTIVE_TOL,
    ARMIJO,
    DEFAULT_LEVELS,
    DESK_SIZE_REPLICATIONS,
    GTOL,
    MAX_ITER,
    MIN_STEP,
    SHRINK,
    STALL_TOL,
)
from lrca.errors import DimensionMismatch, NonFiniteEvaluation, UnbalancedPanel
from lrca.numeric_core import as_vector, sym_matrix

TestName = Literal["LRCa", "LRCa2", "Ca", "Ca2", "LR", "LM", "Wald"]
InfoKind = Literal["opg", "opg-centered", "hessian"]
DgpId = Literal[
    "DGP1", "DGP2", "DGP3", "DGP4", "DGP5", "DGP6",
    "weibull-size", "weibull-power", "gaussian-linear", "custom",
]


class ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------
class CriterionEvaluation(ArrayModel):
    """L_n, S_n, H_n, I_n at one point; all per-observation averages."""

    point: np.ndarray
    value: float
    score: np.ndarray
    hessian: np.ndarray
    info: np.ndarray
    n: PositiveInt

    @field_validator("point", "score", mode="before")
    @classmethod
    def _vector(cls, v):
        return as_vector(v)

    @field_validator("hessian", "info", mode="before")
    @classmethod
    def _matrix(cls, v):
        return sym_matrix(v)

    @model_validator(mode="after")
    def _dims(self) -> CriterionEvaluation:
        d = self.point.size
        if self.score.size != d or self.hessian.shape != (d, d) or self.info.shape != (d, d):
            raise DimensionMismatch(
                f"point dim {d}, score {self.score.size}, "
                f"hessian {self.hessian.shape}, info {self.info.shape}"
            )
        if not math.isfinite(self.value):
            raise NonFiniteEvaluation(f"criterion value {self.value}")
        return self

    @property
    def d(self) -> int:
        return self.point.size

    def with_info(self, info) -> CriterionEvaluation:
        return self.model_copy(update={"info": sym_matrix(info)})

    def hessian_as_info(self) -> CriterionEvaluation:
        """Information-equality variant: I_n := H_n."""
        return self.with_info(self.hessian)


class Restriction(ArrayModel):
    """H0: ψ(θ) = ψ₀ with ψ: R^d → R^q."""

    psi: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    target: np.ndarray
    d: PositiveInt
    fixed: Optional[dict[int, float]] = None
    coefficients: Optional[np.ndarray] = None
    label: str = ""

    @field_validator("target", mode="before")
    @classmethod
    def _target(cls, v):
        return as_vector(v)

    @model_validator(mode="after")
    def _q(self) -> Restriction:
        if self.q > self.d:
            raise DimensionMismatch(f"q={self.q} restrictions on d={self.d} parameters")
        return self

    @property
    def q(self) -> int:
        return self.target.size

    def value(self, theta) -> np.ndarray:
        return as_vector(self.psi(np.asarray(theta, dtype=float)))

    def discrepancy(self, theta) -> np.ndarray:
        return self.value(theta) - self.target

    def jacobian_at(self, theta) -> np.ndarray:
        jac = np.atleast_2d(np.asarray(self.jacobian(np.asarray(theta, dtype=float)), dtype=float))
        if jac.shape != (self.q, self.d):
            raise DimensionMismatch(f"jacobian shape {jac.shape}, expected {(self.q, self.d)}")
        return jac


class EstimatePair(ArrayModel):
    unrestricted: np.ndarray
    restricted: np.ndarray
    unrestricted_extremum: bool = True
    restricted_extremum: bool = True

    @field_validator("unrestricted", "restricted", mode="before")
    @classmethod
    def _vector(cls, v):
        return as_vector(v)


class TestOutcome(BaseModel):
    __test__ = False  # not a pytest class

    name: str
    statistic: float = Field(ge=0)
    df: PositiveInt
    p_value: float = Field(ge=0, le=1)
    level: float = Field(gt=0, lt=1)
    critical_value: float
    reject: bool
    clamped: bool = False


class ConfidenceInterval(BaseModel):
    lower: float
    upper: float
    level: float = Field(gt=0, lt=1)
    method: Literal["inversion", "t_ratio"]
    estimate: Optional[float] = None
    truncated_at_boundary: bool = False
    disconnected: bool = False
    checked: list[tuple[float, bool]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _ordered(self) -> ConfidenceInterval:
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        return self

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------
class Bounds(ArrayModel):
    lower: np.ndarray
    upper: np.ndarray

    @field_validator("lower", "upper", mode="before")
    @classmethod
    def _extended(cls, v):
        a = np.atleast_1d(np.asarray(v, dtype=float))
        if np.any(np.isnan(a)):
            raise ValueError("bounds must not contain NaN")
        return a

    @model_validator(mode="after")
    def _ordered(self) -> Bounds:
        if self.lower.shape != self.upper.shape:
            raise DimensionMismatch(f"bounds shapes {self.lower.shape} vs {self.upper.shape}")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        return self

    @classmethod
    def unbounded(cls, d: int) -> Bounds:
        return cls(lower=np.full(d, -np.inf), upper=np.full(d, np.inf))

    @property
    def d(self) -> int:
        return self.lower.size

    def project(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def subset(self, indices) -> Bounds:
        idx = list(indices)
        return Bounds(lower=self.lower[idx], upper=self.upper[idx])


class OptimizeOptions(BaseModel):
    max_iter: PositiveInt = MAX_ITER
    gtol: float = Field(default=GTOL, gt=0)
    stall_tol: float = Field(default=STALL_TOL, gt=0)
    armijo: float = Field(default=ARMIJO, gt=0, lt=1)
    shrink: float = Field(default=SHRINK, gt=0, lt=1)
    min_step: float = Field(default=MIN_STEP, gt=0)
    active_tol: float = Field(default=ACTIVE_TOL, ge=0)
    multistart: int = Field(default=0, ge=0)
    jitter: float = Field(default=0.1, gt=0)
    seed: int = 0


class FitResult(ArrayModel):
    point: np.ndarray
    value: float
    converged: bool
    iterations: int = Field(ge=0)
    active_set: tuple[int, ...] = ()
    stalled: bool = False
    message: str = ""


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------
class ArchParams(BaseModel):
    omega: float = Field(gt=0)
    alpha: tuple[float, ...]

    @field_validator("alpha")
    @classmethod
    def _nonnegative(cls, v):
        if any(a < 0 for a in v):
            raise ValueError(f"ARCH coefficients must be nonnegative, got {v}")
        return v

    @property
    def p(self) -> int:
        return len(self.alpha)

    @property
    def vector(self) -> np.ndarray:
        return np.array((self.omega, *self.alpha), dtype=float)

    @classmethod
    def from_vector(cls, theta) -> ArchParams:
        theta = np.asarray(theta, dtype=float)
        return cls(omega=float(theta[0]), alpha=tuple(float(a) for a in theta[1:]))


class WeibullParams(BaseModel):
    beta: tuple[float, ...]
    eta: float = Field(gt=0)

    @property
    def vector(self) -> np.ndarray:
        return np.array((*self.beta, self.eta), dtype=float)

    @classmethod
    def from_vector(cls, theta) -> WeibullParams:
        theta = np.asarray(theta, dtype=float)
        return cls(beta=tuple(float(b) for b in theta[:-1]), eta=float(theta[-1]))

    def monotone_hazard(self) -> bool:
        return self.eta >= 1.0


class EcParams(BaseModel):
    beta: tuple[float, ...]
    sigma2_v: float = Field(gt=0)
    sigma2_eta: float = Field(ge=0)
    sigma2_lambda: float = Field(ge=0)

    @property
    def vector(self) -> np.ndarray:
        return np.array((*self.beta, self.sigma2_v, self.sigma2_eta, self.sigma2_lambda), dtype=float)

    @classmethod
    def from_vector(cls, theta) -> EcParams:
        theta = np.asarray(theta, dtype=float)
        return cls(
            beta=tuple(float(b) for b in theta[:-3]),
            sigma2_v=float(theta[-3]),
            sigma2_eta=float(theta[-2]),
            sigma2_lambda=float(theta[-1]),
        )


class PanelData(ArrayModel):
    """Balanced panel, rows i-major and t-minor."""

    N: PositiveInt
    T: PositiveInt
    y: np.ndarray
    X: np.ndarray
    covariate_names: list[str] = Field(default_factory=list)

    @field_validator("y", mode="before")
    @classmethod
    def _y(cls, v):
        return as_vector(v)

    @field_validator("X", mode="before")
    @classmethod
    def _x(cls, v):
        x = np.asarray(v, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if not np.all(np.isfinite(x)):
            raise NonFiniteEvaluation("non-finite covariates")
        return x

    @model_validator(mode="after")
    def _rows(self) -> PanelData:
        if self.X.shape[0] != self.y.size:
            raise DimensionMismatch(f"y has {self.y.size} rows, X has {self.X.shape[0]}")
        return self

    def require_balanced(self) -> None:
        """Every individual observed in every period: N·T rows."""
        rows = self.N * self.T
        if self.y.size != rows:
            raise UnbalancedPanel(f"{self.y.size} rows for N={self.N}, T={self.T}; a balanced panel has {rows}")

    @classmethod
    def build(cls, N: int, T: int, y, X, covariate_names: Optional[list[str]] = None) -> PanelData:
        panel = cls(N=N, T=T, y=y, X=X, covariate_names=covariate_names or [])
        panel.require_balanced()
        return panel

    @property
    def k(self) -> int:
        return self.X.shape[1]

    @property
    def n(self) -> int:
        return self.N * self.T


class SurvivalData(ArrayModel):
    """Uncensored event times with covariate rows (intercept included)."""

    times: np.ndarray
    X: np.ndarray
    covariate_names: list[str] = Field(default_factory=list)

    @field_validator("times", mode="before")
    @classmethod
    def _times(cls, v):
        return as_vector(v)

    @model_validator(mode="after")
    def _rows(self) -> SurvivalData:
        if self.X.ndim != 2 or self.X.shape[0] != self.times.size:
            raise DimensionMismatch(f"X shape {self.X.shape} for {self.times.size} times")
        return self

    @property
    def n(self) -> int:
        return self.times.size


# ---------------------------------------------------------------------------
# montecarlo
# ---------------------------------------------------------------------------
class ExperimentConfig(BaseModel):
    dgp: DgpId
    params: Optional[list[float]] = None
    n: PositiveInt
    replications: PositiveInt = DESK_SIZE_REPLICATIONS
    master_seed: int = 0
    levels: list[float] = Field(default_factory=lambda: list(DEFAULT_LEVELS))
    tests: Optional[list[TestName]] = None
    null: Optional[list[float]] = None
    restrict: Optional[list[int]] = None
    qmle_start: Literal["restricted-ols", "ols"] = "restricted-ols"
    shape_restricted: bool = False
    info: Optional[InfoKind] = None
    rho: float = Field(default=0.9, gt=-1, lt=1)
    df_override: Optional[PositiveInt] = None
    workers: PositiveInt = 1
    self_check: bool = False

    @field_validator("levels")
    @classmethod
    def _levels(cls, v):
        if not v or any(not 0 < a < 1 for a in v):
            raise ValueError(f"levels must lie in (0, 1), got {v}")
        return v


class RejectionRow(BaseModel):
    dgp: str
    n: int
    test: str
    level: float
    rate: float = Field(ge=0, le=1)
    failures: int = Field(ge=0)


class RejectionTable(BaseModel):
    rows: list[RejectionRow]
    replications: PositiveInt
    failures: int = Field(ge=0)

    def rate(self, test: str, level: float) -> float:
        for row in self.rows:
            if row.test == test and math.isclose(row.level, level):
                return row.rate
        raise KeyError(f"no row for test={test}, level={level}")

    @property
    def successes(self) -> int:
        return self.replications - self.failures


class PowerCurve(BaseModel):
    grid: list[float]
    rates: dict[str, list[float]]
    level: float
    n: PositiveInt
    replications: PositiveInt
    failures: list[int]

    @model_validator(mode="after")
    def _grid(self) -> PowerCurve:
        if not self.grid:
            raise ValueError("power grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("power grid must be strictly increasing")
        for test, rates in self.rates.items():
            if len(rates) != len(self.grid):
                raise ValueError(f"{test}: {len(rates)} rates for {len(self.grid)} grid points")
        return self


class CalibrationSummary(BaseModel):
    dgp: str
    n: int
    test: str
    df: PositiveInt
    replications: int
    failures: int
    quantiles: dict[str, float]
    reference_quantiles: dict[str, float]
    ks_distance: float
    ks_band: float
    flagged: bool
    statistics: list[float] = Field(default_factory=list, repr=False)


# ---------------------------------------------------------------------------
# cli
# ---------------------------------------------------------------------------
class TestReport(BaseModel):
    __test__ = False

    model: str
    restriction: str
    parameters: list[str]
    unrestricted: list[float]
    restricted: list[float]
    outcomes: list[TestOutcome]


class RunConfig(BaseModel):
    command: Literal["simulate", "test", "ci", "power", "calibrate", "describe"]
    model: Optional[str] = None
    data: Optional[Path] = None
    experiment: Optional[ExperimentConfig] = None
    restrict: Optional[str] = None
    param: Optional[str] = None
    level: float = Field(default=0.05, gt=0, lt=1)
    method: Literal["inversion", "t"] = "inversion"
    grid: Optional[list[float]] = None
    order: PositiveInt = 1
    info: Optional[InfoKind] = None
    se: Literal["hessian", "sandwich"] = "hessian"
    shape_restricted: bool = False
    out: Optional[Path] = None
    formats: list[Literal["csv", "md"]] = Field(default_factory=lambda: ["csv", "md"])
    archive: Optional[Path] = None

    @field_validator("data")
    @classmethod
    def _exists(cls, v):
        if v is not None and not Path(v).is_file():
            raise ValueError(f"data file not found: {v}")
        return v
