"""Box-constrained maximization and restricted fits.

Criteria are maximized, not minimized. `jac` follows scipy's convention:
None means finite differences, True means `fun` returns (value, gradient),
a callable returns the gradient. `hess` returns H = −∇²f (positive
definite near a maximum) and turns the quasi-Newton step into a Newton
step on the free coordinates whenever H restricted to them is PD.
"""
from __future__ import annotations

import logging
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import null_space

from lrca.errors import (
    InputError,
    NotPositiveDefinite,
    NumericalError,
    UnsupportedRestriction,
)
from lrca.models import Bounds, FitResult, OptimizeOptions
from lrca.numeric_core import as_vector, fd_gradient, spd_solve

logger = logging.getLogger(__name__)

Jac = Union[None, bool, Callable[[np.ndarray], np.ndarray]]
Hess = Optional[Callable[[np.ndarray], np.ndarray]]


def _evaluator(fun: Callable, jac: Jac) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    if jac is True:
        def evaluate(x):
            value, grad = fun(x)
            return float(value), np.asarray(grad, dtype=float)
    elif callable(jac):
        def evaluate(x):
            return float(fun(x)), np.asarray(jac(x), dtype=float)
    else:
        def evaluate(x):
            return float(fun(x)), fd_gradient(fun, x)
    return evaluate


def _value_only(fun: Callable, jac: Jac) -> Callable[[np.ndarray], float]:
    if jac is True:
        return lambda x: float(fun(x)[0])
    return lambda x: float(fun(x))


def _at_bounds(x: np.ndarray, bounds: Bounds, tol: float) -> tuple[int, ...]:
    hit = (np.abs(x - bounds.lower) <= tol) | (np.abs(bounds.upper - x) <= tol)
    return tuple(int(i) for i in np.flatnonzero(hit))


def _projected_gradient(x: np.ndarray, g: np.ndarray, bounds: Bounds) -> float:
    return float(np.max(np.abs(bounds.project(x + g) - x)))


def _ascend(
    evaluate: Callable[[np.ndarray], tuple[float, np.ndarray]],
    value_of: Callable[[np.ndarray], float],
    hess: Hess,
    x0: np.ndarray,
    bounds: Bounds,
    opts: OptimizeOptions,
) -> FitResult:
    x = bounds.project(x0)
    f, g = evaluate(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericalError(f"criterion not finite at the start {x}")
    d = x.size
    inv_approx = np.eye(d)

    for iteration in range(opts.max_iter):
        scale = max(1.0, float(np.max(np.abs(x))))
        pg = _projected_gradient(x, g, bounds)
        if pg <= opts.gtol * scale:
            return FitResult(
                point=x, value=f, converged=True, iterations=iteration,
                active_set=_at_bounds(x, bounds, opts.active_tol),
            )

        binding = ((x <= bounds.lower + opts.active_tol) & (g < 0)) | (
            (x >= bounds.upper - opts.active_tol) & (g > 0)
        )
        free = np.flatnonzero(~binding)
        direction = np.zeros(d)
        newton = False
        if hess is not None:
            try:
                h = np.asarray(hess(x), dtype=float)
                direction[free] = spd_solve(h[np.ix_(free, free)], g[free])
                newton = True
            except NumericalError:
                pass
        if not newton:
            direction[free] = inv_approx[np.ix_(free, free)] @ g[free]
        if float(direction @ g) <= 0:
            inv_approx = np.eye(d)
            direction = np.zeros(d)
            direction[free] = g[free]

        step = 1.0
        accepted = False
        while step >= opts.min_step:
            candidate = bounds.project(x + step * direction)
            try:
                f_new = value_of(candidate)
            except NumericalError:
                f_new = -np.inf
            if np.isfinite(f_new) and f_new >= f + opts.armijo * float(g @ (candidate - x)):
                accepted = f_new >= f
                break
            step *= opts.shrink

        if not accepted:
            if pg <= opts.stall_tol * scale:
                logger.debug("line search stalled at projected gradient %.3e; accepted", pg)
                return FitResult(
                    point=x, value=f, converged=True, iterations=iteration, stalled=True,
                    active_set=_at_bounds(x, bounds, opts.active_tol),
                    message="stalled at rounding floor",
                )
            if not np.array_equal(inv_approx, np.eye(d)) or newton:
                inv_approx = np.eye(d)
                hess = None
                continue
            logger.debug("line search stalled at projected gradient %.3e; rejected", pg)
            return FitResult(
                point=x, value=f, converged=False, iterations=iteration, stalled=True,
                active_set=_at_bounds(x, bounds, opts.active_tol),
                message=f"line search failed with projected gradient {pg:.3e}",
            )

        f_new, g_new = evaluate(candidate)
        s = candidate - x
        y = g - g_new
        sy = float(s @ y)
        if sy > 1e-10 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            rho = 1.0 / sy
            left = np.eye(d) - rho * np.outer(s, y)
            inv_approx = left @ inv_approx @ left.T + rho * np.outer(s, s)
        x, f, g = candidate, f_new, g_new

    logger.warning("optimizer hit %d iterations without converging", opts.max_iter)
    return FitResult(
        point=x, value=f, converged=False, iterations=opts.max_iter,
        active_set=_at_bounds(x, bounds, opts.active_tol),
        message="maximum iterations reached",
    )


def _better(a: FitResult, b: FitResult) -> bool:
    if a.converged != b.converged:
        return a.converged
    return a.value > b.value


def maximize_box(
    fun: Callable,
    x0,
    bounds: Optional[Bounds] = None,
    *,
    jac: Jac = None,
    hess: Hess = None,
    options: Optional[OptimizeOptions] = None,
) -> FitResult:
    """Projected quasi-Newton ascent.

    Converged when ‖P(θ + g) − θ‖∞ ≤ gtol·max(1, ‖θ‖∞). A line search that
    cannot improve the value ends the fit with stalled=True; it counts as
    converged only below stall_tol·max(1, ‖θ‖∞).
    """
    opts = options or OptimizeOptions()
    x0 = as_vector(x0)
    bounds = bounds or Bounds.unbounded(x0.size)
    if bounds.d != x0.size:
        raise InputError(f"bounds have dimension {bounds.d}, start has {x0.size}")
    if not bounds.contains(x0):
        raise InputError(f"start {x0} outside bounds")

    evaluate = _evaluator(fun, jac)
    value_of = _value_only(fun, jac)
    best = _ascend(evaluate, value_of, hess, x0, bounds, opts)

    if opts.multistart:
        rng = np.random.default_rng(opts.seed)
        for _ in range(opts.multistart):
            jitter = opts.jitter * np.maximum(1.0, np.abs(x0)) * rng.standard_normal(x0.size)
            try:
                result = _ascend(evaluate, value_of, hess, bounds.project(x0 + jitter), bounds, opts)
            except NumericalError as e:
                logger.debug("restart discarded: %s", e)
                continue
            if _better(result, best):
                best = result
    return best


def maximize_fixed(
    fun: Callable,
    x0,
    bounds: Optional[Bounds],
    fixed: dict[int, float],
    *,
    jac: Jac = None,
    hess: Hess = None,
    options: Optional[OptimizeOptions] = None,
) -> FitResult:
    """maximize_box over the coordinates not in `fixed`, the rest pinned."""
    opts = options or OptimizeOptions()
    template = as_vector(x0).copy()
    d = template.size
    bounds = bounds or Bounds.unbounded(d)
    for i, v in fixed.items():
        if not 0 <= i < d:
            raise InputError(f"fixed index {i} outside 0..{d - 1}")
        if not bounds.lower[i] <= v <= bounds.upper[i]:
            raise InputError(f"fixed value {v} for index {i} outside bounds")
        template[i] = v
    free = [i for i in range(d) if i not in fixed]

    if not free:
        return FitResult(
            point=template, value=_value_only(fun, jac)(template), converged=True,
            iterations=0, active_set=_at_bounds(template, bounds, opts.active_tol),
        )

    def embed(z: np.ndarray) -> np.ndarray:
        x = template.copy()
        x[free] = z
        return x

    if jac is True:
        def sub_fun(z):
            value, grad = fun(embed(z))
            return value, np.asarray(grad)[free]
        sub_jac: Jac = True
    else:
        sub_fun = lambda z: fun(embed(z))  # noqa: E731
        sub_jac = (lambda z: np.asarray(jac(embed(z)))[free]) if callable(jac) else None
    sub_hess = (lambda z: np.asarray(hess(embed(z)))[np.ix_(free, free)]) if hess else None

    result = maximize_box(
        sub_fun, bounds.subset(free).project(template[free]), bounds.subset(free),
        jac=sub_jac, hess=sub_hess, options=opts,
    )
    point = embed(result.point)
    return result.model_copy(
        update={"point": point, "active_set": _at_bounds(point, bounds, opts.active_tol)}
    )


def maximize_linear(
    fun: Callable,
    x0,
    bounds: Optional[Bounds],
    coefficients,
    target,
    *,
    jac: Jac = None,
    hess: Hess = None,
    options: Optional[OptimizeOptions] = None,
) -> FitResult:
    """Maximize subject to R·θ = r by null-space reparameterization.

    Coordinates with a nonzero column in R must be unbounded; the others
    keep their box.
    """
    opts = options or OptimizeOptions()
    x0 = as_vector(x0)
    d = x0.size
    bounds = bounds or Bounds.unbounded(d)
    r_mat = np.atleast_2d(np.asarray(coefficients, dtype=float))
    target = as_vector(target)

    support = np.flatnonzero(np.any(r_mat != 0, axis=0))
    rest = np.setdiff1d(np.arange(d), support)
    if np.any(np.isfinite(bounds.lower[support])) or np.any(np.isfinite(bounds.upper[support])):
        raise UnsupportedRestriction("linear restrictions must involve unbounded coordinates only")
    r_support = r_mat[:, support]
    if np.linalg.matrix_rank(r_support) < r_mat.shape[0]:
        raise UnsupportedRestriction("linear restriction matrix is rank deficient")

    particular = np.linalg.lstsq(r_support, target, rcond=None)[0]
    basis = null_space(r_support)
    m = basis.shape[1]
    offset = np.zeros(d)
    offset[support] = particular
    transform = np.zeros((d, m + rest.size))
    transform[np.ix_(support, np.arange(m))] = basis
    transform[rest, m + np.arange(rest.size)] = 1.0

    def embed(z: np.ndarray) -> np.ndarray:
        return offset + transform @ z

    if transform.shape[1] == 0:
        point = offset
        return FitResult(
            point=point, value=_value_only(fun, jac)(point), converged=True, iterations=0,
            active_set=_at_bounds(point, bounds, opts.active_tol),
        )

    if jac is True:
        def sub_fun(z):
            value, grad = fun(embed(z))
            return value, transform.T @ np.asarray(grad)
        sub_jac: Jac = True
    else:
        sub_fun = lambda z: fun(embed(z))  # noqa: E731
        sub_jac = (lambda z: transform.T @ np.asarray(jac(embed(z)))) if callable(jac) else None
    sub_hess = (lambda z: transform.T @ np.asarray(hess(embed(z))) @ transform) if hess else None

    z_bounds = Bounds(
        lower=np.concatenate([np.full(m, -np.inf), bounds.lower[rest]]),
        upper=np.concatenate([np.full(m, np.inf), bounds.upper[rest]]),
    )
    z0 = np.concatenate([basis.T @ (x0[support] - particular), x0[rest]])
    result = maximize_box(sub_fun, z_bounds.project(z0), z_bounds, jac=sub_jac, hess=sub_hess, options=opts)
    point = embed(result.point)
    return result.model_copy(
        update={"point": point, "active_set": _at_bounds(point, bounds, opts.active_tol)}
    )
