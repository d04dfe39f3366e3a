import math

import numpy as np
import pytest

from lrca.config import DIGAMMA_ONE, GUMBEL_SD
from lrca.errors import DegenerateDenominator, DimensionMismatch, NonPositiveShape, NonPositiveTime
from lrca.models import WeibullParams
from lrca.numeric_core import fd_gradient, fd_hessian
from lrca.weibull import (
    weibull_bounds,
    weibull_criterion,
    weibull_hazard,
    weibull_mle,
    weibull_moment_eta,
    weibull_simulate,
    weibull_start,
)


def covariates(n, seed=0):
    rng = np.random.default_rng(seed)
    return np.column_stack([np.ones(n), rng.uniform(0.0, 1.0, n)])


@pytest.fixture(scope="module")
def sample():
    X = covariates(400)
    times = weibull_simulate(WeibullParams(beta=(-5.0, 1.0), eta=1.0), X, seed=3)
    return X, times


# ---------------------------------------------------------------------------
# Model pieces
# ---------------------------------------------------------------------------
class TestWeibullPieces:
    def test_single_observation_value(self):
        e = weibull_criterion([0.0, 1.0], np.ones((1, 1)), [1.0])
        assert e.value == pytest.approx(-1.0)

    def test_hazard(self):
        params = WeibullParams(beta=(0.0,), eta=2.0)
        assert weibull_hazard(1.0, [1.0], params) == pytest.approx(2.0)

    def test_hazard_monotone_flag(self):
        assert WeibullParams(beta=(0.0,), eta=1.0).monotone_hazard()
        assert not WeibullParams(beta=(0.0,), eta=0.5).monotone_hazard()

    def test_hazard_rejects_nonpositive_time(self):
        with pytest.raises(NonPositiveTime):
            weibull_hazard(0.0, [1.0], WeibullParams(beta=(0.0,), eta=2.0))

    def test_nonpositive_shape(self, sample):
        X, times = sample
        with pytest.raises(NonPositiveShape):
            weibull_criterion([-5.0, 1.0, 0.0], X, times)

    def test_nonpositive_time(self):
        with pytest.raises(NonPositiveTime):
            weibull_criterion([0.0, 1.0], np.ones((2, 1)), [1.0, -2.0])

    def test_column_mismatch(self, sample):
        X, times = sample
        with pytest.raises(DimensionMismatch):
            weibull_criterion([0.0, 1.0], X, times)

    def test_simulation_is_deterministic(self):
        X = covariates(50)
        params = WeibullParams(beta=(-5.0, 1.0), eta=1.0)
        assert np.array_equal(weibull_simulate(params, X, 9), weibull_simulate(params, X, 9))

    def test_simulated_times_positive(self, sample):
        assert np.all(sample[1] > 0)


# ---------------------------------------------------------------------------
# Simulator moments
# ---------------------------------------------------------------------------
class TestWeibullSimulateMoments:
    N = 100_000

    @pytest.fixture(scope="class")
    def unit_exponential(self):
        X = np.ones((self.N, 1))
        return X, weibull_simulate(WeibullParams(beta=(0.0,), eta=1.0), X, seed=31)

    def test_mean_time(self, unit_exponential):
        _, times = unit_exponential
        assert np.mean(times) == pytest.approx(1.0, abs=3.0 / math.sqrt(self.N))

    def test_mean_log_time(self, unit_exponential):
        _, times = unit_exponential
        se = GUMBEL_SD / math.sqrt(self.N)
        assert np.mean(np.log(times)) == pytest.approx(DIGAMMA_ONE, abs=3.0 * se)

    def test_score_is_unbiased_at_truth(self):
        X = covariates(self.N, seed=8)
        theta = np.array([-5.0, 1.0, 1.0])
        times = weibull_simulate(WeibullParams.from_vector(theta), X, seed=12)
        e = weibull_criterion(theta, X, times, info="opg")
        se = np.sqrt(np.diag(e.info) / self.N)
        assert np.all(np.abs(e.score) <= 3.0 * se)


# ---------------------------------------------------------------------------
# Criterion derivatives
# ---------------------------------------------------------------------------
class TestWeibullDerivatives:
    def test_score_matches_finite_differences(self, sample):
        X, times = sample
        rng = np.random.default_rng(1)
        for _ in range(20):
            theta = np.array([rng.uniform(-6.0, -4.0), rng.uniform(0.0, 2.0), rng.uniform(0.5, 1.5)])
            e = weibull_criterion(theta, X, times)
            fd = fd_gradient(lambda t: weibull_criterion(t, X, times).value, theta)
            assert np.allclose(fd, e.score, rtol=1e-5, atol=1e-7)

    def test_hessian_matches_finite_differences(self, sample):
        X, times = sample
        theta = np.array([-5.0, 1.0, 1.0])
        e = weibull_criterion(theta, X, times)
        numeric = -fd_hessian(lambda t: weibull_criterion(t, X, times).value, theta)
        assert np.allclose(e.hessian, numeric, rtol=1e-4, atol=1e-5)

    def test_hessian_is_positive_definite(self, sample):
        X, times = sample
        e = weibull_criterion([-5.0, 1.0, 1.0], X, times)
        assert np.all(np.linalg.eigvalsh(e.hessian) > 0)


# ---------------------------------------------------------------------------
# Moment estimator of the shape
# ---------------------------------------------------------------------------
class TestMomentEta:
    X = np.array([[1.0, 0.5], [1.0, 0.5]])
    times = np.exp([4.5, 4.5])  # Σ log t = 9

    def test_negated_convention(self):
        eta = weibull_moment_eta([-5.0, 1.0], self.X, self.times, convention="negated")
        assert eta == pytest.approx(1.128270, abs=1e-6)

    def test_consistent_convention(self):
        eta = weibull_moment_eta([-5.0, 1.0], self.X, self.times)
        assert eta == pytest.approx((9.0 - 2.0 * 0.5772157) / 9.0, abs=1e-7)

    def test_consistent_at_truth(self):
        X = covariates(20_000, seed=5)
        times = weibull_simulate(WeibullParams(beta=(-5.0, 1.0), eta=1.0), X, seed=6)
        assert weibull_moment_eta([-5.0, 1.0], X, times) == pytest.approx(1.0, rel=0.02)

    def test_zero_denominator(self):
        with pytest.raises(DegenerateDenominator):
            weibull_moment_eta([-5.0, 1.0], self.X, [1.0, 1.0])

    def test_nonpositive_estimate(self):
        # numerator −Σxβ + nΓ′(1) is negative here
        with pytest.raises(DegenerateDenominator):
            weibull_moment_eta([5.0, 1.0], self.X, self.times)


# ---------------------------------------------------------------------------
# Maximum likelihood
# ---------------------------------------------------------------------------
class TestWeibullMle:
    def test_start_is_finite(self, sample):
        start = weibull_start(*sample)
        assert np.all(np.isfinite(start))
        assert start[-1] > 0

    def test_recovers_parameters(self):
        X = covariates(3000, seed=11)
        times = weibull_simulate(WeibullParams(beta=(-5.0, 1.0), eta=1.5), X, seed=12)
        fit = weibull_mle(X, times)
        assert fit.converged
        assert fit.point[2] == pytest.approx(1.5, abs=0.1)
        assert fit.point[1] == pytest.approx(1.0, abs=0.3)

    def test_score_vanishes_at_interior_maximum(self, sample):
        X, times = sample
        fit = weibull_mle(X, times)
        assert np.linalg.norm(weibull_criterion(fit.point, X, times).score) < 1e-6

    def test_shape_restriction_binds(self):
        X = covariates(2000, seed=13)
        times = weibull_simulate(WeibullParams(beta=(-2.0, 1.0), eta=0.6), X, seed=14)
        fit = weibull_mle(X, times, shape_restricted=True)
        assert fit.point[2] == 1.0
        assert 2 in fit.active_set

    def test_fixed_coordinates(self, sample):
        X, times = sample
        fit = weibull_mle(X, times, fixed={0: -5.0, 1: 1.0})
        assert fit.point[:2].tolist() == [-5.0, 1.0]
        assert weibull_criterion(fit.point, X, times).score[2] == pytest.approx(0.0, abs=1e-6)

    def test_bounds(self):
        assert weibull_bounds(2, shape_restricted=True).lower[2] == 1.0
        assert math.isinf(weibull_bounds(2).upper[0])
