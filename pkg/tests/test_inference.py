import numpy as np
import pytest

from lrca.errors import (
    CenterRejected,
    NoBracket,
    NonPositiveSE,
    RankDeficientJacobian,
    RestrictionViolated,
    SampleSizeMismatch,
)
from lrca.inference import (
    adjusted_restricted,
    adjusted_unrestricted,
    c_alpha,
    check_coincidence_identity,
    classic_lm,
    classic_lr,
    covariance,
    estimate_pair,
    fixed_restriction,
    invert_to_interval,
    linear_restriction,
    lrc_alpha,
    lrc_alpha_subvector,
    make_outcome,
    projection_matrix,
    standard_errors,
    subvector_lr_adjustment,
    subvector_restriction,
    t_interval,
    wald,
)
from lrca.models import CriterionEvaluation


def evaluation(point, score, hessian, info=None, value=0.0, n=100):
    hessian = np.atleast_2d(np.asarray(hessian, dtype=float))
    return CriterionEvaluation(
        point=point,
        value=value,
        score=score,
        hessian=hessian,
        info=hessian if info is None else info,
        n=n,
    )


def random_spd(rng, d):
    a = rng.standard_normal((d, d))
    return a @ a.T + d * np.eye(d)


# ---------------------------------------------------------------------------
# Adjusted criteria
# ---------------------------------------------------------------------------
class TestAdjustedCriteria:
    def test_zero_score_unrestricted(self):
        e = evaluation([0.0], [0.0], [[2.0]], value=1.5)
        assert adjusted_unrestricted(e) == pytest.approx(1.5)

    def test_unrestricted_scalar(self):
        e = evaluation([0.0], [0.2], [[2.0]], value=1.0)
        assert adjusted_unrestricted(e) == pytest.approx(1.01)

    def test_unrestricted_identity(self):
        e = evaluation([0.0, 0.0], [1.0, 1.0], np.eye(2))
        assert adjusted_unrestricted(e) == pytest.approx(1.0)

    def test_projection_diag(self):
        e = evaluation([0.0, 0.0], [3.0, 4.0], np.eye(2))
        r = fixed_restriction(2, {0: 0.0})
        assert projection_matrix(e, r) == pytest.approx(np.diag([0.0, 1.0]), abs=1e-14)

    def test_projection_annihilates_jacobian(self):
        rng = np.random.default_rng(5)
        h = random_spd(rng, 4)
        e = evaluation(np.zeros(4), rng.standard_normal(4), h)
        r = linear_restriction(rng.standard_normal((2, 4)), [0.0, 0.0])
        product = r.jacobian_at(e.point) @ projection_matrix(e, r)
        assert np.max(np.abs(product)) < 1e-12

    def test_projection_rank_deficient(self):
        e = evaluation([0.0, 0.0], [1.0, 1.0], np.eye(2))
        r = linear_restriction([[1.0, 0.0], [2.0, 0.0]], [0.0, 0.0])
        with pytest.raises(RankDeficientJacobian):
            projection_matrix(e, r)

    def test_restricted_value(self):
        e = evaluation([0.0, 0.0], [3.0, 4.0], np.eye(2))
        assert adjusted_restricted(e, fixed_restriction(2, {0: 0.0})) == pytest.approx(8.0)

    def test_restricted_zero_score(self):
        e = evaluation([0.0, 0.0], [0.0, 0.0], np.eye(2), value=-2.0)
        assert adjusted_restricted(e, fixed_restriction(2, {0: 0.0})) == pytest.approx(-2.0)

    def test_restricted_interior_extremum(self):
        # score in the row space of ψ̇ and I = H → W·S = 0
        e = evaluation([0.0, 0.0], [0.7, 0.0], [[2.0, 0.3], [0.3, 1.0]], value=-0.4)
        assert adjusted_restricted(e, fixed_restriction(2, {0: 0.0})) == pytest.approx(-0.4)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------
class TestCAlpha:
    def test_zero_score(self):
        e = evaluation([0.0, 0.0], [0.0, 0.0], np.eye(2))
        assert c_alpha(e, fixed_restriction(2, {0: 0.0}), 0.05).statistic == 0.0

    def test_example(self):
        e = evaluation([0.0, 0.0], [0.3, 0.7], np.eye(2), n=100)
        outcome = c_alpha(e, fixed_restriction(2, {0: 0.0}), 0.05)
        assert outcome.statistic == pytest.approx(9.0)
        assert outcome.df == 1
        assert outcome.reject

    def test_equals_lm_with_vanishing_nuisance_score(self):
        h = np.array([[2.0, 0.4], [0.4, 1.5]])
        e = evaluation([0.1, 0.2], [0.25, 0.0], h)
        r = fixed_restriction(2, {0: 0.1})
        assert c_alpha(e, r, 0.05).statistic == pytest.approx(classic_lm(e, r, 0.05).statistic, rel=1e-12)


class TestLrcAlpha:
    def test_coincidence_equals_c_alpha(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            d = int(rng.integers(2, 6))
            q = int(rng.integers(1, d))
            point = rng.standard_normal(d)
            e = evaluation(point, rng.standard_normal(d), random_spd(rng, d), info=random_spd(rng, d), n=250)
            coefficients = rng.standard_normal((q, d))
            r = linear_restriction(coefficients, coefficients @ point)
            lrc = lrc_alpha(e, e, r, 0.05).statistic
            assert lrc == pytest.approx(c_alpha(e, r, 0.05).statistic, rel=1e-9, abs=1e-9)

    def test_interior_pair_equals_lr(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            d = int(rng.integers(2, 6))
            q = int(rng.integers(1, d))
            h_u, h_r = random_spd(rng, d), random_spd(rng, d)
            theta_tilde = rng.standard_normal(d)
            jac = rng.standard_normal((q, d))
            unres = evaluation(rng.standard_normal(d), np.zeros(d), h_u, value=0.3)
            res = evaluation(theta_tilde, jac.T @ rng.standard_normal(q), h_r, value=0.1)
            r = linear_restriction(jac, jac @ theta_tilde)
            lrc = lrc_alpha(unres, res, r, 0.05).statistic
            assert lrc == pytest.approx(classic_lr(unres, res, q, 0.05).statistic, rel=1e-10)

    def test_subvector_path_matches_general(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            d = int(rng.integers(2, 6))
            d1 = int(rng.integers(1, d))
            unres = evaluation(rng.standard_normal(d), 0.1 * rng.standard_normal(d), random_spd(rng, d), value=0.5)
            res = evaluation(rng.standard_normal(d), rng.standard_normal(d), random_spd(rng, d), value=0.2)
            r = subvector_restriction(d, res.point[:d1])
            general = lrc_alpha(unres, res, r, 0.05)
            sub = lrc_alpha_subvector(unres, res, d1, 0.05)
            assert sub.statistic == pytest.approx(general.statistic, rel=1e-10, abs=1e-10)
            assert sub.df == general.df == d1

    def test_lr_plus_adjustment(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            d = int(rng.integers(2, 6))
            d1 = int(rng.integers(1, d))
            score = np.zeros(d)
            score[:d1] = 0.05 * rng.standard_normal(d1)
            unres = evaluation(rng.standard_normal(d), np.zeros(d), random_spd(rng, d), info=random_spd(rng, d), value=0.3)
            res = evaluation(rng.standard_normal(d), score, random_spd(rng, d), info=random_spd(rng, d), value=0.2)
            r = subvector_restriction(d, res.point[:d1])
            lrc = lrc_alpha(unres, res, r, 0.05).statistic
            lr = classic_lr(unres, res, d1, 0.05).statistic
            assert lrc == pytest.approx(lr + subvector_lr_adjustment(res, d1), rel=1e-9)

    def test_adjustment_vanishes_under_information_equality(self):
        rng = np.random.default_rng(6)
        h = random_spd(rng, 3)
        res = evaluation(np.zeros(3), [0.2, -0.1, 0.0], h)
        assert subvector_lr_adjustment(res, 2) == pytest.approx(0.0, abs=1e-12)

    def test_quadratic_equals_wald(self):
        a = np.array([[2.0, 0.6], [0.6, 1.0]])
        theta_star = np.array([0.4, -0.3])
        jac = np.array([[1.0, 1.0]])
        theta_tilde = np.array([0.5, -0.5])  # on ψ(θ) = 0

        def quadratic(theta):
            u = theta_star - theta
            return evaluation(theta, a @ u, a, value=-0.5 * float(u @ a @ u), n=50)

        r = linear_restriction(jac, [0.0])
        unres = quadratic(theta_star)
        lrc = lrc_alpha(unres, quadratic(theta_tilde), r, 0.05).statistic
        gap = (jac @ theta_star).item()
        expected = 50 * gap**2 / (jac @ np.linalg.inv(a) @ jac.T).item()
        assert lrc == pytest.approx(expected, rel=1e-10)
        assert wald(theta_star, covariance(unres), r, 0.05).statistic == pytest.approx(expected, rel=1e-10)

    def test_invariant_to_restriction_scale(self):
        rng = np.random.default_rng(7)
        point = rng.standard_normal(3)
        unres = evaluation(rng.standard_normal(3), rng.standard_normal(3), random_spd(rng, 3), info=random_spd(rng, 3), value=1.0)
        res = evaluation(point, rng.standard_normal(3), random_spd(rng, 3), info=random_spd(rng, 3))
        row = np.array([[1.0, -2.0, 0.5]])
        base = lrc_alpha(unres, res, linear_restriction(row, row @ point), 0.05).statistic
        scaled = lrc_alpha(unres, res, linear_restriction(-3.0 * row, -3.0 * row @ point), 0.05).statistic
        assert scaled == pytest.approx(base, rel=1e-9)

    def test_negative_statistic_clamped(self):
        unres = evaluation([0.0, 0.0], [0.0, 0.0], np.eye(2), value=-1.0)
        res = evaluation([0.0, 0.0], [0.0, 0.0], np.eye(2), value=0.0)
        outcome = lrc_alpha(unres, res, fixed_restriction(2, {0: 0.0}), 0.05)
        assert outcome.statistic == 0.0
        assert outcome.clamped
        assert not outcome.reject

    def test_sample_size_mismatch(self):
        unres = evaluation([0.0, 0.0], [0.0, 0.0], np.eye(2), n=10)
        res = evaluation([0.0, 0.0], [0.0, 0.0], np.eye(2), n=11)
        with pytest.raises(SampleSizeMismatch):
            lrc_alpha(unres, res, fixed_restriction(2, {0: 0.0}), 0.05)

    def test_restriction_must_hold_at_restricted_point(self):
        e = evaluation([0.5, 0.0], [0.0, 0.0], np.eye(2))
        with pytest.raises(RestrictionViolated):
            lrc_alpha(e, e, fixed_restriction(2, {0: 0.0}), 0.05)


class TestClassicTests:
    def test_lr_identical_fits(self):
        e = evaluation([0.0], [0.0], [[1.0]], value=-0.7)
        assert classic_lr(e, e, 1, 0.05).statistic == 0.0

    def test_quadratic_lr_wald_lm_agree(self):
        a = np.array([[1.0, 0.5], [0.5, 2.0]])
        z_bar = np.array([0.3, 0.1])
        n = 40

        def at(theta):
            u = z_bar - theta
            return evaluation(theta, a @ u, a, value=-0.5 * float(u @ a @ u), n=n)

        theta_tilde = np.array([0.0, z_bar[1] + a[0, 1] / a[1, 1] * z_bar[0]])
        r = fixed_restriction(2, {0: 0.0})
        unres, res = at(z_bar), at(theta_tilde)
        lr = classic_lr(unres, res, 1, 0.05).statistic
        assert res.score[1] == pytest.approx(0.0, abs=1e-14)
        assert classic_lm(res, r, 0.05).statistic == pytest.approx(lr, rel=1e-10)
        assert wald(z_bar, covariance(unres), r, 0.05).statistic == pytest.approx(lr, rel=1e-10)

    def test_sandwich_covariance(self):
        h = np.diag([2.0, 4.0])
        info = np.diag([1.0, 1.0])
        e = evaluation([0.0, 0.0], [0.0, 0.0], h, info=info, n=10)
        assert covariance(e, "sandwich") == pytest.approx(np.diag([0.025, 0.00625]))
        assert standard_errors(e) == pytest.approx(np.sqrt([0.05, 0.025]))


class TestOutcomes:
    def test_reject_at_critical_value(self):
        outcome = make_outcome("LR", 3.841458820694124, 1, 0.05)
        assert outcome.reject == (outcome.statistic >= outcome.critical_value)
        assert outcome.p_value == pytest.approx(0.05, abs=1e-9)

    def test_p_value_monotone(self):
        p = [make_outcome("LR", s, 2, 0.05).p_value for s in (0.5, 1.0, 2.0, 4.0)]
        assert all(b < a for a, b in zip(p, p[1:]))

    def test_identity_check_passes(self):
        rng = np.random.default_rng(8)
        e = evaluation(np.zeros(3), rng.standard_normal(3), random_spd(rng, 3), info=random_spd(rng, 3))
        assert check_coincidence_identity(e, fixed_restriction(3, {1: 0.0})) < 1e-8

    def test_estimate_pair_checks_restriction(self):
        r = fixed_restriction(2, {1: 0.0})
        pair = estimate_pair([1.0, 0.2], [1.1, 0.0], r)
        assert pair.restricted[1] == 0.0
        with pytest.raises(RestrictionViolated):
            estimate_pair([1.0, 0.2], [1.1, 0.1], r)


# ---------------------------------------------------------------------------
# Confidence intervals
# ---------------------------------------------------------------------------
class TestTInterval:
    def test_standard_normal(self):
        ci = t_interval(0.0, 1.0, 0.95)
        assert ci.lower == pytest.approx(-1.959964, abs=1e-6)
        assert ci.upper == pytest.approx(1.959964, abs=1e-6)
        assert ci.method == "t_ratio"

    def test_zero_se(self):
        with pytest.raises(NonPositiveSE):
            t_interval(1.0, 0.0, 0.95)

    def test_not_truncated(self):
        assert t_interval(0.03, 0.02, 0.95).lower < 0.0


class TestInversion:
    @staticmethod
    def quadratic_builder(center, se):
        return lambda v: make_outcome("Q", ((v - center) / se) ** 2, 1, 0.05)

    def test_matches_wald_interval(self):
        ci = invert_to_interval(self.quadratic_builder(1.0, 0.1), 1.0, 0.95)
        wald_ci = t_interval(1.0, 0.1, 0.95)
        assert ci.lower == pytest.approx(wald_ci.lower, abs=2e-6)
        assert ci.upper == pytest.approx(wald_ci.upper, abs=2e-6)
        assert not ci.truncated_at_boundary
        assert not ci.disconnected

    def test_truncated_at_bound(self):
        ci = invert_to_interval(self.quadratic_builder(0.05, 0.1), 0.05, 0.95, bounds=(0.0, np.inf))
        assert ci.lower == 0.0
        assert ci.truncated_at_boundary
        assert ci.upper == pytest.approx(0.05 + 0.196, abs=1e-3)

    def test_checked_points_agree_with_interval(self):
        builder = self.quadratic_builder(-2.0, 0.5)
        ci = invert_to_interval(builder, -2.0, 0.95)
        assert (-2.0, True) in ci.checked
        for value, accepted in ci.checked:
            assert accepted == ci.contains(value)
            assert accepted == (not builder(value).reject)

    def test_center_rejected(self):
        with pytest.raises(CenterRejected):
            invert_to_interval(lambda v: make_outcome("Q", 100.0, 1, 0.05), 0.0, 0.95)

    def test_no_bracket(self):
        with pytest.raises(NoBracket):
            invert_to_interval(lambda v: make_outcome("Q", 0.0, 1, 0.05), 0.0, 0.95)

    def test_disconnected_region_flagged(self):
        def builder(v):
            inside = abs(v) < 1.0 or 3.0 <= v <= 5.0
            return make_outcome("Q", 0.0 if inside else 50.0, 1, 0.05)

        ci = invert_to_interval(builder, 0.0, 0.95)
        assert ci.disconnected
        assert ci.upper == pytest.approx(1.0, abs=1e-5)
        assert ci.lower == pytest.approx(-1.0, abs=1e-5)

    def test_concurrent_matches_serial(self):
        builder = self.quadratic_builder(3.0, 0.2)
        serial = invert_to_interval(builder, 3.0, 0.95)
        threaded = invert_to_interval(builder, 3.0, 0.95, concurrent=True)
        assert threaded.lower == serial.lower
        assert threaded.upper == serial.upper

    def test_center_outside_bounds(self):
        with pytest.raises(ValueError):
            invert_to_interval(self.quadratic_builder(-1.0, 0.1), -1.0, 0.95, bounds=(0.0, 1.0))
