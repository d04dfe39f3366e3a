import numpy as np
import pytest

from lrca.arch import arch_qmle, arch_simulate
from lrca.errors import UnknownModel, UsageError
from lrca.families import ArchFamily, ErrorComponentsFamily, WeibullFamily, describe, get_family
from lrca.inference import restriction_holds
from lrca.models import ArchParams, EcParams
from lrca.error_components import ec_simulate

ARCH_NAMES = ["omega", "alpha1", "alpha2"]


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------
class TestRegistry:
    def test_known_models(self):
        assert isinstance(get_family("arch", order=3), ArchFamily)
        assert get_family("arch", order=3).order == 3
        assert isinstance(get_family("weibull"), WeibullFamily)
        assert isinstance(get_family("error-components"), ErrorComponentsFamily)

    def test_alias(self):
        assert isinstance(get_family("ec"), ErrorComponentsFamily)

    def test_unknown_model(self):
        with pytest.raises(UnknownModel) as exc:
            get_family("garch")
        assert "arch" in str(exc.value)

    def test_describe_lists_parameters_and_format(self):
        text = describe("weibull")
        assert "eta" in text
        assert "data format" in text
        assert "hessian" in text

    def test_parameter_names(self):
        assert get_family("arch", order=2).parameter_names(np.zeros(10)) == ARCH_NAMES


# ---------------------------------------------------------------------------
# Restriction grammar
# ---------------------------------------------------------------------------
class TestParseRestriction:
    family = ArchFamily(order=2)

    def test_single_fixed(self):
        r = self.family.parse_restriction("alpha2=0", ARCH_NAMES)
        assert r.fixed == {2: 0.0}
        assert r.q == 1

    def test_several_fixed(self):
        r = self.family.parse_restriction("alpha1=0.1, alpha2=0", ARCH_NAMES)
        assert r.fixed == {1: 0.1, 2: 0.0}

    def test_linear(self):
        r = self.family.parse_restriction("alpha1+2*alpha2=0.3", ARCH_NAMES)
        assert r.fixed is None
        assert r.coefficients.tolist() == [[0.0, 1.0, 2.0]]
        assert r.target.tolist() == [0.3]

    def test_linear_with_minus(self):
        r = self.family.parse_restriction("alpha1 - alpha2 = 0", ARCH_NAMES)
        assert r.coefficients.tolist() == [[0.0, 1.0, -1.0]]

    def test_unknown_name(self):
        with pytest.raises(UsageError) as exc:
            self.family.parse_restriction("beta=0", ARCH_NAMES)
        assert "omega" in str(exc.value)

    def test_no_equals(self):
        with pytest.raises(UsageError):
            self.family.parse_restriction("alpha1", ARCH_NAMES)

    def test_repeated_name(self):
        with pytest.raises(UsageError):
            self.family.parse_restriction("alpha1=0,alpha1=0.2", ARCH_NAMES)

    def test_bad_number(self):
        with pytest.raises(UsageError):
            self.family.parse_restriction("alpha1=zero", ARCH_NAMES)

    def test_missing_operator(self):
        with pytest.raises(UsageError):
            self.family.parse_restriction("alpha1 alpha2=0", ARCH_NAMES)

    def test_zero_row(self):
        with pytest.raises(UsageError):
            self.family.parse_restriction("alpha1-alpha1=0", ARCH_NAMES)


# ---------------------------------------------------------------------------
# Fits through the family interface
# ---------------------------------------------------------------------------
class TestFamilyFits:
    def test_arch_fit_matches_qmle(self):
        x = arch_simulate(ArchParams(omega=1.0, alpha=(0.3, 0.1)), 1000, seed=2)
        family = ArchFamily(order=2)
        assert family.fit(x).point == pytest.approx(arch_qmle(x, 2).point, abs=1e-8)

    def test_fixed_restriction_fit(self):
        x = arch_simulate(ArchParams(omega=1.0, alpha=(0.3, 0.1)), 1000, seed=2)
        family = ArchFamily(order=2)
        r = family.parse_restriction("alpha2=0", ARCH_NAMES)
        fit = family.fit_restricted(x, r)
        assert fit.point[2] == 0.0
        assert restriction_holds(r, fit.point)

    def test_linear_restriction_fit(self):
        rng = np.random.default_rng(0)
        N, T = 20, 6
        X = np.column_stack([np.ones(N * T), rng.standard_normal(N * T)])
        panel = ec_simulate(EcParams(beta=(1.0, 0.5), sigma2_v=1.0, sigma2_eta=0.3, sigma2_lambda=0.2), X, N, T, seed=1)
        family = ErrorComponentsFamily()
        names = family.parameter_names(panel)
        r = family.parse_restriction("beta0+beta1=1.5", names)
        fit = family.fit_restricted(panel, r)
        assert fit.converged
        assert fit.point[0] + fit.point[1] == pytest.approx(1.5, abs=1e-10)

    def test_evaluate_uses_default_info(self):
        x = arch_simulate(ArchParams(omega=1.0, alpha=(0.3, 0.1)), 300, seed=2)
        family = ArchFamily(order=2)
        e = family.evaluate([1.0, 0.2, 0.1], x)
        assert not np.allclose(e.info, e.hessian)
        assert np.array_equal(family.evaluate([1.0, 0.2, 0.1], x, "hessian").info, e.hessian)
