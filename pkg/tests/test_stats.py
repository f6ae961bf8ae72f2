import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from hmjb.errors import DegenerateSample, InvalidParam, NoCdf, NotSymmetric, PluginVarianceWarning, SmallSampleWarning
from hmjb.families import square_family
from hmjb.harness import sample_model, substream
from hmjb.influence import PLUGIN_WARNING, jb_coefficients
from hmjb.moments import empirical_moments, laplace_moments, normal_moments
from hmjb.stats import (
    TestReport,
    as_sample,
    chi2_general,
    chi2_symmetric,
    chi2_upper_tail,
    classical_jb,
    empirical_central_moment,
    general_test,
    kolmogorov_sf,
    ks_distance,
    ks_test,
    min_sample_size,
    normal_upper_tail,
    sample_ncem,
    statistic_T,
)

SQ = square_family()


@pytest.fixture
def normal_sample():
    return sample_model(normal_moments(0, 1), 500, substream(11, 0))


class TestTails:
    def test_chi2(self):
        assert chi2_upper_tail(5.991) == pytest.approx(0.05, abs=1e-4)
        assert chi2_upper_tail(0.0) == 1.0
        assert chi2_upper_tail(7.815, dof=3) == pytest.approx(0.05, abs=1e-4)

    def test_normal(self):
        assert normal_upper_tail(1.81) == pytest.approx(0.03515, abs=1e-4)
        assert normal_upper_tail(0.0) == 0.5
        np.testing.assert_allclose(normal_upper_tail(np.array([0.0, 1.96])), [0.5, 0.025], atol=1e-4)

    @pytest.mark.parametrize("t", [0.05, 0.2, 0.5, 0.59, 0.61, 0.8, 1.0, 1.36, 2.0, 3.0, 5.0])
    def test_kolmogorov_against_scipy(self, t):
        assert kolmogorov_sf(t) == pytest.approx(special.kolmogorov(t), abs=1e-10)

    def test_kolmogorov_edges(self):
        assert kolmogorov_sf(0.0) == 1.0
        assert kolmogorov_sf(-1.0) == 1.0
        assert kolmogorov_sf(50.0) == 0.0


class TestSampleMoments:
    def test_central_moment(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert empirical_central_moment(x, 2) == 1.25
        assert empirical_central_moment(x, 3) == 0.0
        assert empirical_central_moment(x, 1) == 0.0
        with pytest.raises(InvalidParam):
            empirical_central_moment(x, 0)

    def test_ncem_symmetric_sample(self):
        nc = sample_ncem([-1.0, 1.0], 2)
        assert nc.b == 0.0 and nc.a == 1.0

    def test_ncem_degenerate(self):
        with pytest.raises(DegenerateSample):
            sample_ncem([3.0, 3.0, 3.0], 2)

    def test_statistic_T(self):
        x = [-1.0, 1.0]
        assert statistic_T(x, SQ, 3) == pytest.approx(2.0)  # a2 = a3 = 1, b = 0

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-100, 100), st.floats(0.01, 100), st.booleans())
    def test_affine_invariance(self, shift, scale, flip):
        x = sample_model(laplace_moments(1.0), 60, substream(5, 0))
        y = (-1 if flip else 1) * scale * x + shift
        for p in (2, 3):
            a, b = sample_ncem(x, p), sample_ncem(y, p)
            assert b.a == pytest.approx(a.a, rel=1e-8)
            assert b.b == pytest.approx((-1 if flip else 1) * a.b, rel=1e-7, abs=1e-9)


class TestValidation:
    def test_min_sample_size(self):
        assert min_sample_size(2) == 8
        assert min_sample_size(3) == 8
        assert min_sample_size(5) == 12

    def test_as_sample(self):
        with pytest.raises(DegenerateSample):
            as_sample(np.arange(7.0), 2)
        with pytest.raises(DegenerateSample):
            as_sample([1.0] * 10, 2)
        with pytest.raises(DegenerateSample):
            as_sample([1.0, np.nan] + list(range(8)), 2)
        assert as_sample(np.arange(5.0), 2, min_n=3).size == 5


class TestGeneral:
    def test_report_fields(self, normal_sample):
        rep = general_test(normal_sample, normal_moments(0, 1), SQ, 3)
        assert rep.test_kind == "general_normal"
        assert rep.sigma2_used == pytest.approx(5_638_464.0)
        t = math.sqrt(500) * (rep.statistic - 234.0) / math.sqrt(5_638_464.0)
        assert rep.standardized == pytest.approx(t, rel=1e-12)
        assert rep.p_value == pytest.approx(min(1.0, 2 * normal_upper_tail(abs(t))))
        assert rep.p_value_convention == "two_sided_abs"
        assert rep.warnings == []
        d = rep.to_dict()
        assert "warnings" not in d and d["k"] == 3 and d["family"] == "square"
        assert "statistic" in rep.to_text()

    def test_one_sided(self, normal_sample):
        two = general_test(normal_sample, normal_moments(0, 1), SQ, 2)
        one = general_test(normal_sample, normal_moments(0, 1), SQ, 2, tail="one_sided_abs")
        assert two.p_value == pytest.approx(min(1.0, 2 * one.p_value))

    def test_plugin(self, normal_sample):
        with pytest.warns(PluginVarianceWarning):
            rep = general_test(normal_sample, normal_moments(0, 1), SQ, 2, variance_source="plugin")
        assert PLUGIN_WARNING in rep.warnings
        assert rep.variance_source == "plugin"

    def test_small_sample_warning(self):
        x = sample_model(normal_moments(0, 1), 12, substream(1, 0))
        with pytest.warns(SmallSampleWarning):
            rep = general_test(x, normal_moments(0, 1), SQ, 2)
        assert rep.warnings

    def test_bad_options(self, normal_sample):
        with pytest.raises(InvalidParam):
            general_test(normal_sample, normal_moments(0, 1), SQ, 2, tail="left")
        with pytest.raises(InvalidParam):
            general_test(normal_sample, normal_moments(0, 1), SQ, 2, variance_source="guess")


class TestChiSquare:
    def test_classical_jb_equivalence(self, normal_sample):
        jb = classical_jb(normal_sample)
        sym = chi2_symmetric(normal_sample, normal_moments(0, 1), 2)
        assert sym.statistic == pytest.approx(jb.statistic, rel=1e-12)
        nc = sample_ncem(normal_sample, 2)
        assert jb.statistic == pytest.approx(500 * (nc.b**2 / 6 + (nc.a - 3) ** 2 / 24), rel=1e-12)
        assert jb.p_value == pytest.approx(math.exp(-jb.statistic / 2))
        assert jb.p_value_convention == "upper_tail"

    def test_general_reduces_to_symmetric(self, normal_sample):
        for p in (2, 3):
            g = chi2_general(normal_sample, laplace_moments(1.0), p)
            s = chi2_symmetric(normal_sample, laplace_moments(1.0), p)
            assert g.statistic == pytest.approx(s.statistic, rel=1e-12)

    @pytest.mark.parametrize("p", [2, 3])
    def test_general_matches_matrix_inverse(self, rng, normal_sample, p):
        model = empirical_moments(rng.gamma(2.0, size=300))
        c = jb_coefficients(p, model)
        cov = np.array([[c.bj, c.abj], [c.abj, c.aj]])
        nc = sample_ncem(normal_sample, p)
        from hmjb.moments import theoretical_ncem

        ref = theoretical_ncem(model, p)
        v = np.array([nc.b - ref.b, nc.a - ref.a])
        oracle = 500 * v @ np.linalg.inv(cov) @ v
        assert chi2_general(normal_sample, model, p).statistic == pytest.approx(oracle, rel=1e-9)

    def test_not_symmetric(self, rng, normal_sample):
        with pytest.raises(NotSymmetric):
            chi2_symmetric(normal_sample, empirical_moments(rng.gamma(2.0, size=100)))


class TestKS:
    def test_single_point(self, std_normal):
        assert ks_distance(np.array([0.0]), std_normal.cdf) == pytest.approx(0.5)

    def test_quantile_sample(self, std_normal):
        from scipy import stats

        n = 40
        x = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
        assert ks_distance(x, std_normal.cdf) == pytest.approx(0.5 / n, rel=1e-9)

    def test_matches_scipy(self, normal_sample, std_normal):
        from scipy import stats

        rep = ks_test(normal_sample, std_normal)
        d = stats.kstest(normal_sample, "norm").statistic
        assert rep.statistic == pytest.approx(math.sqrt(500) * d, rel=1e-12)
        assert rep.p_value == pytest.approx(special.kolmogorov(rep.statistic), abs=1e-10)

    def test_rows(self, std_normal):
        x = sample_model(std_normal, 30, substream(2, 0)).reshape(3, 10)
        d = ks_distance(x, std_normal.cdf)
        assert d.shape == (3,)
        assert d[1] == pytest.approx(ks_distance(x[1], std_normal.cdf))

    def test_no_cdf(self, normal_sample):
        with pytest.raises(NoCdf):
            ks_test(normal_sample, empirical_moments(normal_sample))


def test_report_not_collected():
    assert TestReport.__test__ is False
