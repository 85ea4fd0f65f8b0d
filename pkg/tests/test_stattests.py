import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from fbmvar import stattests as sts
from fbmvar.errors import DegenerateSampleError, EmptySampleError
from fbmvar.rng import RngStream

samples = arrays(float, st.integers(1, 60), elements=st.floats(-100, 100))


class TestKS:
    def test_identical(self):
        x = np.arange(10.0)
        r = sts.ks_two_sample(x, x)
        assert r.statistic == 0.0 and r.verdict and r.test == "KS"

    def test_disjoint_singletons(self):
        assert sts.ks_two_sample([0.0], [1.0]).statistic == 1.0

    def test_empty(self):
        with pytest.raises(EmptySampleError):
            sts.ks_two_sample([], [1.0])

    @given(samples, samples)
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_statistic_matches_scipy(self, a, b):
        assert sts.ks_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)

    def test_pvalue_is_limiting_kolmogorov(self):
        a = RngStream(1, 0).normals(3000)
        b = RngStream(1, 1).normals(2000) + 0.05
        ours = sts.ks_two_sample(a, b)
        d = stats.ks_2samp(a, b).statistic
        assert ours.threshold_or_pvalue == pytest.approx(stats.kstwobign.sf(d * math.sqrt(1200)), rel=1e-12)
        # scipy's "asymp" uses the finite-size distribution; the two agree loosely
        assert ours.threshold_or_pvalue == pytest.approx(stats.ks_2samp(a, b, method="asymp").pvalue, rel=0.1)

    @given(samples, samples)
    @settings(max_examples=50)
    def test_monotone_invariance(self, a, b):
        assert sts.ks_statistic(a, b) == sts.ks_statistic(np.arctan(a / 50), np.arctan(b / 50))

    def test_self_calibration(self):
        passes = sum(
            sts.ks_two_sample(RngStream(7, 2 * i).normals(10_000), RngStream(7, 2 * i + 1).normals(10_000)).threshold_or_pvalue > 0.001
            for i in range(100)
        )
        assert passes >= 99

    def test_detects_scale_change(self):
        r = sts.ks_two_sample(RngStream(0, 0).normals(5000), 1.29 * RngStream(0, 1).normals(5000))
        assert not r.verdict

    def test_as_dict(self):
        d = sts.ks_two_sample([0.0, 1.0], [0.5]).as_dict()
        assert d["n_samples"] == [2, 1]


class TestECF:
    def test_identical(self):
        x = RngStream(3, 0).normals(100)
        assert sts.ecf_distance(x, x).statistic == 0.0

    def test_lambda_zero(self):
        assert sts.ecf_distance([0.0, 5.0], [-3.0], lambdas=[0.0]).statistic == 0.0

    def test_empty_lambda_grid(self):
        with pytest.raises(EmptySampleError):
            sts.ecf_distance([0.0], [1.0], lambdas=[])

    def test_gaussian_scale_oracle(self):
        kappa = 1.29
        a = RngStream(4, 0).normals(10_000)
        b = kappa * RngStream(4, 1).normals(10_000)
        d = sts.ecf_distance(a, b, lambdas=[1.0]).statistic
        assert d == pytest.approx(abs(math.exp(-0.5) - math.exp(-kappa**2 / 2)), abs=0.02)
        assert d == pytest.approx(0.171, abs=0.02)

    def test_nonnegative(self):
        r = sts.ecf_distance([1.0, 2.0], [0.0])
        assert r.statistic >= 0 and r.threshold_or_pvalue == 0.05


class TestMomentCheck:
    def test_constant_equal_target(self):
        r = sts.moment_check(np.full(5, 0.5), 0.5)
        assert r.verdict and r.z_score == 0.0

    def test_constant_other_target(self):
        with pytest.raises(DegenerateSampleError):
            sts.moment_check(np.full(5, 0.5), 0.6)

    def test_too_small(self):
        with pytest.raises(ValueError):
            sts.moment_check([1.0], 1.0)

    def test_arithmetic(self):
        x = np.tile([-1.0, 1.0], 5000)  # mean 0, std error 0.01
        r = sts.moment_check(x, 0.5)
        assert r.std_error == pytest.approx(0.01, rel=1e-4)
        assert r.z_score == pytest.approx(-50, rel=1e-4)
        assert not r.verdict

    @given(st.floats(0.01, 100), st.floats(-1, 1))
    def test_scale_consistency(self, c, target):
        x = RngStream(9, 0).normals(50)
        a = sts.moment_check(x, target)
        b = sts.moment_check(c * x, c * target)
        assert b.z_score == pytest.approx(a.z_score, rel=1e-9, abs=1e-9)

    def test_self_calibration(self):
        z = np.array([sts.moment_check(RngStream(11, i).normals(10_000), 0.0).z_score for i in range(1000)])
        assert np.mean(np.abs(z) <= 4) >= 0.999
