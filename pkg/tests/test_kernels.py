import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mixsum.errors import CovarianceError, DimensionError, KernelError
from mixsum.kernels import (
    Beta,
    GaussianMulti,
    GaussianUni,
    RngStream,
    component_logpdf,
    log_density,
    regularized_cholesky,
    sample,
    stack_params,
    unstack_params,
)


class TestLogDensity:
    def test_standard_normal_mode(self):
        assert log_density(GaussianUni(0.0, 1.0), 0.0) == pytest.approx(-0.9189385, abs=1e-7)

    def test_bivariate_identity_at_origin(self):
        k = GaussianMulti([0.0, 0.0], np.eye(2))
        assert log_density(k, [0.0, 0.0]) == pytest.approx(-math.log(2 * math.pi), abs=1e-12)
        assert log_density(k, [0.0, 0.0]) == pytest.approx(-1.8378771, abs=1e-7)

    def test_beta_against_pdf_formula(self):
        # Beta(2,2) density is 6 x (1 - x)
        assert log_density(Beta(2.0, 2.0), 0.5) == pytest.approx(math.log(6 * 0.5 * 0.5), abs=1e-12)
        assert log_density(Beta(2.0, 2.0), 0.5) == pytest.approx(0.4054651, abs=1e-7)

    def test_beta_outside_support(self):
        assert log_density(Beta(2.0, 3.0), 1.2) == -math.inf
        assert log_density(Beta(2.0, 3.0), -0.1) == -math.inf

    def test_beta_boundary_with_unit_parameter(self):
        # Beta(1, 3) has density 3 at 0; no 0 * log 0 NaN
        assert log_density(Beta(1.0, 3.0), 0.0) == pytest.approx(math.log(3.0))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            log_density(GaussianMulti([0.0, 0.0], np.eye(2)), [1.0, 2.0, 3.0])
        with pytest.raises(DimensionError):
            log_density(GaussianUni(0.0, 1.0), [1.0, 2.0])

    def test_non_psd_covariance_rejected(self):
        with pytest.raises(CovarianceError):
            GaussianMulti([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])

    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(KernelError):
            GaussianMulti([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])

    def test_multivariate_matches_scipy(self):
        cov = np.array([[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 0.5]])
        mean = np.array([1.0, -1.0, 0.5])
        x = np.array([0.3, 0.2, 0.1])
        expected = stats.multivariate_normal(mean, cov).logpdf(x)
        assert log_density(GaussianMulti(mean, cov), x) == pytest.approx(expected, abs=1e-12)

    @given(
        st.floats(-50, 50),
        st.floats(0.01, 100),
        st.floats(-60, 60),
    )
    def test_multivariate_d1_matches_univariate(self, mean, var, x):
        uni = log_density(GaussianUni(mean, var), x)
        multi = log_density(GaussianMulti([mean], [[var]]), [x])
        assert abs(uni - multi) <= 1e-12 * max(1.0, abs(uni))


class TestConstruction:
    def test_zero_variance_rejected(self):
        with pytest.raises(KernelError):
            GaussianUni(5.0, 0.0)

    def test_negative_beta_parameters_rejected(self):
        with pytest.raises(KernelError):
            Beta(-1.0, 2.0)

    def test_semidefinite_covariance_regularized(self):
        # rank-1 covariance: the ridge makes it factorizable
        k = GaussianMulti([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]])
        assert np.isfinite(log_density(k, [0.5, 0.5]))

    def test_ridge_only_when_needed(self):
        cov = np.array([[4.0, 1.0], [1.0, 3.0]])
        np.testing.assert_array_equal(regularized_cholesky(cov), np.linalg.cholesky(cov))

    def test_stack_roundtrip(self):
        ks = [GaussianMulti([0.0, 1.0], np.eye(2)), GaussianMulti([2.0, 3.0], 2 * np.eye(2))]
        assert unstack_params("gaussian_multi", stack_params(ks)) == ks

    def test_kernels_are_immutable(self):
        k = GaussianMulti([0.0, 1.0], np.eye(2))
        with pytest.raises(ValueError):
            k.mean[0] = 3.0


class TestIntegratesToOne:
    @pytest.mark.parametrize("mean,var", [(0.0, 1.0), (3.0, 0.25), (-10.0, 9.0)])
    def test_gaussian(self, mean, var):
        sd = math.sqrt(var)
        x = np.linspace(mean - 8 * sd, mean + 8 * sd, 10_000)
        dens = np.exp(component_logpdf("gaussian_uni", stack_params([GaussianUni(mean, var)]), x[:, None])[:, 0])
        assert abs(np.trapezoid(dens, x) - 1.0) < 1e-4

    @pytest.mark.parametrize("a,b", [(2.0, 2.0), (1.0, 1.0), (5.0, 2.0), (1.5, 4.0)])
    def test_beta(self, a, b):
        x = np.linspace(0.0, 1.0, 10_000)
        dens = np.exp(component_logpdf("beta", stack_params([Beta(a, b)]), x[:, None])[:, 0])
        assert abs(np.trapezoid(dens, x) - 1.0) < 1e-4


class TestSampling:
    def test_zero_draws(self):
        out = sample(GaussianUni(0.0, 1.0), RngStream(1), 0)
        assert out.shape == (0, 1)

    def test_law_of_large_numbers(self):
        x = sample(GaussianUni(0.0, 1.0), RngStream(2024), 100_000)[:, 0]
        assert abs(x.mean()) < 0.02
        assert abs(x.var(ddof=1) - 1.0) < 0.03

    def test_determinism(self):
        k = GaussianMulti([1.0, 2.0], [[1.0, 0.4], [0.4, 2.0]])
        a = sample(k, RngStream(7, 3), 50)
        b = sample(k, RngStream(7, 3), 50)
        assert a.tobytes() == b.tobytes()

    def test_streams_differ(self):
        a = sample(GaussianUni(0.0, 1.0), RngStream(7, 1), 10)
        b = sample(GaussianUni(0.0, 1.0), RngStream(7, 2), 10)
        assert not np.array_equal(a, b)

    def test_spawn_depends_only_on_path(self):
        root = RngStream(9)
        assert root.spawn(3, 1).generator().random() == RngStream(9, 0, (3, 1)).generator().random()

    def test_beta_samples_in_support(self):
        x = sample(Beta(0.5, 0.5), RngStream(4), 2000)
        assert x.min() >= 0.0 and x.max() <= 1.0

    def test_multivariate_covariance(self):
        cov = np.array([[2.0, 0.8], [0.8, 1.0]])
        x = sample(GaussianMulti([0.0, 0.0], cov), RngStream(5), 50_000)
        np.testing.assert_allclose(np.cov(x, rowvar=False), cov, atol=0.05)

    def test_negative_n_rejected(self):
        with pytest.raises(ValueError):
            sample(GaussianUni(0.0, 1.0), RngStream(1), -1)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32), st.integers(0, 1000), st.integers(1, 50))
    def test_determinism_property(self, seed, sid, n):
        a = sample(GaussianUni(1.0, 2.0), RngStream(seed, sid), n)
        b = sample(GaussianUni(1.0, 2.0), RngStream(seed, sid), n)
        assert a.tobytes() == b.tobytes()
