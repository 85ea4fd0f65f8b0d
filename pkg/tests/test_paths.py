import io
import math
from dataclasses import dataclass

import numpy as np
import pytest

from fbmvar import covariance as cv
from fbmvar import paths
from fbmvar.errors import DomainError, FactorizationError
from fbmvar.paths import BIFRACTIONAL, FBM, Generator, simulate, simulate_batch
from fbmvar.rng import RngStream


@dataclass(frozen=True)
class NegativeModel:
    """Not a covariance: the increment matrix is negative definite."""

    def covariance(self, s, t):
        return -np.minimum(s, t)


class TestModels:
    def test_fbm_validates_hurst(self):
        with pytest.raises(DomainError):
            FBM(1.5)

    def test_str(self):
        assert str(FBM(0.25)) == "fbm(H=0.25)"
        assert str(BIFRACTIONAL) == "bifractional"


class TestCholesky:
    @pytest.mark.parametrize("model", [FBM(0.25), FBM(0.7), BIFRACTIONAL])
    def test_factor_reproduces_covariance(self, model):
        n = 32
        L = paths.cholesky_factor(model, n)
        C = cv.increment_covariance(model.covariance, n)
        np.testing.assert_allclose(L @ L.T, C, atol=1e-13)

    def test_size_cap(self):
        with pytest.raises(DomainError):
            paths.cholesky_factor(FBM(0.25), paths.CHOLESKY_MAX_N + 1)

    def test_indefinite_raises(self):
        with pytest.raises(FactorizationError):
            paths.cholesky_factor(NegativeModel(), 8)

    def test_path_shape_and_origin(self):
        p = simulate(FBM(0.25), 16, RngStream(1, 2), Generator.CHOLESKY)
        assert p.values.shape == (17,)
        assert p.values[0] == 0.0
        assert p.generator is Generator.CHOLESKY
        assert (p.seed, p.stream_index) == (1, 2)


class TestCirculant:
    @pytest.mark.parametrize("h", [0.1, 0.25, 0.4, 0.5])
    @pytest.mark.parametrize("n", [2, 64, 1024])
    def test_embedding_nonnegative(self, h, n):
        lam = paths.embedding_eigenvalues(h, n, 2 * n)
        assert lam.min() >= -1e-10

    def test_autocovariance_matches_inner_products(self):
        g = paths.fgn_autocovariance(0.25, 16, 5)
        for k in range(6):
            assert g[k] == pytest.approx(cv.inner_product_delta_delta(0.25, 0, k, 16), abs=1e-15)

    def test_requires_power_of_two(self):
        with pytest.raises(DomainError):
            simulate(FBM(0.25), 100, RngStream(0, 0))

    def test_rejects_bifractional(self):
        with pytest.raises(DomainError):
            simulate(BIFRACTIONAL, 64, RngStream(0, 0), Generator.CIRCULANT)

    def test_fallback_to_cholesky(self, monkeypatch):
        monkeypatch.setattr(paths, "_embedding", lambda h, n: None)
        p = simulate(FBM(0.25), 64, RngStream(0, 0))
        assert p.generator is Generator.CHOLESKY
        b = simulate_batch(FBM(0.25), 64, 0, [0, 1])
        assert b.generator is Generator.CHOLESKY

    def test_batch_rows_match_single_paths(self):
        b = simulate_batch(FBM(0.25), 128, 9, [3, 0, 17])
        for i, idx in enumerate([3, 0, 17]):
            single = simulate(FBM(0.25), 128, RngStream(9, idx))
            np.testing.assert_array_equal(b.values[i], single.values)
        assert b.path(2).stream_index == 17
        assert len(b) == 3

    def test_cholesky_batch_matches_single_to_rounding(self):
        b = simulate_batch(FBM(0.25), 32, 9, [5], generator="cholesky")
        single = simulate(FBM(0.25), 32, RngStream(9, 5), "cholesky")
        np.testing.assert_allclose(b.values[0], single.values, atol=1e-14)

    def test_deterministic(self):
        a = simulate(FBM(0.3), 256, RngStream(123, 4)).values
        b = simulate(FBM(0.3), 256, RngStream(123, 4)).values
        np.testing.assert_array_equal(a, b)


class TestLaw:
    """Monte Carlo checks of the simulated law against the exact covariance."""

    def test_lag_one_correlation(self):
        n = 512
        inc = np.diff(simulate_batch(FBM(0.25), n, 2024, np.arange(2000)).values, axis=1)
        corr = np.mean(inc[:, 1:] * inc[:, :-1]) / np.mean(inc**2)
        assert corr == pytest.approx(cv.rho(1) / 2, abs=0.02)
        assert cv.rho(1) / 2 == pytest.approx(-0.29289, abs=1e-5)

    def test_brownian_increments_uncorrelated(self):
        n = 256
        corrs = []
        for start in range(0, 100_000, 10_000):
            inc = np.diff(simulate_batch(FBM(0.5), n, 3, np.arange(start, start + 10_000)).values, axis=1)
            corrs.append(np.mean(inc[:, 1] * inc[:, 0]) * n)
        assert abs(np.mean(corrs)) < 0.03

    def test_variance_is_sqrt_t(self):
        n, M = 64, 8000
        v = simulate_batch(FBM(0.25), n, 77, np.arange(M)).values
        for t in (0.25, 0.5, 0.75, 1.0):
            x2 = v[:, int(t * n)] ** 2
            se = x2.std(ddof=1) / math.sqrt(M)
            assert abs(x2.mean() - math.sqrt(t)) < 4 * se

    def test_small_grid_covariance(self):
        n, M = 8, 20_000
        x = simulate_batch(FBM(0.25), n, 5, np.arange(M), generator="cholesky").values[:, 1:]
        prod = x[:, :, None] * x[:, None, :]
        emp, se = prod.mean(0), prod.std(0, ddof=1) / math.sqrt(M)
        g = np.arange(1, n + 1) / n
        exact = cv.covariance_fbm(0.25, g[:, None], g[None, :])
        assert np.max(np.abs(emp - exact) / se) < 4.5

    @pytest.mark.parametrize("where", ["end", "mid"])
    def test_generators_agree_in_moments(self, where):
        n, M = 256, 4000
        col = -1 if where == "end" else n // 2
        a = simulate_batch(FBM(0.25), n, 1, np.arange(M)).values[:, col]
        b = simulate_batch(FBM(0.25), n, 1, np.arange(M, 2 * M), generator="cholesky").values[:, col]
        for k in (1, 2):
            diff = np.mean(a**k) - np.mean(b**k)
            se = math.sqrt(np.var(a**k) / M + np.var(b**k) / M)
            assert abs(diff) < 4 * se


class TestCsv:
    def test_header_and_rows(self):
        p = simulate(FBM(0.25), 4, RngStream(0, 0))
        buf = io.StringIO()
        p.to_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,value"
        assert len(lines) == 6
        t, v = lines[-1].split(",")
        assert float(t) == 1.0 and float(v) == p.values[-1]
