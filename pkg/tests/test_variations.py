import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fbmvar import testfunctions as tf
from fbmvar import variations as var
from fbmvar.errors import DomainError, ModelMismatchError
from fbmvar.paths import BIFRACTIONAL, FBM, GridPath, Generator, simulate_batch

ONE, ZERO = tf.get("one"), tf.get("zero")
IDENT, SQUARE, SIN, COS = tf.get("identity"), tf.get("square"), tf.get("sin"), tf.get("cos")

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def path_values(n_min=2, n_max=40):
    return st.integers(n_min, n_max).flatmap(
        lambda n: arrays(float, n, elements=finite).map(lambda x: np.concatenate([[0.0], x]))
    )


def grid_path(values, model=FBM(0.25)):
    return GridPath(len(values) - 1, model, np.asarray(values, dtype=float), 0, Generator.CHOLESKY)


class TestHermite:
    @pytest.mark.parametrize("k, x, expected", [(2, 0, -1), (3, 1, -2), (3, 2, 2), (2, 3, 8)])
    def test_values(self, k, x, expected):
        assert var.hermite(k, x) == expected

    def test_unsupported_order(self):
        with pytest.raises(DomainError):
            var.hermite(4, 1.0)

    def test_array(self):
        np.testing.assert_array_equal(var.hermite(2, np.array([0.0, 2.0])), [-1.0, 3.0])


class TestWeightedQV:
    def test_zero_function(self):
        assert var.weighted_qv(np.array([0.0, 0.3, -0.2]), ZERO) == 0.0

    def test_constant_increments(self):
        n = 16
        vals = np.arange(n + 1) * n**-0.25
        assert var.weighted_qv(vals, ONE) == pytest.approx(0.0, abs=1e-14)

    def test_two_point_brute_force(self):
        a, b = 0.7, -0.4
        expected = (0.0**2 * (math.sqrt(2) * a**2 - 1) + a**2 * (math.sqrt(2) * (b - a) ** 2 - 1)) / math.sqrt(2)
        assert var.weighted_qv(np.array([0.0, a, b]), SQUARE) == pytest.approx(expected, abs=1e-15)

    @given(path_values())
    @settings(max_examples=50)
    def test_hermite_form(self, vals):
        n = len(vals) - 1
        inc = np.diff(vals)
        alt = sum(SIN(vals[k]) * var.hermite(2, n**0.25 * inc[k]) for k in range(n)) / math.sqrt(n)
        assert var.weighted_qv(vals, SIN) == pytest.approx(alt, abs=1e-12 * (1 + abs(alt)))

    def test_batch_matches_rows(self):
        v = np.random.default_rng(0).normal(size=(4, 9))
        np.testing.assert_allclose(var.weighted_qv(v, COS), [var.weighted_qv(r, COS) for r in v], atol=1e-15)

    def test_model_check(self):
        with pytest.raises(ModelMismatchError):
            var.weighted_qv_G(grid_path([0, 1, 2], FBM(0.3)), SQUARE)
        stat = var.weighted_qv_G(grid_path([0, 1, 2]), SQUARE)
        assert stat.kind is var.Kind.G_N and stat.n == 2 and stat.f_name == "square"


class TestUnweighted:
    @pytest.mark.parametrize("h, n, expected", [
        (0.4, 100, 0.1),
        (0.75, 100, 1 / math.sqrt(100 * math.log(100))),
        (0.8, 100, 100 ** (1 - 1.6)),
    ])
    def test_normalization(self, h, n, expected):
        assert var.unweighted_normalization(h, n) == pytest.approx(expected, rel=1e-14)

    def test_regime_tolerance(self):
        assert var.unweighted_normalization(0.75 + 1e-13, 64) == var.unweighted_normalization(0.75, 64)

    def test_brownian_constant_increments(self):
        n = 64
        vals = np.arange(n + 1) * n**-0.5
        assert var.unweighted_qv(vals, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_model_check(self):
        p = grid_path([0.0, 0.5, 0.1], FBM(0.4))
        assert var.unweighted_qv_stat(p, 0.4).kind is var.Kind.UNWEIGHTED_QV
        with pytest.raises(ModelMismatchError):
            var.unweighted_qv_stat(p, 0.5)

    @pytest.mark.parametrize("h", [0.4, 0.8])
    def test_exact_variance_matches_monte_carlo(self, h):
        n, M = 256, 4000
        x = var.unweighted_qv(simulate_batch(FBM(h), n, 17, np.arange(M)).values, h)
        exact = var.exact_variance_unweighted_qv(h, n)
        # the standard error of a sample variance is about v sqrt((2 + kurt) / M)
        se = exact * math.sqrt((2 + max(0.0, float(np.mean((x - x.mean()) ** 4) / x.var() ** 2 - 3))) / M)
        assert abs(x.var(ddof=1) - exact) < 4 * se

    def test_exact_variance_brownian(self):
        # independent increments: Var = (1/n) * 2n
        assert var.exact_variance_unweighted_qv(0.5, 50) == pytest.approx(2.0, rel=1e-14)


class TestTrapezoid:
    @given(path_values())
    def test_constant_one_telescopes(self, vals):
        assert var.trapezoid_sum(vals, ONE) == vals[-1]

    @given(path_values())
    def test_identity_telescopes(self, vals):
        assert var.trapezoid_sum(vals, IDENT) == pytest.approx(vals[-1] ** 2 / 2, abs=1e-12)

    def test_square_two_point_brute_force(self):
        a, b = 0.3, 1.1
        expected = (0 + a**2) / 2 * a + (a**2 + b**2) / 2 * (b - a)
        assert var.trapezoid_sum(np.array([0.0, a, b]), SQUARE) == pytest.approx(expected, abs=1e-15)

    def test_derivative_of_square_is_exact_algebraically(self):
        # S_n(2x) = sum (B_{k+1}^2 - B_k^2) = B_1^2: the error is rounding only
        v = simulate_batch(FBM(0.25), 1024, 3, np.arange(20)).values
        err = np.abs(var.trapezoid_sum(v, tf.derivative_of(SQUARE)) - v[:, -1] ** 2)
        assert err.max() < 1e-12

    def test_statistic_wrapper(self):
        s = var.trapezoid_sum_S(grid_path([0.0, 0.2, 0.5]), ONE)
        assert s.kind is var.Kind.S_N and s.value == 0.5


class TestMidpoint:
    @given(path_values())
    def test_constant_one_even(self, vals):
        n = len(vals) - 1
        assert var.midpoint_sum(vals, ONE) == vals[2 * (n // 2)]

    def test_single_term(self):
        vals = np.array([0.0, 0.4, -0.3])
        assert var.midpoint_sum(vals, SIN) == pytest.approx(math.sin(0.4) * -0.3, abs=1e-16)

    def test_four_point_brute_force(self):
        v = np.array([0.0, 0.2, -0.1, 0.5, 0.35])
        expected = math.sin(v[1]) * (v[2] - v[0]) + math.sin(v[3]) * (v[4] - v[2])
        assert var.midpoint_sum(v, SIN) == pytest.approx(expected, abs=1e-15)

    def test_odd_n_drops_last_interval(self):
        v = np.array([0.0, 0.2, -0.1, 7.0])
        assert var.midpoint_sum(v, ONE) == -0.1

    def test_needs_two_intervals(self):
        with pytest.raises(DomainError):
            var.midpoint_sum(np.array([0.0, 1.0]), ONE)


class TestAlternating:
    def test_zero_function(self):
        assert var.alternating_F(np.array([0.0, 0.3, -0.2, 0.1, 0.9]), ZERO) == 0.0

    def test_constant_increments(self):
        assert var.alternating_F(np.arange(9) * 0.3, SQUARE) == pytest.approx(0.0, abs=1e-14)

    def test_four_point_brute_force(self):
        v = np.array([0.0, 0.2, -0.1, 0.5, 0.35])
        d = np.diff(v)
        expected = v[1] ** 2 * (d[1] ** 2 - d[0] ** 2) + v[3] ** 2 * (d[3] ** 2 - d[2] ** 2)
        assert var.alternating_F(v, SQUARE) == pytest.approx(expected, abs=1e-15)

    def test_bifractional_accepted(self):
        p = grid_path([0.0, 0.1, 0.3], BIFRACTIONAL)
        assert var.alternating_F_stat(p, ONE).kind is var.Kind.F_N

    def test_other_hurst_rejected(self):
        with pytest.raises(ModelMismatchError):
            var.alternating_F_stat(grid_path([0.0, 0.1, 0.3], FBM(0.5)), ONE)


class TestCubic:
    def test_zero_function(self):
        assert var.cubic_correction(np.array([0.0, 0.3, -0.2]), ZERO) == 0.0

    def test_antisymmetric_pairs(self):
        v = np.array([0.0, 0.4, 0.0, -0.25, 0.0])
        assert var.cubic_correction(v, COS) == 0.0

    def test_four_point_brute_force(self):
        v = np.array([0.0, 0.2, -0.1, 0.5, 0.35])
        d = np.diff(v)
        expected = math.cos(v[1]) * (d[0] ** 3 + d[1] ** 3) + math.cos(v[3]) * (d[2] ** 3 + d[3] ** 3)
        assert var.cubic_correction(v, COS) == pytest.approx(expected, abs=1e-15)

    @given(st.integers(2, 5000), finite, finite)
    def test_hermite_decomposition_sign(self, n, a, b):
        # a^3 + b^3 = n^{-3/4} [H3(n^{1/4} a) + H3(n^{1/4} b)] + 3 n^{-1/2} (a + b),
        # where a + b = B_{2j/n} - B_{(2j-2)/n}; the opposite sign fails.
        q = n**0.25
        rhs = (var.hermite(3, q * a) + var.hermite(3, q * b)) / q**3 + 3 / math.sqrt(n) * (a + b)
        assert a**3 + b**3 == pytest.approx(rhs, abs=1e-12)

    def test_reversed_cross_term_is_wrong(self):
        n, a, b = 16, 0.3, 0.2
        q = n**0.25
        wrong = (var.hermite(3, q * a) + var.hermite(3, q * b) + 3 / math.sqrt(n) * -(a + b)) / q**3
        assert abs(a**3 + b**3 - wrong) > 0.1

    def test_statistic_wrapper(self):
        s = var.cubic_correction_stat(grid_path([0.0, 0.1, 0.3]), SQUARE)
        assert s.kind is var.Kind.CUBIC_CORRECTION


class TestVariationStatistic:
    def test_csv_row(self):
        s = var.VariationStatistic(var.Kind.T_N, 8, "sin", 0.25)
        assert s.csv_row(42) == "T_n,8,sin,42,0.25"
        assert var.CSV_HEADER.split(",") == ["kind", "n", "f_name", "seed", "value"]

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_rejected(self):
        with pytest.raises(ArithmeticError):
            var.trapezoid_sum_S(grid_path([0.0, np.inf, 1.0]), ONE)

    def test_deterministic(self):
        v = simulate_batch(FBM(0.25), 64, 1, [0]).values[0]
        assert var.weighted_qv(v, SIN) == var.weighted_qv(v.copy(), SIN)
