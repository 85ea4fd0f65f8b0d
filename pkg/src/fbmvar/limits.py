"""Conditional (mixed-Gaussian) limit laws given a simulated H = 1/4 path.

Every limit here has the form  mean(B) + std(B) * Z  with Z ~ N(0, 1)
independent of B. The path functionals are left-endpoint Riemann sums on
the same grid as the statistic they are compared with. Z is drawn from the
limit lane of the replication's stream, which never overlaps the lane that
produced the path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import covariance as cv
from .errors import ModelMismatchError
from .paths import FBM, Bifractional, GridPath, simulate_batch
from .rng import AUX_LANE, LIMIT_LANE, RngStream
from .testfunctions import TestFunction


class Theorem(str, enum.Enum):
    THM_1_1 = "weighted_qv"
    THM_1_2 = "midpoint_ito"
    LEMMA_4_3 = "alternating"


@dataclass(frozen=True)
class LimitLawSample:
    theorem: Theorem
    conditional_mean: float
    conditional_std: float
    draw: float
    path_seed: int


def _constants():
    return cv.constant_C14().value, cv.constant_kappa().value


def _riemann(g, values):
    """(1/n) sum_{k<n} g(B_{k/n}) along the last axis."""
    return np.mean(g(values[..., :-1]), axis=-1)


def thm11_moments(values, f: TestFunction):
    """Conditional mean (1/4) int f''(B) and std C_{1/4} sqrt(int f(B)^2)."""
    c14, _ = _constants()
    mean = 0.25 * _riemann(f.d2, values)
    std = c14 * np.sqrt(_riemann(lambda x: f(x) ** 2, values))
    return mean, std


def thm12_moments(values, f: TestFunction):
    """Conditional mean f(B_1) - f(0) and std (kappa/2) sqrt(int f''(B)^2)."""
    _, kappa = _constants()
    mean = f(values[..., -1]) - f(np.zeros(()))
    std = 0.5 * kappa * np.sqrt(_riemann(lambda x: f.d2(x) ** 2, values))
    return mean, std


def lemma43_moments(values, f: TestFunction):
    """Conditional mean 0 and std kappa sqrt(int f(B)^2)."""
    _, kappa = _constants()
    std = kappa * np.sqrt(_riemann(lambda x: f(x) ** 2, values))
    return np.zeros_like(std), std


_MOMENTS = {
    Theorem.THM_1_1: thm11_moments,
    Theorem.THM_1_2: thm12_moments,
    Theorem.LEMMA_4_3: lemma43_moments,
}

# The midpoint formula subtracts the Gaussian term; the law is symmetric anyway.
_SIGN = {Theorem.THM_1_1: 1.0, Theorem.THM_1_2: -1.0, Theorem.LEMMA_4_3: 1.0}


def limit_normals(master_seed: int, indices) -> np.ndarray:
    return np.array(
        [RngStream(master_seed, int(i)).generator(LIMIT_LANE).standard_normal() for i in indices]
    )


def limit_draws(theorem: Theorem, values, f: TestFunction, master_seed: int, indices):
    """Vectorized draws for a batch of paths; returns (mean, std, draw) arrays."""
    theorem = Theorem(theorem)
    mean, std = _MOMENTS[theorem](np.atleast_2d(values), f)
    z = limit_normals(master_seed, indices)
    return mean, std, mean + _SIGN[theorem] * std * z


def _check_path(path: GridPath, allow_bifractional=False):
    if isinstance(path.model, Bifractional) and allow_bifractional:
        return
    if not (isinstance(path.model, FBM) and path.model.hurst == 0.25):
        raise ModelMismatchError(f"limit law is stated for fBm with H = 1/4, got {path.model}")


def _sample(theorem, path: GridPath, f: TestFunction, rng: RngStream) -> LimitLawSample:
    mean, std = _MOMENTS[theorem](path.values, f)
    z = rng.generator(LIMIT_LANE).standard_normal()
    mean, std = float(mean), float(std)
    return LimitLawSample(theorem, mean, std, mean + _SIGN[theorem] * std * z, path.seed)


def limit_sample_thm11(path: GridPath, f: TestFunction, rng: RngStream) -> LimitLawSample:
    _check_path(path)
    return _sample(Theorem.THM_1_1, path, f, rng)


def limit_sample_thm12(path: GridPath, f: TestFunction, rng: RngStream) -> LimitLawSample:
    _check_path(path, allow_bifractional=True)
    return _sample(Theorem.THM_1_2, path, f, rng)


def limit_sample_lemma43(path: GridPath, f: TestFunction, rng: RngStream) -> LimitLawSample:
    _check_path(path)
    return _sample(Theorem.LEMMA_4_3, path, f, rng)


# Closed forms of (int_0^1 E f(B_s)^2 ds, E (int_0^1 f''(B_s) ds)^2) at H = 1/4,
# using B_s ~ N(0, sqrt(s)).
_CLOSED_FORM = {
    "zero": (0.0, 0.0),
    "one": (1.0, 0.0),
    "identity": (2.0 / 3.0, 0.0),  # int sqrt(s) ds
    "square": (1.5, 4.0),  # int 3 s ds; f'' = 2
}


def moment_targets_thm32(f: TestFunction, M: int = 10_000, rng: RngStream | None = None,
                         n: int = 256) -> tuple[float, float]:
    """Limits of E(G_n) and E(G_n^2).

    Mean: (1/4) int E f''(B_s) ds. Second moment:
    C_{1/4}^2 int E f(B_s)^2 ds + (1/16) E(int f''(B_s) ds)^2.
    Closed form where available, otherwise Monte Carlo over M fresh paths.
    """
    c14, _ = _constants()
    if f.name in _CLOSED_FORM:
        f2, fpp2 = _CLOSED_FORM[f.name]
        mean = 0.25 * (2.0 if f.name == "square" else 0.0)
        return mean, c14**2 * f2 + fpp2 / 16.0
    if M < 1000:
        raise ValueError("Monte Carlo moment targets need M >= 1000")
    rng = rng or RngStream(0, 0)
    idx = np.arange(M) + rng.stream_index
    batch = simulate_batch(FBM(0.25), n, rng.master_seed, idx, lane=AUX_LANE)
    fpp = _riemann(f.d2, batch.values)
    f2 = _riemann(lambda x: f(x) ** 2, batch.values)
    mean = 0.25 * math.fsum(fpp) / M
    second = c14**2 * math.fsum(f2) / M + math.fsum(fpp**2) / (16.0 * M)
    return mean, second


def _hermite_nodes(order=64):
    x, w = np.polynomial.hermite_e.hermegauss(order)
    return x, w / math.sqrt(2.0 * math.pi)


def gaussian_expectation(g, sigma, order: int = 64):
    """E g(sigma Z) by Gauss-Hermite quadrature; broadcasts over ``sigma``."""
    x, w = _hermite_nodes(order)
    sigma = np.asarray(sigma, dtype=float)
    return np.tensordot(g(sigma[..., None] * x), w, axes=([-1], [0]))


def integrated_gaussian_moment(g, order: int = 64) -> float:
    """int_0^1 E g(B_s) ds at H = 1/4, where B_s ~ N(0, sqrt(s)).

    With s = u^4 the standard deviation s^{1/4} becomes u and the integrand
    4 u^3 E g(u Z) is smooth on [0, 1].
    """
    u, wu = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (u + 1.0)
    wu = 0.5 * wu
    return float(np.sum(wu * 4.0 * u**3 * gaussian_expectation(g, u)))


def exact_mean_weighted_qv(f: TestFunction, n: int) -> float:
    """E(G_n) at finite n: sum_k <eps_{k/n}, delta_{k/n}>^2 E f''(B_{k/n}).

    Gaussian integration by parts turns E[f(X)(Y^2 - E Y^2)] into
    E(XY)^2 E f''(X); the weights are the H = 1/4 closed forms.
    """
    k = np.arange(n, dtype=float)
    c = (np.sqrt(k + 1) - np.sqrt(k) - 1.0) / (2.0 * math.sqrt(n))
    sigma = (k / n) ** 0.25
    return math.fsum(c**2 * gaussian_expectation(f.d2, sigma))


def exact_var_alternating_one(n: int) -> float:
    """Var(F_n) for f = 1 at finite even n.

    F_n = sum_k (Y_{2k+1}^2 - Y_{2k}^2) with Cov(Y_i, Y_j) = rho(i-j)/(2 sqrt(n)),
    so Var = (1/(2n)) sum_{k,l} [2 rho^2(2d) - rho^2(2d+1) - rho^2(2d-1)], d = k - l.
    """
    m = n // 2
    d = np.arange(-(m - 1), m, dtype=float)
    mult = m - np.abs(d)
    terms = 2 * cv.rho(2 * d) ** 2 - cv.rho(2 * d + 1) ** 2 - cv.rho(2 * d - 1) ** 2
    return math.fsum(mult * terms) / (2.0 * n)
