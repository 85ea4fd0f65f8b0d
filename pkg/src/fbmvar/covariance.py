"""Covariance structure of fBm at a uniform grid, the Volterra kernel, and the
series constants that govern the H = 1/4 limit laws.

Conventions: ``delta(k, n)`` is the indicator of ``[k/n, (k+1)/n]`` and
``eps(t)`` the indicator of ``[0, t]``; inner products between them are taken
in the reproducing space of fBm, i.e. they are covariances of the matching
Gaussian increments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError

__all__ = [
    "SeriesConstant",
    "check_hurst",
    "covariance_fbm",
    "covariance_bifractional",
    "rho",
    "inner_product_eps_delta",
    "inner_product_delta_delta",
    "eps_delta_table",
    "increment_covariance",
    "kernel_constant",
    "kernel_K",
    "kernel_factorization",
    "constant_C14",
    "constant_kappa",
    "DEFAULT_RADIUS",
]

DEFAULT_RADIUS = 100_000

# |rho(r)| <= RHO_TAIL_COEF * r^{-3/2} for r >= 1 (rho is convex-difference of
# sqrt, so |rho(r)| <= sup |(d/dx)^2 sqrt| on [r-1, r+1] = (1/4)(r-1)^{-3/2};
# for r >= 2 that is <= (1/4) 2^{3/2} r^{-3/2}).
RHO_TAIL_COEF = 0.25 * 2.0**1.5


def check_hurst(hurst: float, *, below_half: bool = False) -> float:
    h = float(hurst)
    if not 0.0 < h < 1.0:
        raise DomainError(f"Hurst index must lie in (0, 1), got {hurst!r}")
    if below_half and h >= 0.5:
        raise DomainError(f"kernel representation requires H < 1/2, got {hurst!r}")
    return h


def _check_unit(*xs):
    for x in xs:
        a = np.asarray(x, dtype=float)
        if np.any(a < 0.0) or np.any(a > 1.0) or np.any(np.isnan(a)):
            raise DomainError(f"time argument outside [0, 1]: {x!r}")


def covariance_fbm(hurst, s, t):
    """R_H(s, t) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2. Broadcasts over arrays."""
    h = check_hurst(hurst)
    _check_unit(s, t)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 0.5 * (t ** (2 * h) + s ** (2 * h) - np.abs(t - s) ** (2 * h))
    return float(out) if out.ndim == 0 else out


def covariance_bifractional(s, t):
    """Covariance (sqrt(t+s) - sqrt|t-s|)/sqrt(2 pi) of the heat-equation process u(t, 0)."""
    _check_unit(s, t)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = (np.sqrt(t + s) - np.sqrt(np.abs(t - s))) / math.sqrt(2.0 * math.pi)
    return float(out) if out.ndim == 0 else out


def rho(r):
    """sqrt|r+1| + sqrt|r-1| - 2 sqrt|r|; accepts integers or integer arrays."""
    r = np.asarray(r)
    if not np.issubdtype(r.dtype, np.integer):
        if np.any(r != np.round(r)):
            raise DomainError("rho is defined on the integers")
    a = np.abs(r.astype(float))
    out = np.sqrt(np.abs(a + 1.0)) + np.sqrt(np.abs(a - 1.0)) - 2.0 * np.sqrt(a)
    return float(out) if out.ndim == 0 else out


def _check_index(k, n, name="k"):
    if int(n) != n or n < 1:
        raise DomainError(f"grid size must be a positive integer, got {n!r}")
    if int(k) != k or not 0 <= k <= n - 1:
        raise DomainError(f"{name} must be an integer in [0, {n - 1}], got {k!r}")


def inner_product_eps_delta(hurst: float, t: float, k: int, n: int) -> float:
    """<eps_t, delta_{k/n}> = E[B_t (B_{(k+1)/n} - B_{k/n})].

    At H = 1/4 the closed form
    (sqrt(k+1) - sqrt(k) - sqrt|k+1-nt| + sqrt|k-nt|) / (2 sqrt(n)) is used;
    otherwise the covariance difference R_H(t, (k+1)/n) - R_H(t, k/n).
    """
    h = check_hurst(hurst)
    _check_index(k, n)
    _check_unit(t)
    if h == 0.25:
        nt = n * t
        return (
            math.sqrt(k + 1) - math.sqrt(k) - math.sqrt(abs(k + 1 - nt)) + math.sqrt(abs(k - nt))
        ) / (2.0 * math.sqrt(n))
    return covariance_fbm(h, t, (k + 1) / n) - covariance_fbm(h, t, k / n)


def eps_delta_table(hurst: float, t, n: int) -> np.ndarray:
    """Table of <eps_t, delta_{k/n}> with rows indexed by t and columns by k = 0..n-1."""
    h = check_hurst(hurst)
    _check_unit(t)
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    k = np.arange(n, dtype=float)[None, :]
    if h == 0.25:
        nt = n * t
        return (
            np.sqrt(k + 1) - np.sqrt(k) - np.sqrt(np.abs(k + 1 - nt)) + np.sqrt(np.abs(k - nt))
        ) / (2.0 * math.sqrt(n))
    return covariance_fbm(h, t, (k + 1) / n) - covariance_fbm(h, t, k / n)


def inner_product_delta_delta(hurst: float, j: int, k: int, n: int) -> float:
    """E[dB_{j/n} dB_{k/n}]; equals rho(j - k) / (2 sqrt(n)) at H = 1/4."""
    h = check_hurst(hurst)
    _check_index(j, n, "j")
    _check_index(k, n, "k")
    d = abs(j - k)
    return 0.5 * n ** (-2 * h) * (abs(d + 1) ** (2 * h) + abs(d - 1) ** (2 * h) - 2 * d ** (2 * h))


def increment_covariance(cov, n: int) -> np.ndarray:
    """n x n covariance of the grid increments for an arbitrary covariance function.

    ``cov(s, t)`` must broadcast. Built as a second difference of the grid
    covariance matrix, so no stationarity is assumed.
    """
    grid = np.arange(n + 1) / n
    R = cov(grid[:, None], grid[None, :])
    return R[1:, 1:] - R[:-1, 1:] - R[1:, :-1] + R[:-1, :-1]


def kernel_constant(hurst: float) -> float:
    """c_H with c_H^2 = 2H / ((1 - 2H) Beta(1 - 2H, H + 1/2)); Beta via log-gamma."""
    h = check_hurst(hurst, below_half=True)
    log_beta = special.gammaln(1 - 2 * h) + special.gammaln(h + 0.5) - special.gammaln(1.5 - h)
    return math.sqrt(2 * h / (1 - 2 * h) * math.exp(-log_beta))


def _kernel_integral(h: float, t: float, s: float, tol: float) -> float:
    # int_s^t u^{H-3/2} (u-s)^{H-1/2} du. With u = s(1 + y) this is
    # s^{2H-1} int_0^Y (1+y)^{H-3/2} y^{H-1/2} dy, Y = t/s - 1, split at y = 1.
    # Near y = 0: w = y^{H+1/2}/(H+1/2) absorbs the singularity (dw = y^{H-1/2} dy).
    # Tail y > 1: z = 1/y then q = z^{1-2H} gives a smooth integrand on [Y^{2H-1}, 1].
    a = h + 0.5
    b = 1.0 - 2.0 * h
    y_max = t / s - 1.0

    def head(w):
        return (1.0 + (a * w) ** (1.0 / a)) ** (h - 1.5)

    def tail(q):
        return (1.0 + q ** (1.0 / b)) ** (h - 1.5) / b

    pieces = [(head, 0.0, min(y_max, 1.0) ** a / a)]
    if y_max > 1.0:
        pieces.append((tail, y_max ** (-b), 1.0))
    total = 0.0
    for fn, lo, hi in pieces:
        val, err = integrate.quad(fn, lo, hi, epsabs=tol, epsrel=tol, limit=200)
        if not np.isfinite(val) or err > 10 * max(tol, tol * abs(val)):
            raise QuadratureError(
                f"kernel integral did not reach tolerance {tol} (err={err:.2e})"
            )
        total += val
    return s ** (2 * h - 1) * total


def kernel_K(hurst: float, t: float, s: float, tol: float = 1e-8) -> float:
    """Volterra kernel K_H(t, s) of the representation B_t = int_0^t K_H(t, s) dX_s.

    Zero when s >= t or s <= 0.
    """
    h = check_hurst(hurst, below_half=True)
    if s >= t or s <= 0.0:
        return 0.0
    if t > 1.0:
        raise DomainError(f"t must lie in (0, 1], got {t!r}")
    c = kernel_constant(h)
    lead = (t / s) ** (h - 0.5) * (t - s) ** (h - 0.5)
    tail = (h - 0.5) * s ** (0.5 - h) * _kernel_integral(h, t, s, tol)
    return c * (lead - tail)


def kernel_factorization(hurst: float, s: float, t: float, tol: float = 1e-8) -> float:
    """int_0^{s ^ t} K_H(t, u) K_H(s, u) du, which should reproduce R_H(s, t)."""
    h = check_hurst(hurst, below_half=True)
    _check_unit(s, t)
    m = min(s, t)
    if m == 0.0:
        return 0.0
    # K_H(., u) ~ u^{H-1/2} at 0 and K_H(m, u) ~ (m-u)^{H-1/2} at the top;
    # QAWS takes those algebraic factors as weights.
    alpha = 2 * h - 1
    beta = 2 * h - 1 if s == t else h - 0.5

    def g(u):
        # QAWS samples the endpoints; the weighted-out ratio has finite limits there
        u = min(max(u, m * 1e-12), m * (1.0 - 1e-12))
        return kernel_K(h, t, u, tol) * kernel_K(h, s, u, tol) / (u**alpha * (m - u) ** beta)

    val, err = integrate.quad(
        g, 0.0, m, weight="alg", wvar=(alpha, beta), epsabs=1e-9, epsrel=1e-9, limit=200
    )
    return val


@dataclass(frozen=True)
class SeriesConstant:
    """A truncated series value with a rigorous bound on the omitted tail."""

    value: float
    partial_sum_radius: int
    tail_bound: float

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "radius": self.partial_sum_radius,
            "tail_bound": self.tail_bound,
        }


def _rho_sq(radius: int) -> np.ndarray:
    r = np.arange(1, radius + 1, dtype=float)
    # sqrt(r+1) + sqrt(r-1) - 2 sqrt(r) in a cancellation-free form
    a = 1.0 / (np.sqrt(r + 1) + np.sqrt(r))
    b = 1.0 / (np.sqrt(r) + np.sqrt(r - 1))
    return (a - b) ** 2


def _sum_sq_tail(radius: int) -> float:
    # sum_{r > R} rho(r)^2 <= c^2 sum_{r > R} r^{-3} <= c^2 / (2 R^2)
    return RHO_TAIL_COEF**2 / (2.0 * radius**2)


def constant_C14(radius: int = DEFAULT_RADIUS) -> SeriesConstant:
    """sqrt((1/2) sum_{p in Z} rho(p)^2), truncated at |p| <= radius.

    ``radius=0`` keeps only the p = 0 term (value sqrt(2), infinite tail bound).
    """
    if radius < 0:
        raise DomainError("radius must be >= 0")
    if radius == 0:
        return SeriesConstant(math.sqrt(2.0), 0, math.inf)
    sq = _rho_sq(radius)
    # sum small terms first
    total = 4.0 + 2.0 * math.fsum(sq[::-1])
    value = math.sqrt(0.5 * total)
    # omitted mass 2 * tail in the radicand; sqrt is 1/(2 value)-Lipschitz above value
    tail = (2.0 * _sum_sq_tail(radius)) * 0.5 / (2.0 * value)
    return SeriesConstant(value, radius, tail)


def constant_kappa(radius: int = DEFAULT_RADIUS) -> SeriesConstant:
    """sqrt(2 + sum_{r>=1} (-1)^r rho(r)^2), truncated at r <= radius.

    rho(r)^2 decreases in r, so the alternating tail is bounded by its first
    omitted term.
    """
    if radius < 1:
        raise DomainError("radius must be >= 1")
    sq = _rho_sq(radius + 1)
    signs = np.where(np.arange(1, radius + 1) % 2 == 0, 1.0, -1.0)
    radicand = 2.0 + math.fsum((signs * sq[:radius])[::-1])
    value = math.sqrt(radicand)
    # the true radicand lies within sq[radius] of the partial one
    eps = sq[radius]
    tail = eps / (value + math.sqrt(radicand - eps))
    return SeriesConstant(value, radius, float(tail))
