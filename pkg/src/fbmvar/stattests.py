"""Two-sample and moment tests used to compare statistics with their limits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateSampleError, EmptySampleError

KS_MIN_PVALUE = 0.01
ECF_MAX_DISTANCE = 0.05
MOMENT_SIGMAS = 4.0
DEFAULT_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class TwoSampleResult:
    test: str  # "KS" or "ECF"
    statistic: float
    threshold_or_pvalue: float
    n_samples: tuple[int, int]
    verdict: bool

    def as_dict(self) -> dict:
        d = asdict(self)
        d["n_samples"] = list(self.n_samples)
        return d


@dataclass(frozen=True)
class MomentCheck:
    empirical: float
    target: float
    std_error: float
    z_score: float
    verdict: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _as_sample(x, name):
    a = np.asarray(x, dtype=float).ravel()
    if a.size == 0:
        raise EmptySampleError(f"sample {name} is empty")
    return a


def ks_statistic(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)| evaluated at every point of the merged sample."""
    a = np.sort(_as_sample(a, "a"))
    b = np.sort(_as_sample(b, "b"))
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_two_sample(a, b, min_pvalue: float = KS_MIN_PVALUE) -> TwoSampleResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value."""
    a = _as_sample(a, "a")
    b = _as_sample(b, "b")
    d = ks_statistic(a, b)
    en = a.size * b.size / (a.size + b.size)
    p = float(stats.kstwobign.sf(math.sqrt(en) * d)) if d > 0 else 1.0
    return TwoSampleResult("KS", d, p, (a.size, b.size), p > min_pvalue)


def empirical_cf(x, lambdas) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    return np.exp(1j * np.outer(lam, x)).mean(axis=1)


def ecf_distance(a, b, lambdas=DEFAULT_LAMBDAS, max_distance: float = ECF_MAX_DISTANCE) -> TwoSampleResult:
    """max over lambda of |phi_a(lambda) - phi_b(lambda)| for empirical characteristic functions."""
    a = _as_sample(a, "a")
    b = _as_sample(b, "b")
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 0:
        raise EmptySampleError("lambda grid is empty")
    dist = float(np.max(np.abs(empirical_cf(a, lam) - empirical_cf(b, lam))))
    return TwoSampleResult("ECF", dist, max_distance, (a.size, b.size), dist < max_distance)


def moment_check(sample, target: float, tolerance_sigmas: float = MOMENT_SIGMAS) -> MomentCheck:
    """z-test of the sample mean against ``target`` with std error s / sqrt(M)."""
    x = _as_sample(sample, "sample")
    if x.size < 2:
        raise ValueError("moment_check needs at least two observations")
    mean = math.fsum(x) / x.size
    se = float(np.std(x, ddof=1)) / math.sqrt(x.size)
    if se == 0.0:
        if mean != target:
            raise DegenerateSampleError(f"constant sample {mean} cannot match target {target}")
        return MomentCheck(mean, target, 0.0, 0.0, True)
    z = (mean - target) / se
    return MomentCheck(mean, target, se, z, abs(z) <= tolerance_sigmas)
