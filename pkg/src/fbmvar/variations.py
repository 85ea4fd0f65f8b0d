"""Power-variation statistics and Riemann sums of a sampled path.

The array-level functions take ``values`` with the time axis last
(``shape (..., n + 1)``) and return one number per path. The
``GridPath``-level wrappers add model checks and return a
:class:`VariationStatistic`.

Sums of the form sum_k w_k (B_b - B_a) are accumulated exactly with
``math.fsum`` over the expanded terms w_k B_b and -w_k B_a, so when every
weight is 1 the telescoping identities hold without rounding error.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelMismatchError
from .paths import FBM, Bifractional, GridPath
from .testfunctions import TestFunction

CRITICAL_HURST = 0.25
REGIME_TOL = 1e-12


class Kind(str, enum.Enum):
    G_N = "G_n"
    F_N = "F_n"
    S_N = "S_n"
    T_N = "T_n"
    CUBIC_CORRECTION = "cubic_correction"
    UNWEIGHTED_QV = "unweighted_qv"


@dataclass(frozen=True)
class VariationStatistic:
    kind: Kind
    n: int
    f_name: str
    value: float

    def csv_row(self, seed: int) -> str:
        return f"{self.kind.value},{self.n},{self.f_name},{seed},{self.value!r}"


CSV_HEADER = "kind,n,f_name,seed,value"


def hermite(k: int, x):
    """Probabilists' Hermite polynomials of order 2 and 3."""
    x = np.asarray(x, dtype=float)
    if k == 2:
        out = x * x - 1.0
    elif k == 3:
        out = x**3 - 3.0 * x
    else:
        raise DomainError(f"only Hermite orders 2 and 3 are supported, got {k}")
    return float(out) if out.ndim == 0 else out


def _grid_size(values) -> int:
    n = np.shape(values)[-1] - 1
    if n < 1:
        raise DomainError("a path needs at least two grid points")
    return n


def _exact_weighted_increments(weights, left, right):
    """Row-wise fsum of w * (right - left), expanded so unit weights telescope exactly."""
    w = np.atleast_2d(weights)
    a = np.atleast_2d(left)
    b = np.atleast_2d(right)
    terms = np.concatenate([w * b, -(w * a)], axis=1)
    out = np.fromiter((math.fsum(row) if np.all(np.isfinite(row)) else np.sum(row) for row in terms),
                      dtype=float, count=terms.shape[0])
    return out if np.ndim(weights) > 1 else out[0]


def weighted_qv(values, f: TestFunction):
    """n^{-1/2} sum_{k<n} f(B_{k/n}) [sqrt(n) (dB_k)^2 - 1]."""
    values = np.asarray(values, dtype=float)
    n = _grid_size(values)
    inc = np.diff(values, axis=-1)
    return np.sum(f(values[..., :-1]) * (math.sqrt(n) * inc**2 - 1.0), axis=-1) / math.sqrt(n)


def unweighted_normalization(hurst: float, n: int) -> float:
    """Factor in front of sum_k [n^{2H} (dB_k)^2 - 1] for the regime of H."""
    if abs(hurst - 0.75) <= REGIME_TOL:
        return 1.0 / math.sqrt(n * math.log(n))
    if hurst < 0.75:
        return 1.0 / math.sqrt(n)
    return n ** (1.0 - 2.0 * hurst)


def unweighted_qv(values, hurst: float):
    values = np.asarray(values, dtype=float)
    n = _grid_size(values)
    inc = np.diff(values, axis=-1)
    return unweighted_normalization(hurst, n) * np.sum(n ** (2 * hurst) * inc**2 - 1.0, axis=-1)


def trapezoid_sum(values, f: TestFunction):
    """sum_{k<n} (f(B_k) + f(B_{k+1}))/2 (B_{k+1} - B_k)."""
    values = np.asarray(values, dtype=float)
    _grid_size(values)
    fv = f(values)
    w = 0.5 * (fv[..., :-1] + fv[..., 1:])
    return _exact_weighted_increments(w, values[..., :-1], values[..., 1:])


def _half_grid(values):
    n = _grid_size(values)
    if n < 2:
        raise DomainError("midpoint-type sums need n >= 2")
    m = n // 2
    return n, m


def midpoint_sum(values, f: TestFunction):
    """sum_{k=1}^{n//2} f(B_{(2k-1)/n}) (B_{2k/n} - B_{(2k-2)/n}).

    For odd n the last interval is left out, so this approximates the
    integral over [0, 2*(n//2)/n].
    """
    values = np.asarray(values, dtype=float)
    n, m = _half_grid(values)
    mid = values[..., 1 : 2 * m : 2]
    return _exact_weighted_increments(f(mid), values[..., 0 : 2 * m - 1 : 2], values[..., 2 : 2 * m + 1 : 2])


def _paired_increments(values):
    n, m = _half_grid(values)
    inc = np.diff(values, axis=-1)
    even = inc[..., 0 : 2 * m : 2]  # dB_{(2k-2)/n}
    odd = inc[..., 1 : 2 * m : 2]  # dB_{(2k-1)/n}
    mid = values[..., 1 : 2 * m : 2]
    return mid, even, odd


def alternating_F(values, f: TestFunction):
    """sum_{k=1}^{n//2} f(B_{(2k-1)/n}) [(dB_{(2k-1)/n})^2 - (dB_{(2k-2)/n})^2]."""
    mid, even, odd = _paired_increments(np.asarray(values, dtype=float))
    return np.sum(f(mid) * (odd**2 - even**2), axis=-1)


def cubic_correction(values, f: TestFunction):
    """sum_{j=1}^{n//2} f(B_{(2j-1)/n}) [(dB_{(2j-2)/n})^3 + (dB_{(2j-1)/n})^3]."""
    mid, even, odd = _paired_increments(np.asarray(values, dtype=float))
    return np.sum(f(mid) * (even**3 + odd**3), axis=-1)


def _require_fbm(path: GridPath, hurst=None, allow_bifractional=False):
    model = path.model
    if isinstance(model, Bifractional) and allow_bifractional:
        return
    if not isinstance(model, FBM) or (hurst is not None and model.hurst != hurst):
        want = "fBm" if hurst is None else f"fBm with H={hurst}"
        raise ModelMismatchError(f"statistic requires {want}, got {model}")


def _stat(kind, path, f_name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ArithmeticError(f"{kind.value} evaluated to {value}")
    return VariationStatistic(kind, path.n, f_name, value)


def weighted_qv_G(path: GridPath, f: TestFunction) -> VariationStatistic:
    _require_fbm(path, CRITICAL_HURST)
    return _stat(Kind.G_N, path, f.name, weighted_qv(path.values, f))


def unweighted_qv_stat(path: GridPath, hurst: float) -> VariationStatistic:
    _require_fbm(path, hurst)
    return _stat(Kind.UNWEIGHTED_QV, path, "one", unweighted_qv(path.values, hurst))


def trapezoid_sum_S(path: GridPath, f: TestFunction) -> VariationStatistic:
    return _stat(Kind.S_N, path, f.name, trapezoid_sum(path.values, f))


def midpoint_sum_T(path: GridPath, f: TestFunction) -> VariationStatistic:
    return _stat(Kind.T_N, path, f.name, midpoint_sum(path.values, f))


def alternating_F_stat(path: GridPath, f: TestFunction) -> VariationStatistic:
    """F_n of a path; bifractional paths are accepted for exploratory runs."""
    _require_fbm(path, CRITICAL_HURST, allow_bifractional=True)
    return _stat(Kind.F_N, path, f.name, alternating_F(path.values, f))


def cubic_correction_stat(path: GridPath, f: TestFunction) -> VariationStatistic:
    _require_fbm(path, CRITICAL_HURST)
    return _stat(Kind.CUBIC_CORRECTION, path, f.name, cubic_correction(path.values, f))


def exact_variance_unweighted_qv(hurst: float, n: int) -> float:
    """Var of :func:`unweighted_qv` at finite n.

    With gamma the correlation of the normalized increments,
    Var = norm^2 * 2 sum_{i,j} gamma(i-j)^2 (Gaussian fourth moments).
    """
    d = np.arange(n, dtype=float)
    h2 = 2.0 * hurst
    gamma = 0.5 * (np.abs(d + 1) ** h2 + np.abs(d - 1) ** h2 - 2 * d**h2)
    mult = np.where(d == 0, n, 2 * (n - d))
    return unweighted_normalization(hurst, n) ** 2 * 2.0 * math.fsum(mult * gamma**2)
