"""Exact-in-law Gaussian path synthesis on the grid {k/n : k = 0..n}.

Two generators:

* Cholesky of the exact increment covariance -- the slow, trusted route
  (any model, n <= 4096).
* Circulant embedding of the stationary fBm increment sequence
  (Davies-Harte), O(n log n) per path, n a power of two.

Both return the path starting at 0. Randomness comes from one
:class:`~fbmvar.rng.RngStream` per path.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import covariance as cv
from .errors import DomainError, EmbeddingError, FactorizationError
from .rng import PATH_LANE, RngStream, stacked_normals

log = logging.getLogger(__name__)

CHOLESKY_MAX_N = 4096
JITTER = 1e-12
EMBEDDING_TOL = 1e-10


@dataclass(frozen=True)
class FBM:
    hurst: float

    def __post_init__(self):
        cv.check_hurst(self.hurst)

    def covariance(self, s, t):
        return cv.covariance_fbm(self.hurst, s, t)

    def __str__(self):
        return f"fbm(H={self.hurst:g})"


@dataclass(frozen=True)
class Bifractional:
    """Centered Gaussian process with covariance (sqrt(t+s) - sqrt|t-s|)/sqrt(2 pi)."""

    def covariance(self, s, t):
        return cv.covariance_bifractional(s, t)

    def __str__(self):
        return "bifractional"


BIFRACTIONAL = Bifractional()


class Generator(str, enum.Enum):
    CHOLESKY = "cholesky"
    CIRCULANT = "circulant"


@dataclass
class GridPath:
    n: int
    model: FBM | Bifractional
    values: np.ndarray = field(repr=False)
    seed: int
    generator: Generator
    stream_index: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def to_csv(self, fh) -> None:
        fh.write("t,value\n")
        for t, v in zip(self.times, self.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


@dataclass
class PathBatch:
    """M paths of one model, row i generated from stream ``indices[i]``."""

    n: int
    model: FBM | Bifractional
    values: np.ndarray = field(repr=False)  # shape (M, n + 1)
    seed: int
    generator: Generator
    indices: np.ndarray = field(repr=False)

    def __len__(self):
        return self.values.shape[0]

    def path(self, i: int) -> GridPath:
        return GridPath(self.n, self.model, self.values[i], self.seed, self.generator,
                        int(self.indices[i]))


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return int(n)


@lru_cache(maxsize=8)
def cholesky_factor(model, n: int) -> np.ndarray:
    """Lower factor of the n x n increment covariance of ``model`` on the grid."""
    n = _check_n(n)
    if n > CHOLESKY_MAX_N:
        raise DomainError(f"Cholesky route is limited to n <= {CHOLESKY_MAX_N}")
    C = cv.increment_covariance(model.covariance, n)
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        pass
    try:
        L = np.linalg.cholesky(C + JITTER * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"increment covariance of {model} at n={n} is indefinite beyond jitter {JITTER}"
        ) from exc
    log.info("added %.0e jitter to factor %s at n=%d", JITTER, model, n)
    return L


def fgn_autocovariance(hurst: float, n: int, lags: int) -> np.ndarray:
    """gamma(k) = n^{-2H} (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2 for k = 0..lags."""
    h = cv.check_hurst(hurst)
    k = np.arange(lags + 1, dtype=float)
    return 0.5 * n ** (-2 * h) * (np.abs(k + 1) ** (2 * h) + np.abs(k - 1) ** (2 * h) - 2 * k ** (2 * h))


def embedding_eigenvalues(hurst: float, n: int, size: int) -> np.ndarray:
    """Eigenvalues of the symmetric circulant of length ``size`` (>= 2n) built from gamma."""
    half = size // 2
    g = fgn_autocovariance(hurst, n, half)
    row = np.concatenate([g, g[-2:0:-1]])
    return np.fft.fft(row).real


@lru_cache(maxsize=16)
def _embedding(hurst: float, n: int):
    for size in (2 * n, 4 * n):
        lam = embedding_eigenvalues(hurst, n, size)
        if lam.min() >= -EMBEDDING_TOL:
            return size, np.sqrt(np.clip(lam, 0.0, None) / size)
        log.warning("circulant embedding of size %d has eigenvalue %.3e", size, lam.min())
    return None


def _is_power_of_two(n):
    return n >= 1 and n & (n - 1) == 0


def _cumulate(increments: np.ndarray) -> np.ndarray:
    out = np.zeros(increments.shape[:-1] + (increments.shape[-1] + 1,))
    np.cumsum(increments, axis=-1, out=out[..., 1:])
    return out


def _circulant_increments(hurst: float, n: int, normals: np.ndarray) -> np.ndarray:
    size, scale = _embedding(hurst, n)
    z = normals[..., :size] + 1j * normals[..., size:]
    return np.fft.fft(scale * z, axis=-1).real[..., :n]


def _circulant_size(model, n):
    if not isinstance(model, FBM):
        raise DomainError("circulant route needs stationary increments (fBm only)")
    if not _is_power_of_two(n):
        raise DomainError(f"circulant route needs n a power of two, got {n}")
    emb = _embedding(model.hurst, n)
    if emb is None:
        return None
    return emb[0]


def simulate_cholesky(model, n: int, rng: RngStream) -> GridPath:
    n = _check_n(n)
    L = cholesky_factor(model, n)
    inc = L @ rng.normals(n, PATH_LANE)
    return GridPath(n, model, _cumulate(inc), rng.master_seed, Generator.CHOLESKY, rng.stream_index)


def simulate_circulant(model, n: int, rng: RngStream) -> GridPath:
    """Davies-Harte path; falls back to Cholesky if the embedding fails after one doubling."""
    n = _check_n(n)
    size = _circulant_size(model, n)
    if size is None:
        if n > CHOLESKY_MAX_N:
            raise EmbeddingError(f"circulant embedding failed for {model} at n={n}")
        return simulate_cholesky(model, n, rng)
    inc = _circulant_increments(model.hurst, n, rng.normals(2 * size, PATH_LANE))
    return GridPath(n, model, _cumulate(inc), rng.master_seed, Generator.CIRCULANT, rng.stream_index)


def simulate(model, n: int, rng: RngStream, generator=Generator.CIRCULANT) -> GridPath:
    if Generator(generator) is Generator.CHOLESKY:
        return simulate_cholesky(model, n, rng)
    return simulate_circulant(model, n, rng)


def simulate_batch(model, n: int, master_seed: int, indices, generator=Generator.CIRCULANT,
                   lane: int = PATH_LANE) -> PathBatch:
    """Paths for the given stream indices, stacked row-wise.

    Row i depends only on (model, n, master_seed, indices[i], generator); the
    circulant route is bit-identical to :func:`simulate_circulant`. The
    Cholesky route uses a matrix product, which matches the single-path
    route to rounding only.
    """
    n = _check_n(n)
    indices = np.asarray(indices, dtype=np.int64)
    generator = Generator(generator)
    if generator is Generator.CIRCULANT:
        size = _circulant_size(model, n)
        if size is None:
            if n > CHOLESKY_MAX_N:
                raise EmbeddingError(f"circulant embedding failed for {model} at n={n}")
            generator = Generator.CHOLESKY
    if generator is Generator.CHOLESKY:
        L = cholesky_factor(model, n)
        z = stacked_normals(master_seed, indices, n, lane)
        inc = z @ L.T
    else:
        z = stacked_normals(master_seed, indices, 2 * size, lane)
        inc = _circulant_increments(model.hurst, n, z)
    return PathBatch(n, model, _cumulate(inc), master_seed, generator, indices)
