"""Binned coincidence statistics for a Gaussian biphoton state.

Each detector arm has ``d`` uniform bins over ``[-half_range, half_range]``
plus one out-of-range outcome. Histograms keep the full
``(d + 1) x (d + 1)`` table; the last row and column hold the out-of-range
outcomes, so nothing is renormalised away.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateStateError, InvalidParametersError
from .seeding import task_rng
from .state import PA, PB, XA, XB, GaussianState4, normalize_phase, rotate_arm_b

# standardised cutoff; Gaussian mass beyond +-9 sigma is ~2e-19
_TAIL_CUTOFF = 9.0
_GL_ORDER = 16
_CHUNK_ELEMENTS = 4_000_000


class Basis(str, Enum):
    POSITION = "position"
    MOMENTUM = "momentum"

    @property
    def indices(self) -> tuple[int, int]:
        return (XA, XB) if self is Basis.POSITION else (PA, PB)


@dataclass(frozen=True)
class DetectorConfig:
    dimension: int
    half_range: float
    basis: Basis = Basis.POSITION
    phi: float = 0.0

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise InvalidParametersError(f"detector dimension must be an integer >= 2, got {self.dimension!r}")
        if not (math.isfinite(self.half_range) and self.half_range > 0):
            raise InvalidParametersError(f"half_range must be finite and > 0, got {self.half_range!r}")
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "basis", Basis(self.basis))
        object.__setattr__(self, "phi", normalize_phase(self.phi))

    @classmethod
    def default(cls, state: GaussianState4, dimension: int, basis=Basis.POSITION, phi: float = 0.0, scale: float = 4.0):
        """Half range of ``scale`` standard deviations of arm A's measured quadrature."""
        basis = Basis(basis)
        ia, _ = basis.indices
        return cls(dimension, scale * math.sqrt(state.covariance[ia, ia]), basis, phi)

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(-self.half_range, self.half_range, self.dimension + 1)


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Joint detection table for one phase setting.

    ``table[i, j]`` for ``i, j < d`` is the in-range cell; index ``d`` on
    either axis is that arm's out-of-range outcome. ``shots`` is ``None``
    for exact probabilities.
    """

    table: np.ndarray
    phi: float
    basis: Basis
    half_range: float
    shots: int | None = None
    seed: int | None = None

    def __post_init__(self):
        t = np.asarray(self.table)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 3:
            raise InvalidParametersError(f"table must be square (d+1)x(d+1) with d >= 2, got {t.shape}")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise InvalidParametersError("table entries must be finite and nonnegative")
        if self.shots is None:
            t = t.astype(float)
            if abs(t.sum() - 1.0) > 1e-9:
                raise InvalidParametersError(f"probabilities sum to {t.sum()!r}, expected 1")
        else:
            t = t.astype(np.int64)
            if int(t.sum()) != int(self.shots):
                raise InvalidParametersError(f"counts sum to {int(t.sum())}, expected {self.shots}")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "basis", Basis(self.basis))

    @property
    def dimension(self) -> int:
        return self.table.shape[0] - 1

    @property
    def is_counts(self) -> bool:
        return self.shots is not None

    @property
    def cells(self) -> np.ndarray:
        d = self.dimension
        return self.table[:d, :d]

    @property
    def overflow(self):
        """Mass (or count) with at least one arm out of range."""
        return self.table.sum() - self.cells.sum()

    def probabilities(self) -> np.ndarray:
        total = self.table.sum()
        if total <= 0:
            from .errors import UndefinedDistributionError

            raise UndefinedDistributionError("histogram has no mass")
        return self.table / total

    def config(self) -> DetectorConfig:
        return DetectorConfig(self.dimension, self.half_range, self.basis, self.phi)


def _interval_probabilities(ea: np.ndarray, eb: np.ndarray, r: float, s: float) -> np.ndarray:
    """Standard bivariate normal mass over all interval pairs.

    ``ea`` and ``eb`` are standardised bin edges. Returns a
    ``(len(ea) + 1) x (len(eb) + 1)`` table whose first and last rows and
    columns are the semi-infinite tails. The inner integral over B is exact
    (normal CDF); the outer one uses Gauss-Legendre panels no wider than
    half the conditional width, so the integrand is resolved for any
    correlation.
    """
    na, nb = len(ea) + 1, len(eb) + 1
    breaks = np.unique(np.clip(np.concatenate([ea, [-_TAIL_CUTOFF, _TAIL_CUTOFF]]), -_TAIL_CUTOFF, _TAIL_CUTOFF))
    lengths = np.diff(breaks)
    npan = np.maximum(1, np.ceil(lengths / min(0.5, s / 2)).astype(int))
    width = np.repeat(lengths / npan, npan)
    offset = np.arange(npan.sum()) - np.repeat(np.cumsum(npan) - npan, npan)
    lo = np.repeat(breaks[:-1], npan) + width * offset
    mid = lo + width / 2
    row_of_panel = np.searchsorted(ea, mid)  # 0 = lower tail, len(ea) = upper tail

    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    t = (mid[:, None] + 0.5 * width[:, None] * x[None, :]).ravel()
    wt = (0.5 * width[:, None] * w[None, :]).ravel() * np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    rows = np.repeat(row_of_panel, _GL_ORDER)

    out = np.zeros((na, nb))
    step = max(1, _CHUNK_ELEMENTS // nb)
    for start in range(0, len(t), step):
        tc, wc, rc = t[start : start + step], wt[start : start + step], rows[start : start + step]
        z = (eb[None, :] - r * tc[:, None]) / s
        cdf = ndtr(z)
        cond = np.empty((len(tc), nb))
        cond[:, 0] = cdf[:, 0]
        cond[:, 1:-1] = np.diff(cdf, axis=1)
        cond[:, -1] = ndtr(-z[:, -1])
        _accumulate_rows(out, rc, cond * wc[:, None])
    return out


def _accumulate_rows(out, rows, contrib):
    # rows are sorted within a chunk, so contiguous runs can be reduced at once
    starts = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
    sums = np.add.reduceat(contrib, starts, axis=0)
    out[rows[starts]] += sums


def _fold_tails(full: np.ndarray) -> np.ndarray:
    """Merge both tails of each axis into a single trailing out-of-range outcome."""
    d = full.shape[0] - 2
    t = np.zeros((d + 1, d + 1))
    inner = slice(1, d + 1)
    t[:d, :d] = full[inner, inner]
    t[:d, d] = full[inner, 0] + full[inner, -1]
    t[d, :d] = full[0, inner] + full[-1, inner]
    t[d, d] = full[0, 0] + full[0, -1] + full[-1, 0] + full[-1, -1]
    return t


def marginal_moments(state: GaussianState4, config: DetectorConfig) -> tuple[float, float, float]:
    """Variances of the two measured variables and their covariance after the phase rotation."""
    cov = rotate_arm_b(state, config.phi).covariance if config.phi else state.covariance
    ia, ib = config.basis.indices
    return float(cov[ia, ia]), float(cov[ib, ib]), float(cov[ia, ib])


def bin_joint_probabilities(state: GaussianState4, config: DetectorConfig) -> CoincidenceHistogram:
    """Exact joint detection probabilities for every pair of detector bins."""
    va, vb, c = marginal_moments(state, config)
    sa, sb = math.sqrt(va), math.sqrt(vb)
    r = c / (sa * sb)
    s2 = (va * vb - c * c) / (va * vb)
    if s2 <= 0:
        raise DegenerateStateError("2-D marginal is singular")
    s = math.sqrt(s2)
    if min(sa, sb) * s < 1e-12 * config.half_range:
        raise DegenerateStateError(
            f"conditional width {min(sa, sb) * s:.3g} is below 1e-12 of half_range {config.half_range:.3g}"
        )
    edges = config.edges
    full = _interval_probabilities(edges / sa, edges / sb, r, s)
    table = np.clip(_fold_tails(full), 0.0, None)
    return CoincidenceHistogram(table, config.phi, config.basis, config.half_range)


def _multinomial_table(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    p = probs.ravel() / probs.sum()
    return rng.multinomial(shots, p).reshape(probs.shape)


def sample_coincidences(
    state: GaussianState4, config: DetectorConfig, shots: int, seed: int, stream: int = 0
) -> CoincidenceHistogram:
    """Finite-statistics histogram drawn multinomially from the exact bin probabilities.

    ``stream`` selects an independent random stream for the same seed (the
    phase index in a sweep).
    """
    if shots < 0 or int(shots) != shots:
        raise InvalidParametersError(f"shots must be a nonnegative integer, got {shots!r}")
    exact = bin_joint_probabilities(state, config)
    rng = task_rng(seed, f"coincidences/{config.basis.value}", stream)
    counts = _multinomial_table(exact.table, int(shots), rng)
    return CoincidenceHistogram(counts, config.phi, config.basis, config.half_range, int(shots), seed)


@dataclass(frozen=True)
class PhiSweep:
    m: int
    histograms: tuple[CoincidenceHistogram, ...]

    def __post_init__(self):
        if len(self.histograms) != self.m or self.m < 1:
            raise InvalidParametersError("sweep must hold exactly m >= 1 histograms")
        phis = [h.phi for h in self.histograms]
        if any(b <= a for a, b in zip(phis, phis[1:])):
            raise InvalidParametersError("sweep phases must be strictly increasing")
        first = self.histograms[0]
        for h in self.histograms[1:]:
            if (h.dimension, h.basis, h.half_range) != (first.dimension, first.basis, first.half_range):
                raise InvalidParametersError("sweep histograms must share d, basis and half_range")

    @property
    def phis(self) -> np.ndarray:
        return np.array([h.phi for h in self.histograms])

    @property
    def dimension(self) -> int:
        return self.histograms[0].dimension

    @property
    def basis(self) -> Basis:
        return self.histograms[0].basis

    @property
    def shots(self):
        return self.histograms[0].shots


def sweep_angles(m: int) -> np.ndarray:
    """phi_j = j * pi / m for j = 0 .. m-1."""
    if int(m) != m or m < 1:
        raise InvalidParametersError(f"m must be a positive integer, got {m!r}")
    return np.arange(int(m)) * math.pi / int(m)


def phi_sweep(
    state: GaussianState4,
    base: DetectorConfig,
    m: int,
    shots: int | None = None,
    seed: int | None = None,
    max_workers: int | None = None,
) -> PhiSweep:
    """Histograms at every phase of the sweep; ``shots=None`` gives exact probabilities."""
    if shots is not None and seed is None:
        raise InvalidParametersError("a seed is required when shots is finite")
    configs = [replace(base, phi=float(phi)) for phi in sweep_angles(m)]

    def one(j):
        if shots is None:
            return bin_joint_probabilities(state, configs[j])
        return sample_coincidences(state, configs[j], shots, seed, stream=j)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            hists = list(pool.map(one, range(len(configs))))
    else:
        hists = [one(j) for j in range(len(configs))]
    return PhiSweep(int(m), tuple(hists))


def sample_quadratures(state: GaussianState4, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``shots`` zero-mean samples of ``(xA, pA, xB, pB)``."""
    cov = state.covariance
    scale = np.sqrt(np.diag(cov))
    L = np.linalg.cholesky(cov / np.outer(scale, scale))
    z = rng.standard_normal((int(shots), 4))
    return (z @ L.T) * scale


def bin_samples(a: np.ndarray, b: np.ndarray, config: DetectorConfig) -> np.ndarray:
    """Count table for paired samples of arm A and arm B, out-of-range outcomes last."""
    d, H = config.dimension, config.half_range
    width = 2 * H / d

    def index(v):
        k = np.floor((np.asarray(v) + H) / width).astype(np.int64)
        k[(k < 0) | (k >= d)] = d
        return k

    flat = index(a) * (d + 1) + index(b)
    return np.bincount(flat, minlength=(d + 1) ** 2).reshape(d + 1, d + 1)
