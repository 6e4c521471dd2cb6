"""Entropic separability bound from position and momentum coincidence data.

The bound is ``H(A|B)_x + H(A|B)_p < 6.18`` bits. A violation is counted
in standard deviations, ``(6.18 - sum) / std``, where ``std`` is the
multinomial-bootstrap standard deviation of the measured sum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .detection import Basis, CoincidenceHistogram, DetectorConfig, bin_samples, sample_quadratures, sweep_angles
from .errors import IncomparableSettingsError, InvalidParametersError, UndefinedDeviationError
from .information import joint_entropies
from .seeding import task_rng
from .state import GaussianState4, arm_b_rotation, rotate_arm_b

SEPARABILITY_BOUND = 6.18
_NEG_FLOOR = -1e-12


class Setting(str, Enum):
    STANDARD = "standard"
    RADON = "radon"


def _conditional(table, given: str) -> float:
    ha, hb, hab = joint_entropies(table)
    h = hab - (hb if given == "B" else ha)
    if h < _NEG_FLOOR:
        raise ArithmeticError(f"conditional entropy {h!r} below the numerical floor")
    return max(h, 0.0)


def _check_pair(hist_x: CoincidenceHistogram, hist_p: CoincidenceHistogram):
    if hist_x.dimension != hist_p.dimension:
        raise IncomparableSettingsError(
            f"position and momentum histograms differ in d: {hist_x.dimension} vs {hist_p.dimension}"
        )


def conditional_entropy_sum(hist_x: CoincidenceHistogram, hist_p: CoincidenceHistogram, given: str = "B"):
    """``(H(A|B)_x, H(A|B)_p, sum)``; ``given="A"`` gives the ``B|A`` direction."""
    _check_pair(hist_x, hist_p)
    hx = _conditional(hist_x.table, given)
    hp = _conditional(hist_p.table, given)
    return hx, hp, hx + hp


def deviation_count(total: float, std_estimate: float) -> float:
    """Number of standard deviations by which ``total`` lies below the bound."""
    if not (std_estimate > 0):
        raise UndefinedDeviationError(f"standard deviation must be > 0, got {std_estimate!r}")
    return (SEPARABILITY_BOUND - total) / std_estimate


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def _conditional_sums_batch(tables: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """H(A|B) and H(B|A) for a batch of count tables of shape ``(R, k, k)``."""
    tot = tables.sum(axis=(1, 2), keepdims=True)
    p = tables / tot
    r = p.shape[0]
    hab = _entropy_rows(p.reshape(r, -1))
    ha = _entropy_rows(p.sum(axis=2))
    hb = _entropy_rows(p.sum(axis=1))
    return np.maximum(hab - hb, 0.0), np.maximum(hab - ha, 0.0)


def _reported_sum(hist_x, hist_p) -> tuple[float, float, float, str, float]:
    ab = conditional_entropy_sum(hist_x, hist_p, "B")
    ba = conditional_entropy_sum(hist_x, hist_p, "A")
    if ba[2] > ab[2]:
        return ba[0], ba[1], ba[2], "B|A", ab[2]
    return ab[0], ab[1], ab[2], "A|B", ba[2]


def bootstrap_std(
    hist_x: CoincidenceHistogram, hist_p: CoincidenceHistogram, resamples: int = 200, seed: int = 0
) -> float:
    """Multinomial bootstrap standard deviation of the reported conditional-entropy sum.

    Each resample redraws both count tables from their own empirical
    frequencies with the original number of shots. The reported sum is the
    larger of the ``A|B`` and ``B|A`` sums, as in :func:`sep_bound_report`.
    """
    if not (hist_x.is_counts and hist_p.is_counts):
        raise InvalidParametersError("bootstrap needs count-mode histograms")
    if resamples < 100:
        raise InvalidParametersError(f"need at least 100 resamples, got {resamples}")
    _check_pair(hist_x, hist_p)
    rng = task_rng(seed, "bootstrap")
    sums = []
    for h in (hist_x, hist_p):
        n = int(h.table.sum())
        if n == 0:
            raise InvalidParametersError("cannot bootstrap an empty histogram")
        p = h.table.ravel() / n
        draws = rng.multinomial(n, p, size=resamples).reshape(resamples, *h.table.shape)
        sums.append(_conditional_sums_batch(draws.astype(float)))
    ab = sums[0][0] + sums[1][0]
    ba = sums[0][1] + sums[1][1]
    return float(np.std(np.maximum(ab, ba), ddof=1))


@dataclass(frozen=True)
class SepBoundReport:
    h_x: float
    h_p: float
    sum: float
    direction: str
    other_sum: float
    d: int
    setting: Setting
    std_estimate: float | None = None
    deviations: float | None = None
    shots: int | None = None
    resamples: int | None = None
    seed: int | None = None
    bound: float = SEPARABILITY_BOUND

    @property
    def violated(self) -> bool:
        return self.sum < self.bound

    def to_dict(self) -> dict:
        """JSON-ready fields; ``hABx``/``hABp`` hold the terms of the reported ``direction``."""
        return {
            "hABx": self.h_x,
            "hABp": self.h_p,
            "sum": self.sum,
            "direction": self.direction,
            "otherSum": self.other_sum,
            "bound": self.bound,
            "violated": self.violated,
            "stdEstimate": self.std_estimate,
            "deviations": self.deviations,
            "setting": self.setting.value,
            "d": self.d,
            "shots": "exact" if self.shots is None else self.shots,
            "resamples": self.resamples,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def sep_bound_report(
    hist_x: CoincidenceHistogram,
    hist_p: CoincidenceHistogram,
    setting=Setting.STANDARD,
    resamples: int = 200,
    seed: int | None = None,
) -> SepBoundReport:
    """Conditional-entropy sum with its bootstrap spread and deviation count.

    Exact-probability input gives no spread and no deviation count.
    """
    hx, hp, total, direction, other = _reported_sum(hist_x, hist_p)
    std = dev = None
    if hist_x.is_counts and hist_p.is_counts:
        std = bootstrap_std(hist_x, hist_p, resamples, 0 if seed is None else seed)
        dev = deviation_count(total, std) if std > 0 else None
    return SepBoundReport(
        hx,
        hp,
        total,
        direction,
        other,
        hist_x.dimension,
        Setting(setting),
        std,
        dev,
        hist_x.shots,
        resamples if std is not None else None,
        seed,
    )


@dataclass(frozen=True)
class SettingsComparison:
    tau: float
    kappa: float
    difference: float
    kappa_exceeds_tau: bool

    def to_dict(self) -> dict:
        return {"tau": self.tau, "kappa": self.kappa, "difference": self.difference, "kappaExceedsTau": self.kappa_exceeds_tau}


def compare_settings(standard: SepBoundReport, radon: SepBoundReport) -> SettingsComparison:
    if standard.d != radon.d:
        raise IncomparableSettingsError(f"reports use different d: {standard.d} vs {radon.d}")
    if standard.deviations is None or radon.deviations is None:
        raise UndefinedDeviationError("both reports need a deviation count")
    tau, kappa = standard.deviations, radon.deviations
    return SettingsComparison(tau, kappa, kappa - tau, kappa > tau)


@dataclass(frozen=True)
class PooledCounts:
    """Count histograms for the standard (phase 0) and pooled Radon settings."""

    standard_x: CoincidenceHistogram
    standard_p: CoincidenceHistogram
    pooled_x: CoincidenceHistogram
    pooled_p: CoincidenceHistogram
    m: int


def pooled_counts(
    state: GaussianState4, config_x: DetectorConfig, config_p: DetectorConfig, m: int, shots: int, seed: int
) -> PooledCounts:
    """Simulate ``shots`` coincidences per phase and pool them in the phase-0 frame.

    At each phase ``phi_j`` the quadratures are drawn from the rotated state
    and the known rotation is undone before binning, so every phase
    contributes counts of the same phase-0 observable. The phase-0 entry on
    its own is the standard setting; the pooled histogram holds ``m * shots``
    counts.
    """
    out = {}
    for basis, cfg in ((Basis.POSITION, config_x), (Basis.MOMENTUM, config_p)):
        cfg = replace(cfg, phi=0.0)
        ia, ib = Basis(basis).indices
        tables = []
        for j, phi in enumerate(sweep_angles(m)):
            rng = task_rng(seed, f"pooled/{Basis(basis).value}", j)
            samples = sample_quadratures(rotate_arm_b(state, phi), shots, rng)
            back = samples @ arm_b_rotation(phi)
            tables.append(bin_samples(back[:, ia], back[:, ib], cfg))
        standard = CoincidenceHistogram(tables[0], 0.0, basis, cfg.half_range, shots, seed)
        pooled = CoincidenceHistogram(sum(tables), 0.0, basis, cfg.half_range, shots * m, seed)
        out[basis] = (standard, pooled)
    return PooledCounts(out[Basis.POSITION][0], out[Basis.MOMENTUM][0], out[Basis.POSITION][1], out[Basis.MOMENTUM][1], m)


def standard_and_radon_reports(
    state: GaussianState4,
    config_x: DetectorConfig,
    config_p: DetectorConfig,
    m: int,
    shots: int,
    seed: int,
    resamples: int = 200,
) -> tuple[SepBoundReport, SepBoundReport, SettingsComparison]:
    pc = pooled_counts(state, config_x, config_p, m, shots, seed)
    std = sep_bound_report(pc.standard_x, pc.standard_p, Setting.STANDARD, resamples, seed)
    rad = sep_bound_report(pc.pooled_x, pc.pooled_p, Setting.RADON, resamples, seed)
    return std, rad, compare_settings(std, rad)
