"""Mutual information estimators and closed forms, in bits per photon."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .detection import CoincidenceHistogram, PhiSweep
from .errors import InvalidParametersError, UndefinedDistributionError
from .state import BiphotonParams

_NEG_FLOOR = -1e-12


class MIKind(str, Enum):
    STANDARD_I0 = "standardI0"
    PARTIAL_AT_PHI = "partialAtPhi"
    RADON_FULL_SUM = "radonFullSum"
    RADON_FULL_MEAN = "radonFullMean"
    RADON_RECONSTRUCTED = "radonReconstructed"
    CLOSED_FORM = "closedForm"
    SHANNON_ADDITIVE = "shannonAdditive"


@dataclass(frozen=True)
class MIResult:
    bits: float
    kind: MIKind
    basis: str | None = None
    phi: float | None = None
    d: int | None = None
    m: int | None = None
    shots: int | None = None
    additive_noise: float | None = None
    clamped_mass: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.bits) or self.bits < 0:
            raise InvalidParametersError(f"mutual information must be finite and >= 0, got {self.bits!r}")
        object.__setattr__(self, "kind", MIKind(self.kind))

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if v is not None and v != {}}
        out["kind"] = self.kind.value
        out["shots"] = "exact" if self.shots is None else self.shots
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in bits with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def joint_entropies(table: np.ndarray) -> tuple[float, float, float]:
    """H(A), H(B), H(AB) of a joint table normalised to unit mass."""
    t = np.asarray(table, dtype=float)
    total = t.sum()
    if not total > 0:
        raise UndefinedDistributionError("joint table has no mass")
    t = t / total
    return entropy(t.sum(axis=1)), entropy(t.sum(axis=0)), entropy(t)


def mutual_information_table(table: np.ndarray) -> float:
    ha, hb, hab = joint_entropies(table)
    mi = ha + hb - hab
    if mi < _NEG_FLOOR:
        raise ArithmeticError(f"mutual information {mi!r} below the numerical floor")
    return max(mi, 0.0)


def mi_discrete(hist: CoincidenceHistogram, kind=None) -> MIResult:
    """Plug-in mutual information H(A) + H(B) - H(AB) of a coincidence histogram.

    Counts are normalised first; the out-of-range outcome counts as one more
    outcome on each arm.
    """
    bits = mutual_information_table(hist.table)
    if kind is None:
        kind = MIKind.STANDARD_I0 if hist.phi == 0 else MIKind.PARTIAL_AT_PHI
    return MIResult(bits, kind, hist.basis.value, hist.phi, hist.dimension, None, hist.shots)


def mi_closed_form(params: BiphotonParams) -> MIResult:
    """log2((sigma_s / sigma_c)**2)."""
    sc = params.sigma_c
    if sc <= 0:
        raise InvalidParametersError("conditional width must be > 0")
    return MIResult(2 * math.log2(params.sigma_s / sc), MIKind.CLOSED_FORM)


def additive_noise(sigma_s: float, sigma_c: float) -> float:
    if not (0 < sigma_c < sigma_s):
        raise InvalidParametersError(f"need 0 < sigma_c < sigma_s, got {sigma_s!r}, {sigma_c!r}")
    return sigma_c / math.sqrt(1 - (sigma_c / sigma_s) ** 2)


def mi_shannon_additive(params: BiphotonParams) -> MIResult:
    """Shannon form log2(1 + sigma_s**2 / N**2) with N**2 = sigma_c**2 / (1 - sigma_c**2 / sigma_s**2)."""
    ss, sc = params.sigma_s, params.sigma_c
    n = additive_noise(ss, sc)
    return MIResult(math.log2(1 + (ss / n) ** 2), MIKind.SHANNON_ADDITIVE, additive_noise=n)


def theoretical_max(d: int) -> float:
    if int(d) != d or d < 1:
        raise InvalidParametersError(f"d must be a positive integer, got {d!r}")
    return math.log2(int(d))


class RadonMode(str, Enum):
    SUM = "sumEq46"
    MEAN = "meanOverPhi"
    RECONSTRUCTED = "reconstructedGrid"


def partial_informations(sweep: PhiSweep) -> list[MIResult]:
    return [mi_discrete(h) for h in sweep.histograms]


def mi_radon_full(source, mode=RadonMode.MEAN) -> MIResult:
    """Aggregate mutual information over a phase sweep or a reconstructed grid.

    ``sumEq46`` is the plain sum of the per-phase values and therefore
    scales with ``m``; ``meanOverPhi`` divides it by ``m``. For
    ``reconstructedGrid`` the source is a :class:`~biphoton_radon.tomography.Grid2D`;
    negative values are clipped to zero and the clipped mass is reported.
    """
    mode = RadonMode(mode)
    if mode is RadonMode.RECONSTRUCTED:
        values = np.asarray(source.values, dtype=float)
        negative = values[values < 0]
        clamped = float(-negative.sum())
        clipped = np.clip(values, 0.0, None)
        if not clipped.sum() > 0:
            raise UndefinedDistributionError("reconstructed grid has no positive mass")
        bits = mutual_information_table(clipped)
        total = float(np.abs(values).sum())
        return MIResult(
            bits,
            MIKind.RADON_RECONSTRUCTED,
            d=values.shape[0],
            clamped_mass=clamped,
            extra={"clamped_fraction": clamped / total if total else 0.0},
        )
    if not isinstance(source, PhiSweep):
        raise InvalidParametersError("sum and mean modes need a PhiSweep")
    partials = [r.bits for r in partial_informations(source)]
    total = math.fsum(partials)
    bits = total if mode is RadonMode.SUM else total / source.m
    kind = MIKind.RADON_FULL_SUM if mode is RadonMode.SUM else MIKind.RADON_FULL_MEAN
    return MIResult(
        bits, kind, source.basis.value, None, source.dimension, source.m, source.shots, extra={"partials": partials}
    )
