"""Run configuration as flat ``section.key = value`` text.

Example::

    state.sigmaS = 1500.0
    state.sigmaC = 40.0
    detector.d = 32
    sweep.m = 8
    sweep.shots = exact
    seed = 7

Lines starting with ``#`` are comments. Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .detection import Basis
from .errors import ConfigError
from .information import RadonMode
from .tomography import DFTMode


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    return v


def _parse_optional_float(text: str):
    return None if text.lower() in ("", "none") else _parse_float(text)


def _parse_optional_int(text: str):
    return None if text.lower() in ("", "none") else int(text)


def _parse_shots(text: str):
    return None if text.lower() in ("exact", "none", "") else int(text)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# dotted key -> (attribute, parser)
_KEYS = {
    "state.sigmaS": ("sigma_s", _parse_optional_float),
    "state.sigmaC": ("sigma_c", _parse_optional_float),
    "state.w1": ("w1", _parse_optional_float),
    "state.w2": ("w2", _parse_optional_float),
    "state.wavelength": ("wavelength", _parse_float),
    "detector.d": ("d", int),
    "detector.dSweep": ("d_sweep", _parse_int_list),
    "detector.halfRangeScale": ("half_range_scale", _parse_float),
    "detector.bases": ("bases", _parse_str_list),
    "sweep.m": ("m", int),
    "sweep.shots": ("shots", _parse_shots),
    "tomography.n": ("n", int),
    "tomography.regrid": ("regrid", str),
    "tomography.dftMode": ("dft_mode", str),
    "tomography.oversample": ("oversample", int),
    "tomography.phantomCheck": ("phantom_check", _parse_bool),
    "analysis.miModes": ("mi_modes", _parse_str_list),
    "analysis.resamples": ("resamples", int),
    "seed": ("seed", _parse_optional_int),
    "output.dir": ("output_dir", str),
}
_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}
# not part of the provenance hash: where a run is written does not change its numbers
_UNHASHED = ("output.dir",)


@dataclass(frozen=True)
class RunConfig:
    sigma_s: float | None = 1500.0
    sigma_c: float | None = 40.0
    w1: float | None = None
    w2: float | None = None
    wavelength: float = 325.0
    d: int = 32
    d_sweep: tuple[int, ...] = ()
    half_range_scale: float = 4.0
    bases: tuple[str, ...] = ("position", "momentum")
    m: int = 8
    shots: int | None = None
    n: int = 64
    phantom_check: bool = False
    regrid: str = "weightedAverage"
    dft_mode: str = "standard"
    oversample: int = 2
    mi_modes: tuple[str, ...] = ("sumEq46", "meanOverPhi", "reconstructedGrid")
    resamples: int = 200
    seed: int | None = None
    output_dir: str = "out"

    def __post_init__(self):
        try:
            self._validate()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def _validate(self):
        widths = self.sigma_s is not None and self.sigma_c is not None
        amps = self.w1 is not None and self.w2 is not None
        if widths == amps:
            raise ConfigError("give exactly one of (state.sigmaS, state.sigmaC) or (state.w1, state.w2)")
        if widths and not (0 < self.sigma_c <= self.sigma_s):
            raise ConfigError(f"need 0 < state.sigmaC <= state.sigmaS, got {self.sigma_s!r}, {self.sigma_c!r}")
        if amps and not (self.w1 > 0 and self.w2 > 0):
            raise ConfigError("state.w1 and state.w2 must be > 0")
        if not self.wavelength > 0:
            raise ConfigError("state.wavelength must be > 0")
        if self.d < 2:
            raise ConfigError(f"detector.d must be >= 2, got {self.d}")
        if any(x < 2 for x in self.d_sweep):
            raise ConfigError("detector.dSweep entries must be >= 2")
        if list(self.d_sweep) != sorted(set(self.d_sweep)):
            raise ConfigError("detector.dSweep must be strictly increasing")
        if not self.half_range_scale > 0:
            raise ConfigError("detector.halfRangeScale must be > 0")
        if not self.bases:
            raise ConfigError("detector.bases must not be empty")
        for b in self.bases:
            Basis(b)
        if self.m < 1:
            raise ConfigError(f"sweep.m must be >= 1, got {self.m}")
        if self.shots is not None:
            if self.shots < 1:
                raise ConfigError("sweep.shots must be >= 1 or 'exact'")
            if self.seed is None:
                raise ConfigError("seed is mandatory when sweep.shots is finite")
        if self.n < 0 or (self.n and self.n < 8):
            raise ConfigError("tomography.n must be 0 (off) or >= 8")
        if self.regrid != "weightedAverage":
            raise ConfigError(f"unknown tomography.regrid {self.regrid!r}")
        DFTMode(self.dft_mode)
        if self.oversample < 1:
            raise ConfigError("tomography.oversample must be >= 1")
        for mode in self.mi_modes:
            RadonMode(mode)
        if self.resamples < 100:
            raise ConfigError("analysis.resamples must be >= 100")

    @property
    def dimensions(self) -> tuple[int, ...]:
        return self.d_sweep if self.d_sweep else (self.d,)

    def items(self) -> list[tuple[str, str]]:
        return [(_ATTR_TO_KEY[f.name], _fmt(getattr(self, f.name))) for f in fields(self)]

    def with_overrides(self, overrides) -> "RunConfig":
        """Apply ``{dotted key: text}`` overrides, e.g. from ``--set`` flags."""
        items = overrides.items() if hasattr(overrides, "items") else overrides
        return _merge(self, _parse_pairs(items))


def _parse_pairs(pairs) -> dict:
    out = {}
    for key, text in pairs:
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        attr, parser = _KEYS[key]
        try:
            out[attr] = parser(text.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from exc
    return out


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value))
    return _merge(base or RunConfig(), _parse_pairs(pairs))


def _merge(base: RunConfig, values: dict) -> RunConfig:
    # setting one state parameterisation clears the other unless both are given
    if ("sigma_s" in values or "sigma_c" in values) and not ("w1" in values or "w2" in values):
        values.setdefault("w1", None)
        values.setdefault("w2", None)
    elif ("w1" in values or "w2" in values) and not ("sigma_s" in values or "sigma_c" in values):
        values.setdefault("sigma_s", None)
        values.setdefault("sigma_c", None)
    return replace(base, **values)


def serialize_config(config: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config.items())


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


def config_hash(config: RunConfig) -> str:
    text = "".join(f"{k} = {v}\n" for k, v in config.items() if k not in _UNHASHED)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
