"""End-to-end runs: state, phase sweeps, tomography, information metrics and the separability bound."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import RunConfig, config_hash, serialize_config
from .detection import Basis, DetectorConfig, PhiSweep, bin_joint_probabilities, phi_sweep
from .errors import MissingDataError
from .fileio import atomic_write_text, read_json, write_csv, write_json
from .information import (
    RadonMode,
    mi_closed_form,
    mi_discrete,
    mi_radon_full,
    mi_shannon_additive,
    theoretical_max,
)
from .separability import sep_bound_report, standard_and_radon_reports
from .state import BiphotonParams, GaussianPhaseDensity, covariance_from_params
from .tomography import Grid2D, Sinogram, radon_forward, reconstruct

REPORT_NAME = "report.json"
SWEEP_COLUMNS = ["d", "I0", "IR_mean", "IR_sum", "IR_recon", "log2d"]
FIG4A_KINDS = ["standardI0", "radonFullMean", "radonFullSum", "radonReconstructed", "theoreticalMax"]


def artifact_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def params_from_config(config: RunConfig) -> BiphotonParams:
    if config.w1 is not None:
        return BiphotonParams(config.w1, config.w2, config.wavelength)
    return BiphotonParams.from_widths(config.sigma_s, config.sigma_c, config.wavelength)


def sweep_sinogram(sweep: PhiSweep, n: int) -> Sinogram:
    """Arm-B marginal densities of a sweep, resampled at ``n`` offsets.

    Row ``j`` is the density of arm B's rotated quadrature at phase
    ``phi_j``, estimated as bin probability over bin width and linearly
    interpolated at the physical offsets ``rho_l * W`` with ``W`` the
    detector half range. Out-of-range mass is dropped.
    """
    first = sweep.histograms[0]
    d, w = first.dimension, first.half_range
    width = 2 * w / d
    centers = -w + (np.arange(d) + 0.5) * width
    offsets = -w + 2 * w * np.arange(n) / n
    rows = []
    for h in sweep.histograms:
        p = h.probabilities()[:, :d].sum(axis=0)
        rows.append(np.interp(offsets, centers, p / width, left=0.0, right=0.0))
    return Sinogram(np.array(rows), w)


def phantom_reconstruction_error(m: int, n: int, oversample: int = 2) -> dict:
    """Relative L2 error of reconstructing a centred Gaussian phantom of width 0.1 W."""
    phantom = Grid2D.from_function(GaussianPhaseDensity(0.1), n, 1.0)
    rec = reconstruct(radon_forward(phantom, m, n), oversample)
    err = np.linalg.norm(rec.values - phantom.values) / np.linalg.norm(phantom.values)
    return {"m": m, "n": n, "relativeL2": float(err), "massRatio": rec.total() / phantom.total()}


@dataclass
class RunReport:
    config: RunConfig
    dimensions: dict = field(default_factory=dict)
    closed_form: dict = field(default_factory=dict)
    sepbound: dict = field(default_factory=dict)
    tomography: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def curve_rows(self, basis: str | None = None) -> list[list]:
        basis = basis or self.config.bases[0]
        rows = []
        for d in self.config.dimensions:
            entry = self.dimensions[d][basis]
            rows.append([d, entry["standardI0"]["bits"], entry["radonFullMean"]["bits"], entry["radonFullSum"]["bits"],
                         entry.get("radonReconstructed", {}).get("bits", ""), math.log2(d)])
        return rows

    def to_dict(self) -> dict:
        return {
            "provenance": {
                "configHash": self.config_hash,
                "seed": self.config.seed,
                "artifactVersion": artifact_version(),
                "config": {k: v for k, v in self.config.items() if k != "output.dir"},
            },
            "closedForm": self.closed_form,
            "dimensions": {str(d): v for d, v in sorted(self.dimensions.items())},
            "sepBound": self.sepbound,
            "tomography": self.tomography,
        }


def _basis_results(state, config: RunConfig, d: int, basis: str) -> tuple[dict, PhiSweep]:
    det = DetectorConfig.default(state, d, basis, scale=config.half_range_scale)
    sweep = phi_sweep(state, det, config.m, config.shots, config.seed)
    out = {"halfRange": det.half_range, "standardI0": mi_discrete(sweep.histograms[0]).to_dict()}
    out["partials"] = [mi_discrete(h).to_dict() for h in sweep.histograms]
    out["radonFullSum"] = mi_radon_full(sweep, RadonMode.SUM).to_dict()
    out["radonFullMean"] = mi_radon_full(sweep, RadonMode.MEAN).to_dict()
    if config.n and RadonMode.RECONSTRUCTED.value in config.mi_modes and config.m >= 2:
        grid = reconstruct(sweep_sinogram(sweep, config.n), config.oversample)
        rec = mi_radon_full(grid, RadonMode.RECONSTRUCTED)
        out["radonReconstructed"] = {**rec.to_dict(), "m": config.m, "basis": basis}
    out["theoreticalMax"] = {"bits": theoretical_max(d), "kind": "theoreticalMax", "d": d}
    return out, sweep


def _sepbound(state, config: RunConfig) -> dict:
    if not {"position", "momentum"} <= set(config.bases):
        return {}
    cx = DetectorConfig.default(state, config.d, Basis.POSITION, scale=config.half_range_scale)
    cp = DetectorConfig.default(state, config.d, Basis.MOMENTUM, scale=config.half_range_scale)
    if config.shots is None:
        rep = sep_bound_report(bin_joint_probabilities(state, cx), bin_joint_probabilities(state, cp))
        return {"standard": rep.to_dict()}
    std, rad, cmp = standard_and_radon_reports(state, cx, cp, config.m, config.shots, config.seed, config.resamples)
    return {"standard": std.to_dict(), "radon": rad.to_dict(), "comparison": cmp.to_dict()}


def compute_report(config: RunConfig) -> RunReport:
    params = params_from_config(config)
    state = covariance_from_params(params)
    report = RunReport(config)
    report.closed_form = {"closedForm": mi_closed_form(params).to_dict()}
    if params.sigma_c < params.sigma_s:
        report.closed_form["shannonAdditive"] = mi_shannon_additive(params).to_dict()
    for d in sorted(set(config.dimensions) | {config.d}):
        report.dimensions[d] = {b: _basis_results(state, config, d, b)[0] for b in config.bases}
    report.sepbound = _sepbound(state, config)
    if config.phantom_check and config.n:
        report.tomography = {"phantom": phantom_reconstruction_error(max(config.m, 2), config.n, config.oversample)}
    return report


def emit_figure_data(report, out_dir, figures=("fig4a", "fig4b", "fig3")) -> list[Path]:
    """Write the requested figure CSVs from a report (object or ``report.json`` dict)."""
    data = report.to_dict() if isinstance(report, RunReport) else report
    out_dir = Path(out_dir)
    cfg = data["provenance"]["config"]
    d = int(cfg["detector.d"])
    basis = cfg["detector.bases"].split(",")[0]
    dims = data["dimensions"]
    sweep_ds = [int(x) for x in cfg["detector.dSweep"].split(",") if x] or [d]
    missing = []
    if "fig4a" in figures:
        entry = dims.get(str(d), {}).get(basis, {})
        missing += [f"fig4a: {k} at d={d}" for k in FIG4A_KINDS if k not in entry]
    if "fig4b" in figures:
        missing += [f"fig4b: run at d={x}" for x in sweep_ds if str(x) not in dims]
    if "fig3" in figures:
        sb = data.get("sepBound", {})
        for setting in ("standard", "radon"):
            if sb.get(setting, {}).get("deviations") is None:
                missing.append(f"fig3: {setting} setting with finite shots")
    if missing:
        raise MissingDataError("missing data for requested figures: " + "; ".join(missing))

    written = []
    if "fig4a" in figures:
        entry = dims[str(d)][basis]
        rows = [[k, entry[k]["bits"]] for k in FIG4A_KINDS]
        written.append(write_csv(out_dir / "fig4a.csv", ["kind", "bits"], rows))
    if "fig4b" in figures:
        rows = []
        for x in sweep_ds:
            e = dims[str(x)][basis]
            recon = e["radonReconstructed"]["bits"] if "radonReconstructed" in e else ""
            rows.append([x, e["standardI0"]["bits"], e["radonFullMean"]["bits"], e["radonFullSum"]["bits"], recon,
                         math.log2(x)])
        written.append(write_csv(out_dir / "fig4b.csv", SWEEP_COLUMNS, rows))
    if "fig3" in figures:
        sb = data["sepBound"]
        rows = [[s, sb[s]["sum"], sb[s]["stdEstimate"], sb[s]["deviations"]] for s in ("standard", "radon")]
        written.append(write_csv(out_dir / "fig3.csv", ["setting", "sum", "std", "deviations"], rows))
    return written


def available_figures(report: RunReport) -> tuple[str, ...]:
    figs = ["fig4b"]
    entry = report.dimensions[report.config.d][report.config.bases[0]]
    if all(k in entry for k in FIG4A_KINDS):
        figs.insert(0, "fig4a")
    if "radon" in report.sepbound:
        figs.append("fig3")
    return tuple(figs)


def run_pipeline(config: RunConfig, out_dir=None) -> RunReport:
    """Compute a report and write ``report.json``, ``config.txt``, ``dsweep.csv`` and figure CSVs.

    Identical configurations give byte-identical files. If anything fails
    while writing, the files written so far are removed.
    """
    report = compute_report(config)
    out_dir = Path(out_dir if out_dir is not None else config.output_dir)
    written: list[Path] = []
    try:
        written.append(write_json(out_dir / REPORT_NAME, report.to_dict()))
        written.append(atomic_write_text(out_dir / "config.txt", serialize_config(config)))
        written.append(write_csv(out_dir / "dsweep.csv", SWEEP_COLUMNS, report.curve_rows()))
        written += emit_figure_data(report, out_dir, available_figures(report))
    except BaseException:
        for p in written:
            if p.exists():
                os.unlink(p)
        raise
    return report


def load_report(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_NAME
    return read_json(path)
