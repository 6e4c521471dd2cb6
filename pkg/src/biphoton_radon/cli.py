"""Command-line entry point ``biphoton-radon``.

Every subcommand takes ``--config FILE`` and any number of
``--set key=value`` overrides using the dotted config keys. Exit codes:
0 on success, 2 on configuration errors, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import _KEYS, RunConfig, load_config
from .detection import DetectorConfig, phi_sweep
from .errors import BiphotonRadonError, ConfigError, MissingDataError
from .fileio import read_grid, read_histogram, read_sinogram, write_grid, write_histogram, write_json, write_sinogram
from .information import mi_discrete
from .pipeline import emit_figure_data, load_report, params_from_config, run_pipeline, sweep_sinogram
from .separability import Setting, sep_bound_report
from .state import covariance_from_params
from .tomography import radon_forward, reconstruct

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v


def build_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    pairs = list(args.set or [])
    for key in _KEYS:
        value = getattr(args, _flag_dest(key), None)
        if value is not None:
            pairs.append((key, value))
    return config.with_overrides(pairs) if pairs else config


def _flag_dest(key: str) -> str:
    return "cfg_" + key.replace(".", "_")


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", action="append", type=_key_value, metavar="KEY=VALUE", help="override one config key")
    group = p.add_argument_group("config keys")
    for key in _KEYS:
        group.add_argument(f"--{key}", dest=_flag_dest(key), metavar="VALUE")


def _state_and_config(args):
    config = build_config(args)
    return covariance_from_params(params_from_config(config)), config


def cmd_simulate(args) -> int:
    state, config = _state_and_config(args)
    out = Path(args.out or config.output_dir)
    for basis in config.bases:
        det = DetectorConfig.default(state, config.d, basis, scale=config.half_range_scale)
        sweep = phi_sweep(state, det, config.m, config.shots, config.seed)
        for j, h in enumerate(sweep.histograms):
            write_histogram(out / f"hist_{basis}_{j:03d}.csv", h)
    return EXIT_OK


def cmd_radon(args) -> int:
    state, config = _state_and_config(args)
    out = Path(args.out or Path(config.output_dir) / "sinogram.csv")
    if args.grid:
        sino = radon_forward(read_grid(args.grid), config.m, config.n)
    else:
        det = DetectorConfig.default(state, config.d, config.bases[0], scale=config.half_range_scale)
        sino = sweep_sinogram(phi_sweep(state, det, config.m, config.shots, config.seed), config.n)
    write_sinogram(out, sino, config.dft_mode)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    _, config = _state_and_config(args)
    grid = reconstruct(read_sinogram(args.sinogram), config.oversample)
    write_grid(args.out or Path(config.output_dir) / "grid.csv", grid, config.dft_mode)
    return EXIT_OK


def cmd_mi(args) -> int:
    build_config(args)
    result = mi_discrete(read_histogram(args.histogram))
    print(result.to_json())
    return EXIT_OK


def cmd_sepbound(args) -> int:
    config = build_config(args)
    rep = sep_bound_report(
        read_histogram(args.position), read_histogram(args.momentum), Setting(args.setting), config.resamples, config.seed
    )
    if args.out:
        write_json(args.out, rep.to_dict())
    print(rep.to_json())
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = build_config(args)
    report = run_pipeline(config, args.out)
    print(json.dumps({"configHash": report.config_hash, "output": str(args.out or config.output_dir)}))
    return EXIT_OK


def cmd_figures(args) -> int:
    config = build_config(args)
    source = args.report or config.output_dir
    try:
        report = load_report(source)
    except MissingDataError as exc:
        raise MissingDataError(f"no report found at {source}") from exc
    emit_figure_data(report, args.out or Path(source if Path(source).is_dir() else Path(source).parent), args.figures)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biphoton-radon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write coincidence histograms for every phase and basis")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("radon", help="write a sinogram from a phase sweep or from a grid file")
    p.add_argument("--grid", help="grid CSV to project instead of simulating a sweep")
    p.add_argument("--out", help="sinogram CSV path")
    p.set_defaults(func=cmd_radon)

    p = sub.add_parser("reconstruct", help="reconstruct a grid from a sinogram CSV")
    p.add_argument("sinogram")
    p.add_argument("--out", help="grid CSV path")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("mi", help="mutual information of a histogram CSV")
    p.add_argument("histogram")
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("sepbound", help="separability-bound report from position and momentum histograms")
    p.add_argument("position")
    p.add_argument("momentum")
    p.add_argument("--setting", default="standard", choices=[s.value for s in Setting])
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_sepbound)

    p = sub.add_parser("pipeline", help="full run: report JSON and curve CSVs")
    p.add_argument("--out", help="output directory (default: output.dir)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("figures", help="figure CSVs from an existing report")
    p.add_argument("--report", help="report.json or run directory (default: output.dir)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--figures", nargs="+", default=["fig4a", "fig4b", "fig3"], choices=["fig4a", "fig4b", "fig3"])
    p.set_defaults(func=cmd_figures)

    for p in sub.choices.values():
        _add_config_flags(p)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error [{exc.module}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BiphotonRadonError, ArithmeticError, ValueError) as exc:
        module = getattr(exc, "module", "biphoton_radon")
        print(f"error [{module}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
