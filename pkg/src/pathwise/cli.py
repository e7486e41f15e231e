"""Batch experiment runner.

Subcommands: simulate, integrate, qv, ito-check, derive, regularity.
Every run is a pure function of (config, input files): the resolved settings
are echoed into ``meta.txt``, outputs are CSV plus one-line JSON sidecars, and
re-runs are byte-identical at any ``--workers`` count.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 non-convergence in
--strict-bk mode.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

from . import __version__
from .bk import BkConfig, bk_integral, functional_path, quad_variation
from .functional import numeric_gradient, numeric_hessian, numeric_time_derivative
from .paths import Partition, read_path_csv, write_path_csv
from .registry import resolve_coefficient, resolve_functional
from .simulate import GeneratorSpec, generate
from .verify import ito_residual, qv_refinement_report, regularity_report, residual_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NONCONVERGED = 4

_DEFAULTS = {
    "kind": "brownian",
    "dimension": "1",
    "horizon": "1.0",
    "grid_level": "10",
    "drift": "zero",
    "vol": "one",
    "seed": "",
    "ensemble": "1",
    "levels": "",
    "workers": "1",
    "functional": "",
    "integrand": "one",
    "coords": "0,0",
    "times": "",
    "step": "1e-4",
    "input": "",
    "reference": "time",
    "bk_max_level": "14",
    "bk_tol": "1e-3",
    "strict_bk": "false",
}

_CONFIG_SECTIONS = {"run", "generator", "bk"}
_SECTION_KEYS = {
    "generator": {"kind", "dimension", "horizon", "grid_level", "drift", "vol"},
    "bk": {"bk_max_level", "bk_tol", "strict_bk"},
}


class ConfigError(Exception):
    pass


def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise OSError(f"cannot read config file {path}")
    out = {}
    for section in parser.sections():
        if section not in _CONFIG_SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            key = key.replace("-", "_")
            if key not in _DEFAULTS:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            expected = _SECTION_KEYS.get(section)
            if expected is not None and key not in expected:
                raise ConfigError(f"key {key!r} does not belong in [{section}]")
            out[key] = value
    return out


def _resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(_DEFAULTS)
    if args.config:
        settings.update(_load_config_file(args.config))
    for key in _DEFAULTS:
        if key == "strict_bk":
            continue  # store_true flag: absence must not override the config file
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            settings[key] = str(cli_val)
    if args.strict_bk:
        settings["strict_bk"] = "true"
    return settings


def _parse_levels(raw: str) -> list[int]:
    if not raw:
        raise ConfigError("this subcommand needs --levels a,b,c")
    try:
        levels = [int(x) for x in raw.split(",") if x != ""]
    except ValueError as e:
        raise ConfigError(f"bad levels {raw!r}") from e
    if not levels:
        raise ConfigError("empty levels list")
    return levels


def _require_seed(settings: dict) -> int:
    if settings["seed"] == "":
        raise ConfigError("a --seed is mandatory for stochastic subcommands")
    return int(settings["seed"])


def _bk_config(settings: dict) -> BkConfig:
    return BkConfig(
        max_level=int(settings["bk_max_level"]),
        cauchy_tol=float(settings["bk_tol"]),
        strict=settings["strict_bk"].lower() in ("1", "true", "yes", "on"),
    )


def _generator(settings: dict) -> GeneratorSpec:
    kind = settings["kind"]
    dim = int(settings["dimension"])
    drift = vol = None
    if kind in ("ito_euler", "local_vol"):
        mu = resolve_coefficient(settings["drift"], dim)
        sig = resolve_coefficient(settings["vol"], dim)
        zero = resolve_coefficient("zero", dim)
        drift = [mu] * dim
        vol = [[sig if i == j else zero for j in range(dim)] for i in range(dim)]
    return GeneratorSpec(
        kind=kind,
        dimension=dim,
        horizon=float(settings["horizon"]),
        level=int(settings["grid_level"]),
        seed=_require_seed(settings),
        drift=drift,
        vol=vol,
    )


def _run_dirs(settings: dict) -> tuple[Path, Path, Path]:
    out = Path(settings["out"])
    paths_dir = out / "paths"
    results_dir = out / "results"
    paths_dir.mkdir(parents=True, exist_ok=True)
    results_dir.mkdir(parents=True, exist_ok=True)
    return out, paths_dir, results_dir


def _write_meta(out: Path, settings: dict, command: str) -> None:
    # workers is execution detail, not experiment config: results must be
    # byte-identical at any parallelism degree, meta.txt included
    skip = {"out", "workers"}
    lines = [f"command = {command}", f"version = {__version__}"]
    lines += [f"{k} = {settings[k]}" for k in sorted(settings) if k not in skip]
    (out / "meta.txt").write_text("\n".join(lines) + "\n")


def _write_sidecar(path: Path, record: dict) -> None:
    path.write_text(json.dumps(record, sort_keys=True) + "\n")


def _input_path(settings: dict):
    if settings["input"]:
        return read_path_csv(settings["input"])
    return generate(_generator(settings), 0)


def cmd_simulate(settings: dict) -> int:
    out, paths_dir, _ = _run_dirs(settings)
    spec = _generator(settings)
    n = int(settings["ensemble"])
    for k in range(n):
        write_path_csv(generate(spec, k), str(paths_dir / f"path_{k:04d}.csv"))
    _write_sidecar(paths_dir / "generator.meta.json", spec.describe())
    _write_meta(out, settings, "simulate")
    return EXIT_OK


def cmd_integrate(settings: dict) -> int:
    out, _, results_dir = _run_dirs(settings)
    cfg = _bk_config(settings)
    path = _input_path(settings)
    i = int(settings["coords"].split(",")[0])
    integrand = resolve_coefficient(settings["integrand"], path.dimension)
    z = functional_path(integrand, path)
    res = bk_integral(z, path, i, cfg)
    write_path_csv(res.path, str(results_dir / "integral.csv"))
    _write_sidecar(results_dir / "integral.meta.json", res.metadata())
    _write_meta(out, settings, "integrate")
    if cfg.strict and not res.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_qv(settings: dict) -> int:
    out, _, results_dir = _run_dirs(settings)
    cfg = _bk_config(settings)
    coords = [int(c) for c in settings["coords"].split(",")]
    i, j = coords[0], coords[-1]
    if settings["levels"]:
        report = qv_refinement_report(
            _generator(settings),
            i,
            j,
            _parse_levels(settings["levels"]),
            int(settings["ensemble"]),
            reference=settings["reference"],
            workers=int(settings["workers"]),
        )
        report.to_csv(str(results_dir / "qv_report.csv"))
        _write_meta(out, settings, "qv")
        return EXIT_OK
    path = _input_path(settings)
    res = quad_variation(path, i, j, cfg)
    write_path_csv(res.path, str(results_dir / "qv.csv"))
    _write_sidecar(results_dir / "qv.meta.json", res.metadata())
    _write_meta(out, settings, "qv")
    if cfg.strict and not res.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_ito_check(settings: dict) -> int:
    out, _, results_dir = _run_dirs(settings)
    cfg = _bk_config(settings)
    if not settings["functional"]:
        raise ConfigError("ito-check needs --functional")
    spec = _generator(settings)
    F = resolve_functional(settings["functional"], spec.dimension, cfg)
    if not F.has_bundle:
        raise ConfigError(f"functional {settings['functional']!r} has no analytic bundle")
    levels = _parse_levels(settings["levels"])
    report = residual_report(
        F,
        spec,
        levels,
        int(settings["ensemble"]),
        cfg,
        workers=int(settings["workers"]),
    )
    report.to_csv(str(results_dir / "report.csv"))
    pi = Partition.dyadic(spec.horizon, max(levels))
    ito_residual(F, generate(spec, 0), pi, cfg).to_csv(str(results_dir / "trace.csv"))
    _write_meta(out, settings, "ito-check")
    return EXIT_OK


def cmd_derive(settings: dict) -> int:
    out, _, results_dir = _run_dirs(settings)
    cfg = _bk_config(settings)
    if not settings["functional"]:
        raise ConfigError("derive needs --functional")
    path = _input_path(settings)
    F = resolve_functional(settings["functional"], path.dimension, cfg)
    if settings["times"]:
        times = [float(t) for t in settings["times"].split(",")]
    else:
        times = [0.25 * path.horizon, 0.5 * path.horizon, 0.75 * path.horizon]
    h = float(settings["step"])
    d = path.dimension
    cols = ["t", "d0_analytic", "d0_numeric", "d0_gap"]
    for k in range(d):
        cols += [f"grad{k}_analytic", f"grad{k}_numeric", f"grad{k}_gap"]
    for a in range(d):
        for b in range(d):
            cols += [f"hess{a}{b}_analytic", f"hess{a}{b}_numeric", f"hess{a}{b}_gap"]
    rows = []
    for t in times:
        bundle = F.bundle(t, path)
        nd0 = numeric_time_derivative(F, t, path)
        ngrad = numeric_gradient(F, t, path, h)
        nhess = numeric_hessian(F, t, path, h)
        row = [t, bundle.d0, nd0, bundle.d0 - nd0]
        for k in range(d):
            row += [bundle.grad[k], ngrad[k], bundle.grad[k] - ngrad[k]]
        for a in range(d):
            for b in range(d):
                row += [bundle.hess[a, b], nhess[a, b], bundle.hess[a, b] - nhess[a, b]]
        rows.append(row)
    with open(results_dir / "derive.csv", "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _write_meta(out, settings, "derive")
    return EXIT_OK


def cmd_regularity(settings: dict) -> int:
    out, _, results_dir = _run_dirs(settings)
    cfg = _bk_config(settings)
    if not settings["functional"]:
        raise ConfigError("regularity needs --functional")
    spec = _generator(settings)
    F = resolve_functional(settings["functional"], spec.dimension, cfg)
    report = regularity_report(
        F,
        spec,
        _parse_levels(settings["levels"]),
        int(settings["ensemble"]),
        workers=int(settings["workers"]),
    )
    report.to_csv(str(results_dir / "report.csv"))
    _write_meta(out, settings, "regularity")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "integrate": cmd_integrate,
    "qv": cmd_qv,
    "ito-check": cmd_ito_check,
    "derive": cmd_derive,
    "regularity": cmd_regularity,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathwise", description="pathwise stochastic calculus experiment runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default="", help="key = value config file with sections")
        p.add_argument("--out", required=True, help="output directory for this run")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--levels", default=None, help="comma-separated refinement levels")
        p.add_argument("--strict-bk", action="store_true", dest="strict_bk",
                       help="set-to-zero convention for non-convergent integrals")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--ensemble", type=int, default=None)
        p.add_argument("--kind", default=None, choices=("brownian", "ito_euler", "local_vol"))
        p.add_argument("--dimension", type=int, default=None)
        p.add_argument("--horizon", type=float, default=None)
        p.add_argument("--grid-level", type=int, default=None, dest="grid_level")
        p.add_argument("--drift", default=None)
        p.add_argument("--vol", default=None)
        p.add_argument("--bk-max-level", type=int, default=None, dest="bk_max_level")
        p.add_argument("--bk-tol", type=float, default=None, dest="bk_tol")
        p.add_argument("--functional", default=None)
        p.add_argument("--integrand", default=None)
        p.add_argument("--coords", default=None)
        p.add_argument("--times", default=None)
        p.add_argument("--step", type=float, default=None)
        p.add_argument("--input", default=None, help="input path CSV instead of a generator")
        p.add_argument("--reference", default=None, choices=("time", "realized"))
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        settings = _resolve_settings(args)
        settings["out"] = args.out
        return _COMMANDS[args.command](settings)
    except (ConfigError, KeyError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
