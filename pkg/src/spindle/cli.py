"""Command line entry point: ``spindle <subcommand> [flags]``.

Every run writes ``manifest.json`` into ``--out`` holding the resolved
configuration; passing that file back via ``--config`` reproduces the run.
Exit codes: 0 success, 2 invalid configuration, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .caps import cap_from_normal_height, lemma1_variance
from .errors import ConfigError, HeightOutOfRange, InvalidModel, RadiusNotAdmissible, SpindleError
from .experiment import (ExperimentConfig, _csv_text, estimate_moments, fit_moments, moments_csv,
                         read_moments_csv, records_csv, run_experiment)
from .geom import arc_polygon_area
from .hull import hull_fast, summarize
from .rng import Rng
from .shapes import model_from_spec, sample_uniform
from .theory import limit_constants

log = logging.getLogger("spindle")

SUBCOMMANDS = ("simulate", "hull", "cap", "lemma1", "constants", "fit")

# resolved keys per subcommand, with defaults (None means required)
_DEFAULTS = {
    "simulate": {"model": "circle", "r": None, "n": None, "reps": 100, "seed": 0, "workers": None},
    "hull": {"model": None, "r": None, "n": None, "seed": 0, "input": None},
    "cap": {"model": "circle", "r": None, "theta": [0.0], "t_grid": None},
    "lemma1": {"model": "ellipse", "r": 1.0, "theta": [0.0], "t_grid": None, "samples": 100000,
               "seed": 0},
    "constants": {"model": "circle", "r": None},
    "fit": {"input": None, "column": "var_f0", "weighted": False},
}
_MODEL_PARAMS = {"circle": ("rho",), "ellipse": ("a", "b")}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spindle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config or manifest of an earlier run")
        p.add_argument("--out", type=Path, help="output directory (default: current directory)")
        if name != "fit":
            p.add_argument("--model")
            p.add_argument("--rho", type=float)
            p.add_argument("--a", type=float)
            p.add_argument("--b", type=float)
            p.add_argument("--r", type=float)
        if name in ("simulate", "hull"):
            p.add_argument("--n", type=_ints, help="comma separated sample sizes")
            p.add_argument("--seed", type=int)
        if name == "simulate":
            p.add_argument("--reps", type=int)
            p.add_argument("--workers", type=int)
        if name in ("cap", "lemma1"):
            p.add_argument("--theta", type=_floats, help="comma separated boundary parameters")
            p.add_argument("--t-grid", dest="t_grid", type=_floats, help="comma separated heights")
        if name == "lemma1":
            p.add_argument("--samples", type=int)
            p.add_argument("--seed", type=int)
        if name in ("hull", "fit"):
            p.add_argument("--input", type=Path, help="CSV input file")
        if name == "fit":
            p.add_argument("--column")
            p.add_argument("--weighted", action="store_true", default=None)
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return dict(data.get("config", data))


def resolve(args: argparse.Namespace) -> dict:
    """Config file values overridden by flags, with defaults filled in."""
    defaults = _DEFAULTS[args.subcommand]
    file_cfg = _load_config(args.config)
    model_file = file_cfg.pop("model", None)
    unknown = set(file_cfg) - set(defaults) - {"out"}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = {**defaults, **file_cfg}
    flags = vars(args)
    for key in defaults:
        if key != "model" and flags.get(key) is not None:
            cfg[key] = flags[key]
    if "model" in defaults:
        cfg["model"] = _resolve_model(defaults["model"], model_file, flags)
    optional = {"input", "workers"} | ({"n", "model"} if cfg.get("input") else set())
    missing = [k for k, v in cfg.items() if v is None and k not in optional]
    if missing:
        raise ConfigError(f"missing required settings: {', '.join('--' + m.replace('_', '-') for m in missing)}")
    if cfg.get("workers", 1) is None:
        cfg["workers"] = os.cpu_count() or 1
    if "input" in cfg and cfg["input"] is not None:
        cfg["input"] = str(cfg["input"])
    cfg["out"] = str(flags.get("out") or file_cfg.get("out") or ".")
    return cfg


def _resolve_model(default, from_file, flags) -> dict | None:
    spec = dict(from_file) if isinstance(from_file, dict) else ({"kind": from_file} if from_file else {})
    if flags.get("model"):
        if flags["model"] != spec.get("kind"):
            spec = {}
        spec["kind"] = flags["model"]
    if "kind" not in spec:
        if default is None:
            return None
        spec["kind"] = default
    for key in _MODEL_PARAMS.get(spec["kind"], ("rho", "a", "b")):
        if flags.get(key) is not None:
            spec[key] = flags[key]
    return spec


def _write(out: Path, name: str, text: str) -> None:
    (out / name).write_text(text, encoding="utf-8", newline="\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _admissible_model(cfg: dict):
    model = model_from_spec(cfg["model"])
    if cfg["r"] < model.r_M:
        raise ConfigError(f"r <= r_M violated: r={cfg['r']!r} is below r_M={model.r_M!r}")
    return model


def _read_points(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
        header = any(c.isalpha() and c not in "eE" for c in first)
        data = np.loadtxt(path, delimiter=",", skiprows=int(header), ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read points from {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise ConfigError("points CSV must have exactly two columns x,y")
    return data


# subcommands --------------------------------------------------------------

def cmd_simulate(cfg: dict, out: Path) -> None:
    exp = ExperimentConfig(cfg["model"], cfg["r"], tuple(cfg["n"]), cfg["reps"], cfg["seed"],
                           cfg["workers"])
    exp.validate()
    if exp.reps < 2:
        raise ConfigError("reps must be at least 2 to estimate moments")
    incidents: list = []
    try:
        records = run_experiment(exp, incidents)
    finally:
        if incidents:
            _write(out, "incidents.jsonl", "".join(json.dumps(i, sort_keys=True) + "\n" for i in incidents))
    _write(out, "records.csv", records_csv(records))
    _write(out, "moments.csv", moments_csv(estimate_moments(records)))


def cmd_hull(cfg: dict, out: Path) -> None:
    model = model_from_spec(cfg["model"]) if cfg["model"] else None
    if cfg["input"]:
        points = _read_points(cfg["input"])
    else:
        if model is None or len(cfg["n"]) != 1:
            raise ConfigError("hull needs --input, or --model with a single --n")
        points = sample_uniform(model, Rng(cfg["seed"]), cfg["n"][0])
    poly = hull_fast(points, cfg["r"])
    _write(out, "vertices.csv", _csv_text(("x", "y"), poly.vertices.tolist()))
    summary = {"f0": poly.f0, "hull_area": arc_polygon_area(poly), "missed_area": None,
               "edge_count": poly.edge_count}
    if model is not None:
        summary = summarize(model, poly).to_dict()
    _write(out, "summary.json", _json(summary))


def cmd_cap(cfg: dict, out: Path) -> None:
    model = model_from_spec(cfg["model"])
    rows = []
    for theta in cfg["theta"]:
        for t in cfg["t_grid"]:
            cap = cap_from_normal_height(model, theta, t, cfg["r"])
            rows.append((float(theta), float(t), cap.area, cap.arc_length))
    _write(out, "caps.csv", _csv_text(("theta", "t", "area", "arc_length"), rows))


def cmd_lemma1(cfg: dict, out: Path) -> None:
    model = model_from_spec(cfg["model"])
    if len(cfg["theta"]) != 1:
        raise ConfigError("lemma1 takes a single --theta")
    rows = []
    for k, t in enumerate(cfg["t_grid"]):
        var, se = lemma1_variance(model, cfg["theta"][0], t, cfg["samples"], Rng(cfg["seed"], k),
                                  cfg["r"], return_se=True)
        rows.append((float(t), var, se))
    _write(out, "lemma1.csv", _csv_text(("t", "var_ahat", "se"), rows))


def cmd_constants(cfg: dict, out: Path) -> None:
    model = _admissible_model(cfg)
    text = _json(limit_constants(model, cfg["r"], strict=False).to_dict())
    _write(out, "constants.json", text)
    sys.stdout.write(text)


def cmd_fit(cfg: dict, out: Path) -> None:
    try:
        moments = read_moments_csv(Path(cfg["input"]).read_text(encoding="utf-8"))
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read moments from {cfg['input']}: {exc}") from exc
    if not moments or not hasattr(moments[0], cfg["column"]) or cfg["column"] in ("n", "M"):
        raise ConfigError(f"unknown column {cfg['column']!r}")
    fit = fit_moments(moments, cfg["column"], weighted=bool(cfg["weighted"]))
    text = _json(fit.to_dict())
    _write(out, "fit.json", text)
    sys.stdout.write(text)


_COMMANDS = {"simulate": cmd_simulate, "hull": cmd_hull, "cap": cmd_cap, "lemma1": cmd_lemma1,
             "constants": cmd_constants, "fit": cmd_fit}


def run(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("SPINDLE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        if cfg.get("model") is not None:
            model_from_spec(cfg["model"])
        if cfg.get("r") is not None and not cfg["r"] > 0:
            raise ConfigError(f"r must be positive, got {cfg['r']!r}")
        if args.subcommand == "simulate":
            ExperimentConfig(cfg["model"], cfg["r"], tuple(cfg["n"]), cfg["reps"], cfg["seed"],
                             cfg["workers"]).validate()
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        manifest = {"subcommand": args.subcommand, "version": __version__,
                    "config": {k: v for k, v in cfg.items() if k != "workers"}}
        _write(out, "manifest.json", _json(manifest))
        _COMMANDS[args.subcommand](cfg, out)
    except Exception as exc:  # noqa: BLE001 - report, never traceback
        log.debug("failure", exc_info=True)
        print(f"spindle {args.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if _is_config_error(exc) else 1
    return 0


def _is_config_error(exc: Exception) -> bool:
    if isinstance(exc, (ConfigError, InvalidModel, RadiusNotAdmissible, HeightOutOfRange)):
        return True
    # plain ValueErrors come from argument checks, not from the computation
    return isinstance(exc, ValueError) and not isinstance(exc, SpindleError)


def main() -> None:
    sys.exit(run())
