"""Command-line front end.

Every invocation is turned into an experiment spec (a plain dict, validated
against :data:`SPEC_SCHEMA`) and handed to :func:`run_command`. A spec can
come from flags, from ``--config file.json``, or both (flags win).

Exit status: 0 when every bound verdict is ``holds``, 1 when one is
violated (or inconclusive without ``--allow-inconclusive``), 2 when the
spec does not validate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from . import __version__
from .bounds import BoundReport, PathSpec, SweepRow, thm1_grid_sweep, thm1_verify, thm2_js_bound
from .channels import channel_from_dict
from .distributed import (
    CSV_COLUMNS,
    awgn_tightness_experiment,
    results_csv,
    simulate_awgn_averaging,
)
from .errors import FisherBoundError, ValidationError
from .info import capacity_blahut_arimoto
from .models import model_from_dict

COMMANDS = ("verify-fisher-bound", "capacity", "js-bound", "simulate-distributed", "tightness", "report")
MC_COMMANDS = frozenset(COMMANDS) - {"capacity"}
SWEEP_COLUMNS = ("name", "param1", "param2", "lhs", "rhs", "slack", "verdict")
CSV_DIGITS = 12

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PMF = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2}
_THETA = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["family"],
    "oneOf": [
        {
            "properties": {
                "family": {"const": "gaussian_location"},
                "sigma": _POS,
                "dim": {"type": "integer", "minimum": 1},
                "box": _POS,
            },
            "additionalProperties": False,
        },
        {"properties": {"family": {"const": "bernoulli"}}, "additionalProperties": False},
        {
            "properties": {"family": {"const": "twist"}, "f0": _PMF, "f1": _PMF},
            "required": ["f0", "f1"],
            "additionalProperties": False,
        },
    ],
}

CHANNEL_SCHEMA = {
    "type": "object",
    "required": ["channel"],
    "oneOf": [
        {
            "properties": {"channel": {"const": "awgn"}, "sigma_noise": {"type": "number", "minimum": 0},
                           "dim": {"type": "integer", "minimum": 1}},
            "required": ["sigma_noise"],
            "additionalProperties": False,
        },
        {
            "properties": {"channel": {"const": "bsc"}, "p": {"type": "number", "minimum": 0, "maximum": 1}},
            "required": ["p"],
            "additionalProperties": False,
        },
        {
            "properties": {"channel": {"const": "bec"}, "erasure": {"type": "number", "minimum": 0, "maximum": 1}},
            "required": ["erasure"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "channel": {"const": "quantizer"},
                "bits": {"type": "integer", "minimum": 1, "maximum": 16},
                "range": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "dither": {"type": "boolean"},
            },
            "required": ["bits"],
            "additionalProperties": False,
        },
        {
            "properties": {"channel": {"const": "rr"}, "epsilon": _POS},
            "required": ["epsilon"],
            "additionalProperties": False,
        },
        {
            "properties": {"channel": {"const": "matrix"},
                           "rows": {"type": "array", "items": _PMF, "minItems": 1}},
            "required": ["rows"],
            "additionalProperties": False,
        },
        {
            "properties": {"channel": {"const": "identity"}, "size": {"type": "integer", "minimum": 1}},
            "required": ["size"],
            "additionalProperties": False,
        },
    ],
}

SPEC_SCHEMA = {
    "type": "object",
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "model": MODEL_SCHEMA,
        "channel": CHANNEL_SCHEMA,
        "theta": _THETA,
        "theta0": _THETA,
        "theta1": _THETA,
        "n": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 100},
        "samples": {"type": "integer", "minimum": 1},
        "nodes": {"type": "integer", "minimum": 1},
        "sigma": _POS,
        "sigma_noise": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "mi_method": {"enum": ["auto", "exact", "mc"]},
        "tol": _POS,
        "format": {"enum": ["json", "csv"]},
        "output": {"type": "string"},
        "allow_inconclusive": {"type": "boolean"},
    },
    "additionalProperties": False,
}


_REPORT = {
    "type": "object",
    "required": ["name", "lhs", "rhs", "slack", "verdict", "uncertainty", "components"],
    "properties": {
        "name": {"type": "string"},
        "lhs": _NUM,
        "rhs": _NUM,
        "slack": _NUM,
        "verdict": {"enum": ["holds", "violated", "inconclusive"]},
        "uncertainty": {"type": "number", "minimum": 0},
        "components": {"type": "object"},
    },
}
_ROW = {
    "type": "object",
    "required": list(SWEEP_COLUMNS),
    "properties": {"verdict": {"enum": ["holds", "violated", "inconclusive"]}},
}
_ESTIMATION = {
    "type": "object",
    "required": ["estimator", "n_trials", "empirical_mse", "mse_std_error", "ci", "lower_bound",
                 "total_mi_nats", "tightness_ratio"],
    "properties": {"n_trials": {"type": "integer", "minimum": 100}, "empirical_mse": {"type": "number", "minimum": 0}},
}
OUTPUT_SCHEMAS = {
    "verify-fisher-bound": _REPORT,
    "js-bound": _REPORT,
    "report": {"type": "array", "items": _ROW},
    "capacity": {
        "type": "object",
        "required": ["quantity", "value_nats", "input_pmf", "gap", "iterations"],
        "properties": {"value_nats": {"type": "number", "minimum": 0}, "input_pmf": _PMF},
    },
    "simulate-distributed": _ESTIMATION,
    "tightness": {
        "type": "object",
        "required": ["sigma", "sigma_noise", "n", "lower_bound", "closed_form_mse", "ratio_closed_form",
                     "ratio_empirical", "result"],
        "properties": {"result": _ESTIMATION},
    },
}


def validate_output(command: str, payload) -> None:
    """Check a JSON artifact against the schema of the command that wrote it."""
    try:
        jsonschema.validate(payload, OUTPUT_SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"{command} output at {_path(exc)}: {exc.message}") from exc


class SpecError(FisherBoundError, ValueError):
    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


def _path(err: jsonschema.ValidationError) -> str:
    parts = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return "$" + parts


def _narrow(err: jsonschema.ValidationError) -> tuple[str, str]:
    # a oneOf over tagged objects: report the failure inside the branch whose
    # tag matched, or a bad-tag error when none did
    if err.validator != "oneOf" or not err.context:
        return err.message, _path(err)
    branches: dict[int, list] = {}
    for sub in err.context:
        branches.setdefault(sub.relative_schema_path[0], []).append(sub)
    tagged = [errs for errs in branches.values() if not any(e.validator == "const" for e in errs)]
    if len(tagged) == 1:
        sub = max(tagged[0], key=lambda e: len(e.absolute_path))
        return _narrow(sub)
    tag = next(e for e in err.context if e.validator == "const")
    expected = sorted({e.validator_value for e in err.context if e.validator == "const"})
    return f"{tag.instance!r} is not one of {expected}", _path(tag)


def validate_spec(spec: dict) -> dict:
    validator = jsonschema.Draft202012Validator(SPEC_SCHEMA)
    errors = sorted(validator.iter_errors(spec), key=lambda e: (len(list(e.absolute_path)), str(e.absolute_path)))
    if errors:
        message, path = _narrow(errors[0])
        raise SpecError(message, path)
    cmd = spec["command"]
    if cmd in MC_COMMANDS and "seed" not in spec:
        raise SpecError(f"'seed' is required for {cmd}", "$.seed")
    needs = {
        "verify-fisher-bound": ("model", "channel", "theta"),
        "capacity": ("channel",),
        "js-bound": ("model", "channel", "theta0", "theta1"),
        "simulate-distributed": ("sigma", "sigma_noise", "n"),
        "tightness": ("sigma", "sigma_noise", "n"),
        "report": (),
    }[cmd]
    for key in needs:
        if key not in spec:
            raise SpecError(f"'{key}' is required for {cmd}", f"$.{key}")
    return spec


# -- shorthand parsing -----------------------------------------------------------------


def parse_channel(text: str) -> dict:
    """``bsc:0.25``, ``bec:0.3``, ``awgn:1``, ``rr:1``, ``identity:2``,
    ``quantizer:BITS[:LOW:HIGH[:dither]]``."""
    head, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    try:
        if head == "bsc":
            return {"channel": "bsc", "p": float(args[0])}
        if head == "bec":
            return {"channel": "bec", "erasure": float(args[0])}
        if head == "awgn":
            return {"channel": "awgn", "sigma_noise": float(args[0])}
        if head == "rr":
            return {"channel": "rr", "epsilon": float(args[0])}
        if head == "identity":
            return {"channel": "identity", "size": int(args[0])}
        if head == "quantizer":
            out = {"channel": "quantizer", "bits": int(args[0])}
            if len(args) >= 3:
                out["range"] = [float(args[1]), float(args[2])]
            if len(args) >= 4:
                out["dither"] = args[3] in ("dither", "1", "true")
            return out
    except (IndexError, ValueError) as exc:
        raise SpecError(f"cannot parse channel {text!r}: {exc}", "$.channel") from exc
    raise SpecError(f"unknown channel {head!r}", "$.channel.channel")


def parse_model(name: str, sigma: float | None, dim: int | None) -> dict:
    if name in ("gaussian", "gaussian_location"):
        out = {"family": "gaussian_location", "sigma": 1.0 if sigma is None else sigma, "dim": dim or 1}
        return out
    if name == "bernoulli":
        return {"family": "bernoulli"}
    if name.startswith("twist:"):
        _, f0, f1 = name.split(":")
        return {"family": "twist", "f0": [float(v) for v in f0.split(",")],
                "f1": [float(v) for v in f1.split(",")]}
    raise SpecError(f"unknown model {name!r}", "$.model.family")


def parse_theta(text: str):
    vals = [float(v) for v in text.split(",")]
    return vals[0] if len(vals) == 1 else vals


# -- output helpers ----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{CSV_DIGITS}g}"
    return str(v)


def emit_plot_data(rows: Iterable[dict], columns: Sequence[str] = SWEEP_COLUMNS) -> str:
    """CSV with one row per grid point and a fixed column order."""
    rows = list(rows)
    cols = tuple(rows[0].keys()) if rows and columns is None else tuple(columns)
    for k, row in enumerate(rows):
        if tuple(row.keys()) != cols:
            raise ValidationError(f"row {k} has columns {tuple(row.keys())}, expected {cols}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(f"not serializable: {type(o).__name__}")

    return json.dumps(obj, default=default, indent=2, sort_keys=False, allow_nan=True)


# -- command execution -------------------------------------------------------------------


def _pipeline(spec):
    model = model_from_dict(spec["model"])
    desc = dict(spec["channel"])
    # AWGN acts per coordinate: default its dimension to the model's
    if desc["channel"] == "awgn" and "dim" not in desc:
        desc["dim"] = model.dim
    return model, channel_from_dict(desc)


def _theta(spec, key):
    return np.atleast_1d(np.asarray(spec[key], dtype=float))


def _reports_status(reports: list[BoundReport], allow_inconclusive: bool) -> tuple[int, list[BoundReport]]:
    bad = [r for r in reports if r.verdict == "violated"]
    if bad:
        return 1, bad
    unsure = [r for r in reports if r.verdict == "inconclusive"]
    if unsure and not allow_inconclusive:
        return 1, unsure
    return 0, unsure


def run_command(spec: dict) -> tuple[int, dict, str]:
    """Execute a validated spec.

    Returns ``(exit_code, summary, artifact)`` where ``artifact`` is the
    JSON or CSV text to write and ``summary`` is the machine-readable
    status for standard output.
    """
    spec = validate_spec(dict(spec))
    cmd = spec["command"]
    fmt = spec.get("format", "json")
    seed = spec.get("seed", 0)
    allow = spec.get("allow_inconclusive", False)
    summary: dict = {"command": cmd}

    if cmd == "capacity":
        ch = channel_from_dict(spec["channel"])
        res = capacity_blahut_arimoto(ch, tol=spec.get("tol", 1e-12))
        payload = res.to_dict()
        summary.update(status="ok", capacity_nats=res.capacity)
        artifact = _json(payload) if fmt == "json" else emit_plot_data(
            [{"quantity": "capacity", "value_nats": res.capacity, "gap": res.gap}],
            ("quantity", "value_nats", "gap"))
        return 0, summary, artifact

    if cmd in ("verify-fisher-bound", "js-bound", "report"):
        if cmd == "verify-fisher-bound":
            model, ch = _pipeline(spec)
            rows = [SweepRow("fisher_mi_bound", float(_theta(spec, "theta")[0]), math.nan,
                             thm1_verify(model, ch, _theta(spec, "theta"), spec.get("mi_method", "auto"),
                                         spec.get("samples", 1_000_000), seed))]
        elif cmd == "js-bound":
            model, ch = _pipeline(spec)
            path = PathSpec.gauss_legendre(_theta(spec, "theta0"), _theta(spec, "theta1"), spec.get("nodes", 16))
            rep = thm2_js_bound(model, ch, spec.get("n", 1), path, None, spec.get("mi_method", "auto"),
                                spec.get("samples", 1_000_000), seed)
            rows = [SweepRow("js_path_bound", float(path.theta0[0]), float(path.theta1[0]), rep)]
        else:
            rows = thm1_grid_sweep(spec.get("samples", 1_000_000), seed)
        reports = [r.report for r in rows]
        code, flagged = _reports_status(reports, allow)
        summary.update(
            status="ok" if code == 0 else "bound-failure",
            verdicts={v: sum(r.verdict == v for r in reports) for v in ("holds", "violated", "inconclusive")},
        )
        if flagged:
            summary["flagged"] = [r.to_dict() for r in flagged]
        if fmt == "csv":
            artifact = emit_plot_data([r.as_row() for r in rows])
        elif len(reports) == 1:
            artifact = _json(reports[0].to_dict())
        else:
            artifact = _json([dict(r.as_row(), components=r.report.to_dict()["components"]) for r in rows])
        return code, summary, artifact

    sigma, sigma_noise, n = float(spec["sigma"]), float(spec["sigma_noise"]), int(spec["n"])
    trials = spec.get("trials", 100_000)
    if cmd == "simulate-distributed":
        res = simulate_awgn_averaging(sigma, sigma_noise, n, float(spec.get("theta", 0.0)), trials, seed)
        rep = BoundReport("van_trees_lower_bound", res.lower_bound, res.empirical_mse, res.mse_std_error,
                          {"total_mi_nats": res.total_mi})
        code, flagged = _reports_status([rep], allow)
        summary.update(status="ok" if code == 0 else "bound-failure", lower_bound=res.lower_bound,
                       empirical_mse=res.empirical_mse, verdict=rep.verdict)
        artifact = _json(res.to_dict()) if fmt == "json" else emit_plot_data(
            [_estimation_row("simulate", sigma, sigma_noise, n, res)], CSV_COLUMNS)
        return code, summary, artifact

    # tightness
    tr = awgn_tightness_experiment(sigma, sigma_noise, n, trials, seed, float(spec.get("theta", 0.0)))
    rep = BoundReport("van_trees_lower_bound", tr.lower_bound, tr.result.empirical_mse, tr.result.mse_std_error)
    code, _ = _reports_status([rep], allow)
    summary.update(status="ok" if code == 0 else "bound-failure", ratio_empirical=tr.ratio_empirical,
                   ratio_closed_form=tr.ratio_closed_form, verdict=rep.verdict)
    artifact = _json(tr.to_dict()) if fmt == "json" else results_csv([("tightness", tr)])
    return code, summary, artifact


def _estimation_row(group, sigma, sigma_noise, n, res) -> dict:
    return {
        "trial_group": group,
        "n": n,
        "sigma": sigma,
        "sigma_noise": sigma_noise,
        "mi_total_nats": res.total_mi,
        "lower_bound": res.lower_bound,
        "empirical_mse": res.empirical_mse,
        "ci": res.ci,
        "ratio": res.tightness_ratio,
    }


# -- argument parsing ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fisherbound", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", dest="top_config", type=Path, help="run the JSON experiment spec as-is")
    sub = p.add_subparsers(dest="command")

    def common(sp, mc=True):
        sp.add_argument("--config", type=Path, help="JSON experiment spec; flags override its fields")
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--output", "-o", help="write the artifact here instead of standard output")
        if mc:
            sp.add_argument("--seed", type=int)
            sp.add_argument("--allow-inconclusive", action="store_true", default=None)

    def model_args(sp):
        sp.add_argument("--model", help="bernoulli | gaussian | twist:F0:F1 (comma-separated pmfs)")
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--dim", type=int)
        sp.add_argument("--channel", help="bsc:P | bec:E | awgn:S | rr:EPS | identity:K | quantizer:BITS[:LO:HI[:dither]]")
        sp.add_argument("--mi-method", choices=("auto", "exact", "mc"))
        sp.add_argument("--samples", type=int)

    sp = sub.add_parser("verify-fisher-bound", help="check Tr I_Y <= 2 N^2 I(X;Y) at one theta")
    model_args(sp)
    sp.add_argument("--theta", type=parse_theta)
    common(sp)

    sp = sub.add_parser("capacity", help="Blahut-Arimoto capacity of a discrete channel")
    sp.add_argument("--channel")
    sp.add_argument("--tol", type=float)
    common(sp, mc=False)

    sp = sub.add_parser("js-bound", help="JS divergence along a segment vs. the path-integrated information")
    model_args(sp)
    sp.add_argument("--theta0", type=parse_theta)
    sp.add_argument("--theta1", type=parse_theta)
    sp.add_argument("--n", type=int)
    sp.add_argument("--nodes", type=int)
    common(sp)

    for name, helptext in (("simulate-distributed", "averaging estimator over n AWGN links"),
                           ("tightness", "lower bound / MSE ratio for the AWGN example")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--sigma-noise", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--trials", type=int)
        common(sp)

    sp = sub.add_parser("report", help="full single-letter bound sweep as plot-ready CSV/JSON")
    sp.add_argument("--samples", type=int)
    common(sp)
    return p


def spec_from_args(args: argparse.Namespace) -> dict:
    spec: dict = {}
    config = getattr(args, "config", None) or getattr(args, "top_config", None)
    if config is not None:
        try:
            spec = json.loads(Path(config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read config: {exc}", "$") from exc
        if not isinstance(spec, dict):
            raise SpecError("config must be a JSON object", "$")
    if args.command:
        if spec.get("command", args.command) != args.command:
            raise SpecError(f"config is for {spec['command']!r}, not {args.command!r}", "$.command")
        spec["command"] = args.command
    model_name = getattr(args, "model", None)
    if model_name is not None:
        spec["model"] = parse_model(model_name, args.sigma, args.dim)
    elif spec.get("command") in ("verify-fisher-bound", "js-bound") and "model" in spec:
        m = spec["model"]
        if getattr(args, "sigma", None) is not None and m.get("family") == "gaussian_location":
            m["sigma"] = args.sigma
    if getattr(args, "channel", None) is not None:
        spec["channel"] = parse_channel(args.channel)
    direct = {
        "theta": "theta", "theta0": "theta0", "theta1": "theta1", "n": "n", "nodes": "nodes",
        "trials": "trials", "samples": "samples", "seed": "seed", "mi_method": "mi_method",
        "format": "format", "output": "output", "allow_inconclusive": "allow_inconclusive",
        "sigma_noise": "sigma_noise", "tol": "tol",
    }
    for attr, key in direct.items():
        val = getattr(args, attr, None)
        if val is not None:
            spec[key] = val
    if spec.get("command") in ("simulate-distributed", "tightness") and getattr(args, "sigma", None) is not None:
        spec["sigma"] = args.sigma
    return spec


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command and args.top_config is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        spec = spec_from_args(args)
        code, summary, artifact = run_command(spec)
    except SpecError as exc:
        print(json.dumps({"status": "invalid-spec", "path": exc.path, "error": str(exc)}), file=sys.stderr)
        return 2
    except FisherBoundError as exc:
        print(json.dumps({"status": "invalid-spec", "path": "$", "error": str(exc)}), file=sys.stderr)
        return 2
    out = spec.get("output")
    if out:
        Path(out).write_text(artifact)
        summary["output"] = out
        print(_json(summary))
    else:
        sys.stdout.write(artifact if artifact.endswith("\n") else artifact + "\n")
        if summary.get("flagged") or code:
            print(_json(summary), file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
