"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .circular import VonMisesParams, WrappedNormalParams
from .errors import CircPceError
from .expansion import fit_pce, total_degree_set
from .experiments import RUNNERS, ConfigError, build_config
from .opuc import NormalizedHermite, NumericOpuc, RogersSzego
from .serialize import load_surrogate, save_surrogate
from .sr import SrOptions, SrSurrogate, fit_sr

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            out[key.replace("-", "_")] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.replace("-", "_")] = raw
    return out


def _load_json(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _experiment_args(p: argparse.ArgumentParser, stochastic: bool):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output", help="output directory (or file for sample)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field (JSON value)")
    if stochastic:
        p.add_argument("--seed", type=int, help="64-bit seed (required)")
        p.add_argument("--n-mc", type=int, dest="n_mc", help="Monte Carlo sample count")


def _basis_from_spec(spec: str, degree: int):
    """'hermite:loc=0,scale=1' | 'rs:mu=0,sigma2=0.5' | 'vmd:mu=0,kappa=5'."""
    kind, _, rest = spec.partition(":")
    params = {}
    for part in filter(None, rest.split(",")):
        k, _, v = part.partition("=")
        params[k.strip()] = float(v)
    try:
        if kind == "hermite":
            return NormalizedHermite(params.get("loc", 0.0), params.get("scale", 1.0), degree)
        if kind in ("rs", "wnd"):
            return RogersSzego.from_density(WrappedNormalParams(params.get("mu", 0.0), params["sigma2"]), degree)
        if kind == "vmd":
            return NumericOpuc.from_density(VonMisesParams(params.get("mu", 0.0), params["kappa"]), degree)
    except KeyError as exc:
        raise ConfigError(f"basis spec {spec!r} is missing {exc}") from exc
    raise ConfigError(f"unknown basis kind {kind!r}")


def _read_columns(path) -> dict:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        names = reader.fieldnames or []
    return {n: np.array([float(r[n]) for r in rows]) for n in names}


def _column(cols: dict, name: str) -> np.ndarray:
    if name in cols:
        return cols[name]
    if f"{name}_re" in cols:
        return cols[f"{name}_re"] + 1j * cols.get(f"{name}_im", 0.0)
    raise ConfigError(f"column {name!r} not found (have {', '.join(cols)})")


def cmd_experiment(name: str, args) -> int:
    data = _load_json(args.config)
    if "experiment" in data and data["experiment"] != name:
        raise ConfigError(f"config is for {data['experiment']!r}, not {name!r}")
    overrides = _parse_set(args.set)
    for key in ("seed", "n_mc", "output", "case"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    cfg = build_config(name, data, overrides)
    result = RUNNERS[name](cfg)
    if name == "sample":
        out = Path(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        result.tables["samples"].write_csv(out)
        out.with_suffix(out.suffix + ".meta.json").write_text(json.dumps(result.metadata(), indent=1, sort_keys=True))
        print(out)
    else:
        print(result.write(cfg.output))
    failed = [k for k, v in result.checks.items() if not v]
    for key, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {key}")
    if failed:
        logging.getLogger(__name__).warning("cross-checks failed: %s", ", ".join(failed))
    return EXIT_OK


def cmd_fit(args) -> int:
    cols = _read_columns(args.samples)
    inputs = args.inputs.split(",")
    if len(args.basis) != len(inputs):
        raise ConfigError("give one --basis per input column")
    xi = np.column_stack([_column(cols, c).real for c in inputs])
    u = np.column_stack([_column(cols, q) for q in args.qoi.split(",")])
    bases = tuple(_basis_from_spec(s, args.p) for s in args.basis)
    if args.method == "pce":
        sur = fit_pce(xi, u, bases, total_degree_set(args.p, len(bases)))
        sur.qoi_names = args.qoi.split(",")
    else:
        if args.seed is None:
            raise ConfigError("--seed is required for sr fits")
        if u.shape[1] != 1:
            raise ConfigError("sr fits take exactly one QOI")
        sur = fit_sr(xi, u[:, 0], bases, args.rank, args.p, SrOptions(seed=args.seed))
    save_surrogate(sur, args.output)
    print(args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    sur = load_surrogate(args.surrogate)
    cols = _read_columns(args.inputs)
    xi = np.column_stack([_column(cols, c).real for c in args.columns.split(",")])
    vals = sur(xi)
    vals = np.asarray(vals).reshape(xi.shape[0], -1)
    if isinstance(sur, SrSurrogate):
        names = ["u"]
    else:
        names = sur.qoi_names or [f"u{j}" for j in range(vals.shape[1])]
    out = Path(args.output)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{n}_{part}" for n in names for part in ("re", "im")])
        for row in vals:
            w.writerow([repr(float(x)) for v in row for x in (v.real, v.imag)])
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circpce", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("opuc-check", help="orthogonality error of numeric OPUC for von Mises densities")
    _experiment_args(p, stochastic=False)
    p = sub.add_parser("decay", help="intrusive PCE convergence for the random decay ODE")
    _experiment_args(p, stochastic=False)

    orbit = sub.add_parser("orbit", help="orbit uncertainty propagation cases")
    osub = orbit.add_subparsers(dest="case_name", required=True)
    for name, helptext in (("lambda-only", "two-body, uncertain a and lambda"),
                           ("sma-only", "J2, uncertain lambda, QOI a"),
                           ("full", "J2, all six elements uncertain")):
        op = osub.add_parser(name, help=helptext)
        _experiment_args(op, stochastic=True)
        if name == "full":
            op.add_argument("--case", choices=["A", "B", "all"])

    p = sub.add_parser("sample", help="draw samples from a wrapped normal or von Mises density")
    _experiment_args(p, stochastic=True)

    p = sub.add_parser("fit", help="fit a surrogate to a CSV sample file")
    p.add_argument("--samples", required=True)
    p.add_argument("--inputs", required=True, help="comma-separated input column names")
    p.add_argument("--qoi", required=True, help="comma-separated QOI names (name or name_re/name_im columns)")
    p.add_argument("--basis", action="append", required=True,
                   help="per-input basis: hermite:loc=..,scale=.. | rs:mu=..,sigma2=.. | vmd:mu=..,kappa=..")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--method", choices=["pce", "sr"], default="pce")
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", required=True)

    p = sub.add_parser("eval", help="evaluate a stored surrogate at inputs from a CSV file")
    p.add_argument("--surrogate", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--columns", required=True, help="comma-separated input column names")
    p.add_argument("--output", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "orbit":
            return cmd_experiment(f"orbit-{args.case_name}", args)
        if args.command in ("opuc-check", "decay", "sample"):
            return cmd_experiment(args.command, args)
        if args.command == "fit":
            return cmd_fit(args)
        if args.command == "eval":
            return cmd_eval(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CircPceError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error("unknown command")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
