"""Command-line front end.

Every subcommand prints one table, as CSV (default) or as a JSON list of row
objects whose keys equal the CSV header.  Floats are written as the shortest
decimal string that round-trips (Python ``repr``), so identical invocations
produce byte-identical output.

Exit status: 0 success, 2 usage/parse error, 3 domain error, 4 I/O error.
Errors are reported on stderr as a single JSON line ``{"error": kind, "message": ...}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Sequence
from typing import Any, TextIO

import numpy as np

from . import criticality, ensembles, estimation, fisher, spectra, thermo
from .errors import GibbsFisherError

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse's own exit path, made single-line
        raise UsageError(message)


def parse_grid(text: str) -> np.ndarray:
    """``min:max:count[:lin|log]`` or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            values = np.array([float(parts[0])])
        elif len(parts) in (3, 4):
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            spacing = parts[3] if len(parts) == 4 else "lin"
            if count < 1:
                raise UsageError(f"grid count must be >= 1 in {text!r}")
            if count > 1 and not lo < hi:
                raise UsageError(f"grid needs min < max in {text!r}")
            if spacing == "log":
                if lo <= 0:
                    raise UsageError(f"log grid needs a positive minimum in {text!r}")
                values = np.geomspace(lo, hi, count) if count > 1 else np.array([lo])
            elif spacing in ("lin", "linear"):
                values = np.linspace(lo, hi, count) if count > 1 else np.array([lo])
            else:
                raise UsageError(f"unknown grid spacing {spacing!r}")
        else:
            raise UsageError(f"cannot parse grid {text!r}")
    except ValueError as exc:
        raise UsageError(f"cannot parse grid {text!r}: {exc}") from exc
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise UsageError(f"grid values must be positive and finite in {text!r}")
    return values


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _read_json(path: str) -> Any:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _model(args: argparse.Namespace) -> spectra.ThermalModel:
    if args.model_file:
        return spectra.build_model(_read_json(args.model_file))
    if args.model is None:
        raise UsageError("a model is required (--model or --model-file)")
    doc: dict[str, Any] = {"model": args.model}
    if args.model == "two-level":
        doc["gap"] = args.gap
    elif args.model == "oscillator":
        doc["omega"] = args.omega
    elif args.model == "oscillator-bank":
        if args.omegas is None:
            raise UsageError("--omegas is required for oscillator-bank")
        doc["omegas"] = _float_list(args.omegas)
    elif args.model == "classical":
        if args.dof is None:
            raise UsageError("--dof is required for classical")
        doc["dof"] = args.dof
    elif args.model == "diatomic":
        doc["t_rot"], doc["t_vib"] = args.t_rot, args.t_vib
    return spectra.build_model(doc)


def _grid(args: argparse.Namespace) -> list[tuple[float, float]]:
    """(T, beta) pairs in grid order; the flag that was given is echoed exactly."""
    if args.T is not None:
        return [(float(t), 1.0 / float(t)) for t in parse_grid(args.T)]
    if args.beta is not None:
        return [(1.0 / float(b), float(b)) for b in parse_grid(args.beta)]
    raise UsageError("a temperature grid is required (--T or --beta)")


def _fisher_row(model, temp: float, beta: float, n: int) -> dict[str, Any]:
    r = fisher.fisher_report(model, beta, n)
    return {
        "T": temp,
        "beta": beta,
        "Cv": r.C_v,
        "F_S": r.F_S,
        "F_T": r.F_T,
        "product": r.product_FS_FT,
        "cr_var_S": r.cr_var_S,
        "cr_var_T": r.cr_var_T,
        "cr_product": r.cr_product,
    }


def cmd_thermo(args) -> list[dict[str, Any]]:
    model = _model(args)
    rows = []
    for temp, beta in _grid(args):
        p = thermo.thermo_point(model, beta)
        rows.append({"T": temp, "beta": p.beta, "lnZ": p.ln_Z, "U": p.U, "var_H": p.var_H, "Cv": p.C_v, "S": p.S})
    return rows


def cmd_fisher(args) -> list[dict[str, Any]]:
    model = _model(args)
    return [_fisher_row(model, t, b, args.n) for t, b in _grid(args)]


def cmd_renyi(args) -> list[dict[str, Any]]:
    model = _model(args)
    rows = []
    for alpha in _float_list(args.alpha):
        for temp, beta in _grid(args):
            row = _fisher_row(model, temp, beta, args.n)
            rp = thermo.renyi_point(model, beta, alpha)
            rf = fisher.renyi_fisher(model, beta, alpha)
            row.update(
                alpha=alpha,
                S_alpha=rp.S_alpha,
                F_S_alpha=rf.F_S_alpha,
                C_v_alpha=rf.C_v_alpha,
                product_FS_alpha_FT=rf.product_with_F_T,
            )
            rows.append(row)
    return rows


def _sampling_model(model: spectra.ThermalModel, beta: float) -> spectra.ThermalModel:
    if model.finite:
        return model
    if isinstance(model, spectra.Oscillator):
        # estimates rarely fall below beta/4, where the dropped tail is still < 1e-12 of Z
        return spectra.truncate_oscillator(model.omega, beta / 4.0, 1e-12)
    raise GibbsFisherError(f"cannot sample from {type(model).__name__}; use a finite spectrum or oscillator")


def cmd_simulate(args) -> list[dict[str, Any]]:
    model = _model(args)
    if args.beta is None:
        raise UsageError("--beta is required for simulate")
    rows = []
    for beta in parse_grid(args.beta):
        beta = float(beta)
        sampled = _sampling_model(model, beta)
        for n in _int_list(args.n):
            stats = estimation.run_trials(
                estimation.SimConfig(sampled, beta, n, args.trials, args.seed)
            )
            rows.append(
                {
                    "beta": beta,
                    "n": n,
                    "trials": args.trials,
                    "seed": args.seed,
                    "mean_S_hat": stats.mean_S_hat,
                    "var_S_hat": stats.var_S_hat,
                    "mean_T_hat": stats.mean_T_hat,
                    "var_T_hat": stats.var_T_hat,
                    "ratio_S": stats.ratio_S,
                    "ratio_T": stats.ratio_T,
                    "product_ratio": stats.product_ratio,
                    "n_failed": stats.n_failed,
                }
            )
    return rows


def cmd_ensemble(args) -> list[dict[str, Any]]:
    doc = _read_json(args.ensemble_file)
    if not isinstance(doc, dict):
        raise UsageError("ensemble file must hold a JSON object")
    if "lambdas" in doc:
        report = ensembles.gge_report(ensembles.ensemble_from_json(doc))
        row: dict[str, Any] = {"F_S": report.F_S, "C_v_eff": report.C_v_eff}
        m = report.fisher_matrix.shape[0]
        for k in range(m):
            for l in range(m):
                row[f"F_{k}_{l}"] = float(report.fisher_matrix[k, l])
        for k in range(m):
            row[f"grad_S_{k}"] = float(report.entropy_gradient[k])
        return [row]
    try:
        beta, mu, states = float(doc["beta"]), float(doc["mu"]), doc["states"]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"ensemble file needs 'lambdas' or 'beta'/'mu'/'states': {exc}") from exc
    g = ensembles.gce_report(states, beta, mu)
    return [
        {
            "F_beta_beta": g.F_beta_beta,
            "F_mu_mu": g.F_mu_mu,
            "F_beta_mu": g.F_beta_mu,
            "F_S_gce": g.F_S_gce,
            "C_v_mu": g.C_v_mu,
            "C_v_fixed_N": g.C_v_fixed_N,
        }
    ]


def cmd_scaling(args) -> list[dict[str, Any]]:
    sizes = _int_list(args.L)
    if not sizes:
        raise UsageError("--L needs at least one size")
    temp = criticality.T_C if args.T.lower() in ("tc", "t_c") else float(parse_grid(args.T)[0])
    series = criticality.scaling_series(sizes, temp, args.backend)
    fit = None
    if args.fit != "none" and len(sizes) >= 3:
        fit = criticality.fss_fit(series, args.fit)
    rows = []
    for e in series.entries:
        row: dict[str, Any] = {
            "L": e.L,
            "T": e.T,
            "t": e.t,
            "Cv_total": e.C_v_total,
            "Cv_per_spin": e.C_v_per_spin,
            "F_S": e.F_S,
        }
        if fit is not None:
            row.update(
                fit_mode=fit.mode.value,
                fit_slope=fit.slope_or_amplitude,
                fit_intercept=fit.intercept,
                fit_r_squared=fit.r_squared,
            )
        rows.append(row)
    return rows


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render(rows: Sequence[dict[str, Any]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{k: _jsonable(v) for k, v in r.items()} for r in rows]) + "\n"
    buf = io.StringIO()
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        header = list(rows[0].keys())
        writer.writerow(header)
        for r in rows:
            writer.writerow([_fmt(r.get(k)) for k in header])
    return buf.getvalue()


def _add_common(p: argparse.ArgumentParser, model: bool = True, grid: bool = True) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    if model:
        p.add_argument(
            "--model", choices=("two-level", "oscillator", "oscillator-bank", "classical", "diatomic")
        )
        p.add_argument("--model-file", help="JSON model description")
        p.add_argument("--gap", type=float, default=1.0)
        p.add_argument("--omega", type=float, default=1.0)
        p.add_argument("--omegas", help="comma-separated oscillator frequencies")
        p.add_argument("--dof", type=int)
        p.add_argument("--t-rot", type=float, default=1.0)
        p.add_argument("--t-vib", type=float, default=10.0)
    if grid:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--T", help="temperature grid min:max:count:lin|log, or one value")
        g.add_argument("--beta", help="inverse-temperature grid, same syntax as --T")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gibbsfisher", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("thermo", help="equilibrium quantities on a temperature grid")
    _add_common(p)
    p.set_defaults(func=cmd_thermo)

    p = sub.add_parser("fisher", help="F_S, F_T, their product and Cramer-Rao bounds")
    _add_common(p)
    p.add_argument("--n", type=int, default=1, help="number of copies")
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("renyi", help="Renyi-entropy Fisher information")
    _add_common(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--alpha", default="2", help="comma-separated Renyi orders")
    p.set_defaults(func=cmd_renyi)

    p = sub.add_parser("simulate", help="Monte Carlo energy-measurement estimation")
    _add_common(p)
    p.add_argument("--n", default="1000", help="comma-separated copy counts")
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="GGE or grand-canonical Fisher report from a JSON file")
    _add_common(p, model=False, grid=False)
    p.add_argument("--ensemble-file", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("scaling", help="exact 2D Ising finite-size scaling")
    _add_common(p, model=False, grid=False)
    p.add_argument("--L", required=True, help="comma-separated lattice sizes")
    p.add_argument("--T", default="Tc", help="temperature, or Tc for the critical point")
    p.add_argument("--backend", choices=[b.value for b in criticality.Backend], default="transfer")
    p.add_argument("--fit", choices=("logarithmic", "powerlaw", "none"), default="logarithmic")
    p.set_defaults(func=cmd_scaling)
    return parser


def _fail(kind: str, message: str, code: int, err: TextIO) -> int:
    err.write(json.dumps({"error": kind, "message": " ".join(str(message).split())}) + "\n")
    return code


def run_command(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    """Execute a parsed command and emit its table; returns the exit status."""
    try:
        text = render(args.func(args), args.format)
    except UsageError as exc:
        return _fail("parse", str(exc), EXIT_PARSE, err)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO, err)
    except (GibbsFisherError, ValueError, ArithmeticError) as exc:
        return _fail("domain", str(exc), EXIT_DOMAIN, err)
    try:
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            out.write(text)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO, err)
    return EXIT_OK


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("parse", str(exc), EXIT_PARSE, err)
    return run_command(args, out, err)


def entry_point() -> None:
    sys.exit(main())
