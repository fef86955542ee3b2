"""Command-line interface: ``resvdw <command> [options]``.

Exit codes: 0 success, 1 domain error (invalid system, causality, numerics),
2 usage error.  Results go to stdout or ``--out``; diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .atoms import C_LIGHT, HBAR, PairSystem, fig3_system, load_system, validate_regime
from .closed_form import energy_adiabatic, energy_far_field, energy_full, excitation_probability
from .contour import TERM_IDS, compare_prescriptions, evaluate_causal, evaluate_prescription
from .dataset import Dataset
from .errors import ConfigError, VdwError
from .poles import PRESCRIPTIONS
from .quadrature import energy_quadrature
from .scan import ScanSpec, beat_analysis, parse_range, scan, time_average

CLI_METHODS = ("closed-form", "far-field", "adiabatic", "causal", "quadrature")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse's synopsis, but let main() pick the exit code
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load(path: str | None) -> tuple[PairSystem, dict]:
    if path is None:
        from importlib.resources import files

        text = files("resvdw.data").joinpath("fig3_rb_k.json").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read system file: {exc.strerror}", "--system") from None
    system = load_system(text)
    extra = json.loads(text).get("scan", {})
    return system, extra if isinstance(extra, dict) else {}


def _range(text: str, flag: str) -> tuple[float, float, int]:
    try:
        return parse_range(text)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _scalar(text: str | None, flag: str) -> float | None:
    if text is None:
        return None
    lo, hi, n = _range(text, flag)
    if n != 1:
        raise UsageError(f"{flag} takes a single value here")
    return lo


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _need_T(args) -> float:
    T = _scalar(args.T_ps, "--T-ps")
    if T is None:
        raise UsageError("--T-ps is required")
    return T * 1e-12


def _result_json(res, joules: bool) -> str:
    return json.dumps(res.to_dict(joules=joules), indent=2, default=float)


# ------------------------------------------------------------------ commands

def cmd_eval(args) -> int:
    system, _ = _load(args.system)
    R = _scalar(args.R_um, "--R-um")
    if R is not None:
        system = system.at(R * 1e-6)
    method = args.method
    if args.average_window_periods is not None:
        if method not in ("closed-form", "causal"):
            raise UsageError("--average-window-periods works with closed-form or causal")
        period = 2 * math.pi / abs(system.mean_detuning)
        start = _scalar(args.T_ps, "--T-ps")
        res = time_average(system, args.average_window_periods * period,
                           None if start is None else start * 1e-12, method)
        _emit(_result_json(res, args.joules), args.out)
        return 0
    if method == "adiabatic":
        res = energy_adiabatic(system)
    else:
        T = _need_T(args) if not (method == "quadrature" and args.prescription != "causal") else (
            None if args.T_ps is None else _need_T(args))
        if method == "closed-form":
            res = energy_full(system, T)
        elif method == "far-field":
            res = energy_far_field(system, T)
        elif method == "causal":
            if args.prescription == "causal":
                res = evaluate_causal(system, T, order=args.order, mask=args.mask_term or ())
            else:
                res = evaluate_prescription(system, args.prescription, T, order=args.order)
        else:
            res = energy_quadrature(system, T, args.prescription, order=args.order)
    _emit(_result_json(res, args.joules), args.out)
    return 0


def _scan_axes(args, extra: dict):
    R_text = args.R_um or extra.get("R_um")
    T_text = args.T_ps if args.T_ps is not None else (None if extra.get("T_ps") is None else str(extra["T_ps"]))
    if R_text is None or T_text is None:
        raise UsageError("need --R-um and --T-ps")
    R = _range(str(R_text), "--R-um")
    T = _range(str(T_text), "--T-ps")
    if R[2] > 1 and T[2] > 1:
        raise UsageError("only one of --R-um / --T-ps may be a range")
    return R, T


def cmd_scan(args) -> int:
    system, extra = _load(args.system)
    R, T = _scan_axes(args, extra)
    methods = tuple(m for group in (args.method or ["closed-form"]) for m in group.split(","))
    if T[2] > 1:
        spec = ScanSpec("T", T[0] * 1e-12, T[1] * 1e-12, T[2], R[0] * 1e-6, methods, args.per_line, args.units)
    else:
        spec = ScanSpec("R", R[0] * 1e-6, R[1] * 1e-6, R[2], T[0] * 1e-12, methods, args.per_line, args.units)
    ds = scan(system, spec)
    _report(ds)
    _emit(ds.dumps(args.format), args.out)
    return 0


def cmd_compare(args) -> int:
    system, extra = _load(args.system)
    R, T = _scan_axes(args, extra)
    if T[2] != 1:
        raise UsageError("compare takes a single --T-ps")
    ds = compare_prescriptions(system, T[0] * 1e-12, np.linspace(R[0], R[1], R[2]) * 1e-6)
    _emit(ds.dumps(args.format), args.out)
    return 0


def cmd_validate(args) -> int:
    system, _ = _load(args.system)
    report = validate_regime(system)
    doc = {"system_hash": system.hash(), "label": system.label} | report.to_dict()
    _emit(json.dumps(doc, indent=2), args.out)
    return 0


def cmd_beat(args) -> int:
    system, extra = _load(args.system)
    R, T = _scan_axes(args, extra)
    if R[2] < 2 or T[2] != 1:
        raise UsageError("beat needs an --R-um range and a single --T-ps")
    method = args.method[0] if args.method else "closed-form"
    spec = ScanSpec("R", R[0] * 1e-6, R[1] * 1e-6, R[2], T[0] * 1e-12, (method,))
    ds = scan(system, spec)
    beat = beat_analysis(ds, method, compensate=not args.no_compensate)
    mean_k = float(np.mean([b.k for b in system.lines_B]))
    doc = beat.to_dict() | {
        "expected_short_period_um": 2 * math.pi / (system.atom_A.k + mean_k) / 1e-6,
        "expected_long_period_um": C_LIGHT * math.pi / abs(system.mean_detuning) / 1e-6,
    }
    _emit(json.dumps(doc, indent=2), args.out)
    return 0


def cmd_probability(args) -> int:
    system, extra = _load(args.system)
    R = _scalar(args.R_um, "--R-um")
    if R is not None:
        system = system.at(R * 1e-6)
    if args.T_ps is None:
        raise UsageError("--T-ps is required")
    lo, hi, n = _range(args.T_ps, "--T-ps")
    T = np.linspace(lo, hi, n) * 1e-12
    p = np.atleast_1d(excitation_probability(system, T))
    ds = Dataset.build("probability", "T_ps", {"T_ps": T / 1e-12, "P_B": p}, {"T_ps": "ps", "P_B": "1"},
                       system, {"R_um": system.R / 1e-6})
    _emit(ds.dumps(args.format), args.out)
    return 0


def _report(ds: Dataset) -> None:
    bad = [(i, d) for i, d in enumerate(ds.diagnostics) if d]
    for i, d in bad[:10]:
        print(f"row {i}: {d}", file=sys.stderr)
    if len(bad) > 10:
        print(f"... {len(bad) - 10} more rows with diagnostics", file=sys.stderr)


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="system JSON file (default: packaged Rb/K example)")
    common.add_argument("--T-ps", dest="T_ps", help="observation time in ps (value or min:max:count)")
    common.add_argument("--R-um", dest="R_um", help="separation in um (value or min:max:count)")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")

    p = _Parser(prog="resvdw", description="Time-dependent quasi-resonant van der Waals interaction.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", parents=[common], help="single energy evaluation (JSON)")
    e.add_argument("--method", choices=CLI_METHODS, default="closed-form")
    e.add_argument("--prescription", choices=PRESCRIPTIONS, default="causal",
                   help="pole prescription for --method causal / quadrature")
    e.add_argument("--average-window-periods", type=float,
                   help="time-average over this many detuning periods from --T-ps (default start 2R/c)")
    e.add_argument("--joules", action="store_true", help="also report the energy in joules")
    e.add_argument("--order", choices=("kprime-first", "k-first"), default="kprime-first",
                   help="integration order for coupled terms (debug)")
    e.add_argument("--mask-term", action="append", choices=TERM_IDS,
                   help="drop a term from the causal residue sum (debug, repeatable)")

    s = sub.add_parser("scan", parents=[common], help="R- or T-scan table")
    s.add_argument("--method", action="append",
                   help="evaluation path(s), repeatable or comma-separated: " + ", ".join(
                       ("closed-form", "far-field", "adiabatic", "causal", "quadrature", "contour:<prescription>")))
    s.add_argument("--per-line", action="store_true", help="add one column per B line")
    s.add_argument("--units", choices=("rad/s", "J", "scaled"), default="rad/s")

    sub.add_parser("compare", parents=[common], help="four prescriptions on an R grid")
    sub.add_parser("validate", parents=[common], help="regime report for a system")

    b = sub.add_parser("beat", parents=[common], help="carrier and envelope periods of an R-scan")
    b.add_argument("--method", action="append", choices=("closed-form", "far-field", "adiabatic", "causal"))
    b.add_argument("--no-compensate", action="store_true", help="skip the R^2 amplitude compensation")

    sub.add_parser("probability", parents=[common], help="excitation probability of B versus T")
    return p


COMMANDS = {
    "eval": cmd_eval,
    "scan": cmd_scan,
    "compare": cmd_compare,
    "validate": cmd_validate,
    "beat": cmd_beat,
    "probability": cmd_probability,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"resvdw: usage error: {exc}", file=sys.stderr)
        return 2
    except VdwError as exc:
        print(f"resvdw: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"resvdw: usage error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:  # e.g. piped into head
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    sys.exit(main())
