"""Command-line front end.

Exit codes: 0 success, 1 configuration or model error, 2 inconclusive
verdict (``coeffs``), 3 numerical failure or failed scan check.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional, Sequence

from .appendix_oracle import H_LOW, H_THIRD, verify_solution_jets
from .config import load_config
from .cycle_finder import SCAN_COLUMNS, bifurcation_scan, find_cycle
from .errors import ConfigError, ModelError, NumericalError, TangentialCrossing
from .hybrid_sim import TRAJECTORY_COLUMNS, StopRule, default_mode, sample_rows, simulate, write_rows
from .model_core import Mode, jet_at
from .normal_form import ALPHA_KINDS, check_theorem, default_region, model_coefficients
from .poincare import RESIDUAL_COLUMNS, poincare_map, residual_sweep

POINCARE_COLUMNS = ("x", "y_in", "y_out", "period", "intermediate", "delta", "ratio")
ORACLE_COLUMNS = ("name", "formula", "numeric", "abs_error", "tolerance", "ok")


def parse_x(text: str) -> List[float]:
    """``a,b,c`` or ``START..STOP:N`` (N geometrically spaced values, same sign)."""
    text = text.strip()
    if ".." in text:
        try:
            span, n = text.rsplit(":", 1)
            start, stop = (float(v) for v in span.split(".."))
            n = int(n)
        except ValueError:
            raise ConfigError(f"bad range {text!r}; expected START..STOP:N") from None
        if n < 1 or start == 0 or stop == 0 or (start > 0) != (stop > 0):
            raise ConfigError("range endpoints must be nonzero with one sign, N >= 1")
        if n == 1:
            return [start]
        s = math.copysign(1.0, start)
        a, b = math.log10(abs(start)), math.log10(abs(stop))
        return [s * 10 ** (a + (b - a) * i / (n - 1)) for i in range(n)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --x value {text!r}") from None


def _pair(text: str) -> tuple:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"expected 'x,y', got {text!r}") from None
    return a, b


def _emit(args, rows, columns) -> None:
    text = write_rows(rows, columns, args.format)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _region(args, model, coeffs):
    return default_region(model, coeffs, args.alpha, m=args.m, delta=args.delta)


def _single_x(args, model, coeffs, region) -> float:
    if args.x is None:
        s = -coeffs.sign_fRy0 * coeffs.sign_gR0
        return s * region.m * (region.delta / 2) ** 3 / 2
    xs = parse_x(args.x)
    if len(xs) != 1:
        raise ConfigError("this subcommand takes a single --x value")
    return xs[0]


def cmd_coeffs(args, model, controls) -> int:
    coeffs, jets = model_coefficients(model)
    verdict = check_theorem(coeffs, jets)
    rows = [
        ("alpha_L", coeffs.alpha_L), ("alpha_R", coeffs.alpha_R),
        ("beta_L", coeffs.beta_L), ("beta_R", coeffs.beta_R),
        ("alpha", coeffs.alpha), ("beta", coeffs.beta),
        ("alpha_taylor", coeffs.alpha_taylor),
    ]
    rows += verdict.conditions()
    rows += [
        ("required_x_sign", verdict.required_x_sign),
        ("predicted_y_sign", verdict.predicted_y_sign),
        ("cuberoot_ratio", verdict.predicted_cuberoot_ratio),
        ("cuberoot_ratio_taylor", verdict.predicted_cuberoot_ratio_taylor),
        ("predicted_stability", verdict.predicted_stability),
    ]
    if args.format == "jsonl":
        text = json.dumps({k: v for k, v in rows}) + "\n"
    else:
        width = max(len(k) for k, _ in rows)
        text = "".join(f"{k:<{width}}  {v!r}\n" if isinstance(v, float) else f"{k:<{width}}  {v}\n"
                       for k, v in rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if verdict.conclusive else 2


def cmd_simulate(args, model, controls) -> int:
    coeffs, _ = model_coefficients(model)
    region = _region(args, model, coeffs)
    x = _single_x(args, model, coeffs, region)
    if args.init is not None:
        px, py = _pair(args.init)
        init = (px - model.fold_point[0], py - model.fold_point[1])
    else:
        init = (x, -coeffs.sign_gR0 * region.delta / 2)
    mode = Mode(args.mode) if args.mode else default_mode(x, init)
    stop = StopRule(max_switches=args.switches, max_time=args.tmax)
    try:
        traj = simulate(model, x, init, mode, stop, controls)
    except TangentialCrossing as exc:
        print(f"tangential crossing at t={exc.t!r}, state={model.to_physical(exc.state)}",
              file=sys.stderr)
        return 3
    dt = args.dt if args.dt else (traj.t_final / 1000 if traj.t_final > 0 else 1.0)
    _emit(args, sample_rows(model, traj, dt), TRAJECTORY_COLUMNS)
    return 0


def cmd_poincare(args, model, controls) -> int:
    coeffs, _ = model_coefficients(model)
    region = _region(args, model, coeffs)
    x = _single_x(args, model, coeffs, region)
    ys = parse_x(args.y) if args.y else [-coeffs.sign_gR0 * region.delta / 2]
    rows = []
    for y in ys:
        r = poincare_map(model, x, y, want_residual=True, alpha=args.alpha, region=region,
                         coeffs=coeffs, controls=controls)
        rows.append({"x": x, "y_in": r.y_in, "y_out": r.y_out, "period": r.period,
                     "intermediate": r.intermediate, "delta": r.residual_data.delta_value,
                     "ratio": r.residual_data.ratio})
    _emit(args, rows, POINCARE_COLUMNS)
    return 0


def cmd_residuals(args, model, controls) -> int:
    rows = residual_sweep(model, y0=float(args.y) if args.y else None, m=args.m,
                          alpha=args.alpha, controls=controls, jobs=args.jobs)
    _emit(args, [r.as_dict() for r in rows], RESIDUAL_COLUMNS)
    return 0


def cmd_cycle(args, model, controls) -> int:
    coeffs, _ = model_coefficients(model)
    region = _region(args, model, coeffs)
    xs = parse_x(args.x) if args.x else [_single_x(args, model, coeffs, region)]
    rows = []
    for x in xs:
        sol = find_cycle(model, x, region, alpha=args.alpha, coeffs=coeffs, controls=controls)
        rows.append(sol.as_dict(coeffs.ratio(args.alpha)))
    _emit(args, rows, SCAN_COLUMNS)
    return 0


def cmd_scan(args, model, controls) -> int:
    coeffs, _ = model_coefficients(model)
    region = _region(args, model, coeffs)
    xs = parse_x(args.x) if args.x else None
    res = bifurcation_scan(model, xs, region, alpha=args.alpha, controls=controls, jobs=args.jobs)
    _emit(args, [r.as_dict(res.theory_ratio) for r in res.rows], SCAN_COLUMNS)
    ok, msg = res.scaling_check()
    for row in res.failed:
        print(f"row x={row.x_param!r} failed: {row.error}", file=sys.stderr)
    print(f"scaling check {'passed' if ok else 'FAILED'}: {msg}", file=sys.stderr)
    return 0 if ok else 3


def cmd_oracle(args, model, controls) -> int:
    mode = Mode(args.mode or "R")
    field = model.field(mode)
    jet = jet_at(model, mode)
    report = verify_solution_jets(field, jet, h_low=args.h_low or H_LOW,
                                  h_third=args.h_third or H_THIRD)
    rows = [{"name": e.name, "formula": e.formula_value, "numeric": e.numeric_value,
             "abs_error": e.abs_error, "tolerance": e.tolerance, "ok": int(e.ok)}
            for e in report.entries]
    _emit(args, rows, ORACLE_COLUMNS)
    return 0 if report.ok else 3


COMMANDS = {
    "coeffs": cmd_coeffs, "simulate": cmd_simulate, "poincare": cmd_poincare,
    "residuals": cmd_residuals, "cycle": cmd_cycle, "scan": cmd_scan, "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relayfold", description=(
        "Relay-switched planar systems near a fold-fold point: coefficients, "
        "simulation, return maps and limit cycles."))
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--model", required=True,
                        help="TOML config path, or a built-in name (mass_spring, abs)")
        sp.add_argument("--x", help="half-gap x: value, comma list, or START..STOP:N "
                                    "(write --x=-1e-6 for negative values)")
        sp.add_argument("--y", help="starting ordinate(s) (poincare, residuals)")
        sp.add_argument("--m", type=float, help="wedge constant m")
        sp.add_argument("--delta", type=float, help="outer radius of J")
        sp.add_argument("--alpha", choices=ALPHA_KINDS, default="closed_form",
                        help="quadratic coefficient used for predictions")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "jsonl"), default="csv")
        sp.add_argument("--switches", type=int, default=64)
        sp.add_argument("--tmax", type=float)
        sp.add_argument("--dt", type=float, help="trajectory sampling step")
        sp.add_argument("--init", help="initial state 'x,y' in model coordinates")
        sp.add_argument("--mode", choices=("L", "R"))
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--h-low", type=float, dest="h_low")
        sp.add_argument("--h-third", type=float, dest="h_third")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model, controls = load_config(args.model)
        for name in ("m", "delta", "tmax", "dt"):
            v = getattr(args, name)
            if v is not None and not v > 0:
                raise ConfigError(f"--{name} must be positive")
        return COMMANDS[args.command](args, model, controls)
    except ModelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
