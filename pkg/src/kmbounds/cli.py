"""Command-line surface: tables, residuals, plans, duals, verification
suites, parametric polynomials, tightness witnesses, asymptotics.

Every command is pure in its inputs: the same invocation produces
byte-identical output.  Data goes to stdout (or --out), diagnostics to
stderr with a stable `ERROR <code>:` prefix.  Exit codes: 0 success /
property holds, 1 a verified property is violated (witnesses printed),
2 usage or parse errors, 3 unsupported or inconclusive.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import metric, parametric, tightness
from .errors import (InfeasibleError, NonPolynomialError, RationalParseError,
                     SchemeError, UnsupportedError)
from .exactnum import format_rational, parse_rational
from .metric import EXACT, FLOAT64, DistanceTable, build_table, residual_bounds
from .schemes import Scheme, check_distinct, check_dominance, check_drift, parse_scheme
from .transport import plan_properties, solve_dual, solve_transport

USAGE_ERROR = 2
VIOLATED = 1
UNSUPPORTED = 3

_VERIFY_PROPS = ("metric", "monotone", "quadrangle", "drift", "dominance",
                 "distinct", "kras-residual", "halpern-recursion")


def _value_str(value, mode: str) -> str:
    if mode == EXACT:
        return format_rational(value)
    return repr(value)


def _emit(args, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _scheme(args) -> Scheme:
    return parse_scheme(args.scheme)


def _threads(args) -> int:
    t = getattr(args, "threads", 1)
    if t == 0:
        return os.cpu_count() or 1
    return t


# --- commands -------------------------------------------------------------

def _cmd_weights(args) -> int:
    scheme = _scheme(args)
    rows = [scheme.row(n) for n in range(args.n_max + 1)]
    if args.format == "json":
        payload = {"type": "custom",
                   "rows": [[format_rational(p) for p in row.probs] for row in rows]}
        _emit(args, [json.dumps(payload)])
    else:
        lines = ["n,i,pi"]
        for row in rows:
            for i, p in enumerate(row.probs):
                lines.append(f"{row.n},{i},{format_rational(p)}")
        _emit(args, lines)
    return 0


def _cmd_table(args) -> int:
    scheme = _scheme(args)
    table = build_table(scheme, args.n_max, method=args.method, mode=args.mode)
    rows = metric.table_to_rows(table)
    if args.format == "json":
        payload = {
            "scheme": scheme.label,
            "n_max": table.n_max,
            "mode": table.mode,
            "method": table.method,
            "values": [[m, n, _value_str(v, table.mode)] for m, n, v in rows],
        }
        _emit(args, [json.dumps(payload)])
    else:
        lines = ["m,n,d"]
        lines += [f"{m},{n},{_value_str(v, table.mode)}" for m, n, v in rows]
        _emit(args, lines)
    return 0


def _load_table(path: str) -> DistanceTable:
    data = json.loads(Path(path).read_text())
    scheme = parse_scheme(data["scheme"])
    mode = data["mode"]
    values = {}
    for m, n, text in data["values"]:
        values[(m, n)] = parse_rational(text) if mode == EXACT else float(text)
    return metric.table_from_values(scheme, data["n_max"], mode, data["method"], values)


def _cmd_residuals(args) -> int:
    if args.from_table:
        table = _load_table(args.from_table)
    else:
        if args.scheme is None or args.n_max is None:
            raise SchemeError("residuals needs --scheme and --n-max (or --from-table)")
        scheme = _scheme(args)
        table = build_table(scheme, args.n_max, method=args.method, mode=args.mode)
    series = residual_bounds(table)
    drift = check_drift(table.scheme, table.n_max)
    note = "tight under mass drift" if drift.holds else "upper bound, sharpness unknown"
    if args.format == "json":
        payload = {
            "scheme": table.scheme.label,
            "n_max": table.n_max,
            "mode": table.mode,
            "sharpness": note,
            "values": [[n, _value_str(r, table.mode)] for n, r in enumerate(series.values)],
        }
        _emit(args, [json.dumps(payload)])
    else:
        lines = ["n,R_n"]
        lines += [f"{n},{_value_str(r, table.mode)}" for n, r in enumerate(series.values)]
        _emit(args, lines)
    return 0


def _pair_table(args) -> tuple[Scheme, DistanceTable]:
    scheme = _scheme(args)
    n_top = max(args.m, args.n)
    table = build_table(scheme, n_top, method=args.method, mode=EXACT)
    return scheme, table


def _cmd_plan(args) -> int:
    scheme, table = _pair_table(args)
    supply, demand = scheme.row(args.m), scheme.row(args.n)
    if args.m <= args.n and table.method == metric.INSIDE_OUT:
        plan = metric.inside_out(supply, demand, table.node_cost)
        value = plan.cost(table.node_cost)
    else:
        plan, value = solve_transport(supply, demand, table.node_cost)
    props = plan_properties(plan, table.node_cost)
    if args.format == "json":
        payload = {
            "m": args.m,
            "n": args.n,
            "entries": [[i, j, format_rational(z)] for i, j, z in plan.sorted_entries()],
            "cost": format_rational(value),
            "simple": props.is_simple,
            "nested": props.is_nested,
        }
        _emit(args, [json.dumps(payload)])
    else:
        lines = ["i,j,z"]
        lines += [f"{i},{j},{format_rational(z)}" for i, j, z in plan.sorted_entries()]
        _emit(args, lines)
    return 0


def _cmd_dual(args) -> int:
    scheme, table = _pair_table(args)
    m, n = sorted((args.m, args.n))
    potential = solve_dual(scheme.row(m), scheme.row(n), table.node_cost,
                           table.d(m, n))
    if args.format == "json":
        _emit(args, [json.dumps({"u": [format_rational(v) for v in potential.u]})])
    else:
        lines = ["i,u"]
        lines += [f"{i},{format_rational(v)}" for i, v in enumerate(potential.u)]
        _emit(args, lines)
    return 0


def _run_prop(prop: str, table: DistanceTable, args):
    if prop == "metric":
        return metric.verify_metric(table)
    if prop == "monotone":
        return metric.verify_monotone(table)
    if prop == "quadrangle":
        return metric.verify_quadrangle(table)
    if prop == "kras-residual":
        return metric.kras_residual_identity(table)
    if prop == "halpern-recursion":
        return metric.halpern_recursion_check(table)
    scheme = table.scheme
    checker = {"drift": check_drift, "dominance": check_dominance,
               "distinct": check_distinct}[prop]
    verdict = checker(scheme, table.n_max)
    witnesses = ()
    if not verdict.holds:
        witnesses = (metric.Witness(verdict.witness, Fraction(0), Fraction(0), ""),)
    report = metric.PropertyReport(prop, verdict.holds, witnesses, verdict.detail)
    return report


def _cmd_verify(args) -> int:
    scheme = _scheme(args)
    table = build_table(scheme, args.n_max, method=args.method, mode=EXACT)
    props = [p.strip() for p in args.props.split(",") if p.strip()]
    for p in props:
        if p not in _VERIFY_PROPS:
            raise SchemeError(f"unknown property {p!r}; known: {', '.join(_VERIFY_PROPS)}")
    reports = []
    unsupported: list[str] = []
    for p in props:
        try:
            reports.append(_run_prop(p, table, args))
        except UnsupportedError as exc:
            unsupported.append(f"{p},unsupported,,,{exc}")
    lines: list[str] = []
    json_reports = []
    for report in reports:
        if args.format == "json":
            json_reports.append({
                "prop": report.name,
                "verdict": "holds" if report.holds else "violated",
                "note": report.note,
                "witnesses": [{
                    "indices": list(w.indices),
                    "lhs": format_rational(w.lhs),
                    "rhs": format_rational(w.rhs),
                    "relation": w.relation,
                } for w in report.witnesses],
            })
        else:
            verdict = "holds" if report.holds else "violated"
            if not report.witnesses:
                lines.append(f"{report.name},{verdict},,,{report.note}")
            for w in report.witnesses:
                idx = " ".join(str(i) for i in w.indices)
                lines.append(f"{report.name},{verdict},{idx},"
                             f"{format_rational(w.lhs)},{format_rational(w.rhs)}")
    if args.format == "json":
        payload = {"scheme": scheme.label, "n_max": args.n_max,
                   "reports": json_reports, "unsupported": unsupported}
        _emit(args, [json.dumps(payload)])
    else:
        _emit(args, ["prop,verdict,indices,lhs,rhs"] + lines + unsupported)
    if any(not r.holds for r in reports):
        return VIOLATED
    if unsupported:
        return UNSUPPORTED
    return 0


def _cmd_poly(args) -> int:
    family = parametric.ParamFamily(args.family)
    if args.target == "d":
        if args.m is None:
            raise SchemeError("--target d needs --m and --n")
        target = parametric.Target("d", args.n, args.m)
    else:
        target = parametric.Target("R", args.n)
    result = parametric.fit_polynomial(family, target, degree_hint=args.degree_hint,
                                       threads=_threads(args))
    coeffs = [format_rational(c) for c in result.poly.coeffs]
    if args.format == "json":
        payload = {"target": args.target}
        if args.target == "d":
            payload["m"] = args.m
        payload["n"] = args.n
        payload["coeffs"] = coeffs
        _emit(args, [json.dumps(payload)])
    else:
        lines = ["k,coeff"]
        lines += [f"{k},{c}" for k, c in enumerate(coeffs)]
        _emit(args, lines)
    return 0


def _cmd_tightness(args) -> int:
    scheme = _scheme(args)
    table = build_table(scheme, args.n_max + 1, method=args.method, mode=EXACT)
    witness = tightness.build_witness(scheme, args.n_max, table, threads=_threads(args))
    distance_report = tightness.verify_distance_tightness(witness, table)
    residual_report = None
    residual_unsupported = ""
    try:
        residual_report = tightness.verify_residual_tightness(witness, table)
    except UnsupportedError as exc:
        residual_unsupported = str(exc)
    if args.format == "json":
        payload = {
            "scheme": scheme.label,
            "N": witness.N,
            "pairs": [list(p) for p in witness.pairs],
            "duals": {f"{m},{n}": [format_rational(v) for v in witness.duals[(m, n)].u]
                      for (m, n) in witness.pairs},
            "y": [[format_rational(v) for v in vec] for vec in witness.y],
            "x": [[format_rational(v) for v in vec] for vec in witness.x],
            "distance": _report_json(distance_report),
            "residual": (_report_json(residual_report) if residual_report is not None
                         else {"verdict": "unsupported", "note": residual_unsupported}),
        }
        _emit(args, [json.dumps(payload)])
    else:
        lines = ["check,verdict,indices,lhs,rhs"]
        lines += _report_csv(distance_report)
        if residual_report is not None:
            lines += _report_csv(residual_report)
        else:
            lines.append(f"residual-tightness,unsupported,,,{residual_unsupported}")
        _emit(args, lines)
    if not distance_report.holds or (residual_report is not None
                                     and not residual_report.holds):
        return VIOLATED
    if residual_report is None:
        return UNSUPPORTED
    return 0


def _report_json(report) -> dict:
    return {
        "verdict": "holds" if report.holds else "violated",
        "witnesses": [{
            "indices": list(w.indices),
            "lhs": format_rational(w.lhs),
            "rhs": format_rational(w.rhs),
        } for w in report.witnesses],
    }


def _report_csv(report) -> list[str]:
    verdict = "holds" if report.holds else "violated"
    if not report.witnesses:
        return [f"{report.name},{verdict},,,"]
    return [f"{report.name},{verdict},{' '.join(str(i) for i in w.indices)},"
            f"{format_rational(w.lhs)},{format_rational(w.rhs)}"
            for w in report.witnesses]


def _cmd_asymptotics(args) -> int:
    scheme = _scheme(args)
    rows = parametric.asymptotics(scheme, args.n_max, mode=args.mode)
    if args.format == "json":
        payload = {
            "scheme": scheme.label,
            "mode": args.mode,
            "values": [[n, _value_str(r, args.mode), phi, varphi]
                       for n, r, phi, varphi in rows],
        }
        _emit(args, [json.dumps(payload)])
    else:
        lines = ["n,R,phi,varphi"]
        lines += [f"{n},{_value_str(r, args.mode)},{phi!r},{varphi!r}"
                  for n, r, phi, varphi in rows]
        _emit(args, lines)
    return 0


# --- argument plumbing ----------------------------------------------------

def _add_common(p: argparse.ArgumentParser, *, scheme: bool = True,
                n_max: bool = True) -> None:
    if scheme:
        p.add_argument("--scheme", required=True,
                       help="dirac | pair:a=<rat> | kras:a=<rat> | kras:rule=<name> | "
                            "halpern:b=<rat> | halpern:rule=<name> | uniform | remark4 | "
                            "custom:<path> | composite:<path>")
    if n_max:
        p.add_argument("--n-max", type=int, required=True, dest="n_max")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for independent subtasks (0 = auto)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmbounds",
        description="Exact recursive-transport distance tables and tight "
                    "residual bounds for averaged fixed-point iterations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="emit the probability rows pi^n")
    _add_common(p)
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("table", help="build the distance table")
    _add_common(p)
    p.add_argument("--method", choices=("auto", "inside-out", "lp"), default="auto")
    p.add_argument("--mode", choices=(EXACT, FLOAT64), default=EXACT)
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("residuals", help="residual bounds R_n")
    p.add_argument("--scheme")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--from-table", default=None, dest="from_table",
                   help="recompute from a serialized table JSON instead of building")
    p.add_argument("--method", choices=("auto", "inside-out", "lp"), default="auto")
    p.add_argument("--mode", choices=(EXACT, FLOAT64), default=EXACT)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_residuals)

    p = sub.add_parser("plan", help="optimal transport plan for one pair")
    _add_common(p, n_max=False)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("auto", "inside-out", "lp"), default="auto")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("dual", help="optimal dual potential for one pair")
    _add_common(p, n_max=False)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("auto", "inside-out", "lp"), default="auto")
    p.set_defaults(func=_cmd_dual)

    p = sub.add_parser("verify", help="structural property checks")
    _add_common(p)
    p.add_argument("--method", choices=("auto", "inside-out", "lp"), default="auto")
    p.add_argument("--props", default="metric,monotone,quadrangle",
                   help="comma list from: " + ", ".join(_VERIFY_PROPS))
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("poly", help="exact polynomial in the free weight")
    p.add_argument("--family", choices=("pair", "kras"), required=True)
    p.add_argument("--target", choices=("d", "R"), required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--degree-hint", type=int, default=None, dest="degree_hint")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_poly)

    p = sub.add_parser("tightness", help="build and verify the orbit witness")
    _add_common(p)
    p.add_argument("--method", choices=("auto", "inside-out", "lp"), default="auto")
    p.set_defaults(func=_cmd_tightness)

    p = sub.add_parser("asymptotics", help="residual asymptotics for large n")
    _add_common(p)
    p.add_argument("--mode", choices=(EXACT, FLOAT64), default=FLOAT64)
    p.set_defaults(func=_cmd_asymptotics)

    return parser


def _normalize_method(args) -> None:
    if getattr(args, "method", None) == "inside-out":
        args.method = metric.INSIDE_OUT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _normalize_method(args)
    if getattr(args, "threads", 1) < 0:
        print("ERROR 2: --threads must be >= 0", file=sys.stderr)
        return USAGE_ERROR
    try:
        return args.func(args)
    except (RationalParseError, SchemeError, InfeasibleError, ValueError,
            KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"ERROR 2: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (UnsupportedError, NonPolynomialError) as exc:
        print(f"ERROR 3: {exc}", file=sys.stderr)
        return UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
