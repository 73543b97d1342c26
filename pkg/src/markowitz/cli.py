"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 domain verdict (arbitrage found,
markets not isomorphic, degenerate market, infeasible target), 3 invalid
market or input document, 4 I/O failure. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import classify as cl
from . import optimize as op
from .errors import MarkowitzError, ParseError, ValidationError
from .files import (
    estimate_market,
    load_market,
    read_returns,
    save_market,
    write_frontier_csv,
)
from .market import Market, risk, validate

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(x: float) -> str:
    return f"{x + 0.0:.10g}"


def _fmt_vec(v: np.ndarray) -> str:
    # entries at rounding level relative to the vector are shown as 0
    cut = 1e-12 * float(np.max(np.abs(v), initial=0.0))
    return " ".join(_fmt(0.0 if abs(x) <= cut else x) for x in v)


def _flag(b: bool) -> str:
    return "true" if b else "false"


def _load(path: str) -> Market:
    return validate(load_market(path))


def _cmd_classify(args: argparse.Namespace) -> int:
    m = _load(args.market)
    report = cl.degeneracy_report(m)
    if report.arbitrage is not None:
        print(f"arbitrage: {_fmt_vec(report.arbitrage.coords)}")
        print("error: only arbitrage-free markets are classified", file=sys.stderr)
        return EXIT_DOMAIN
    form = cl.canonicalize(m)
    print(form.summary())
    print(f"g_defined: {_flag(form.g_defined)}")
    print(f"residual: {form.residual:.3g}")
    print("arbitrage: none")
    if report.has_valueless:
        for v in report.valueless_basis:
            print(f"valueless: {_fmt_vec(v)}")
    else:
        print("valueless: none")
    print(f"cp_independent: {_flag(report.cp_independent)}")
    print(f"nondegenerate: {_flag(report.nondegenerate)}")
    return EXIT_OK


def _cmd_isomorphic(args: argparse.Namespace) -> int:
    a, b = _load(args.market_a), _load(args.market_b)
    report = cl.isomorphism_report(a, b, args.tol)
    print("isomorphic" if report.isomorphic else f"not isomorphic: {report.reason}")
    for name in ("m", "g", "i"):
        if name in report.deltas:
            print(f"delta {name}: {report.deltas[name]:.3g}")
    return EXIT_OK if report.isomorphic else EXIT_DOMAIN


def _cmd_arbitrage(args: argparse.Namespace) -> int:
    witness = cl.find_arbitrage(_load(args.market))
    if witness is None:
        print("arbitrage-free")
        return EXIT_OK
    print(f"arbitrage: {_fmt_vec(witness.coords)}")
    return EXIT_DOMAIN


def _cmd_optimize(args: argparse.Namespace) -> int:
    m = _load(args.market)
    v = op.min_risk_portfolio(m, args.cost, args.payoff)
    print(f"portfolio: {_fmt_vec(v.coords)}")
    print(f"risk: {_fmt(risk(m, v))}")
    if args.cost != 0:
        pt = op.phi(m, v)
        suffix = " (negative cost)" if pt.out_of_domain_sign else ""
        print(f"phi: {_fmt(pt.rr)} {_fmt(pt.er)}{suffix}")
    return EXIT_OK


def _cmd_funds(args: argparse.Namespace) -> int:
    basis = op.mutual_funds(_load(args.market))
    for fund in basis.funds:
        print(f"fund: {_fmt_vec(fund.coords)}")
    print(f"contains_riskfree: {_flag(basis.contains_riskfree)}")
    return EXIT_OK


def _cmd_frontier(args: argparse.Namespace) -> int:
    curve = op.efficient_frontier(_load(args.market))
    points = op.frontier_points(curve, args.ymin, args.ymax, args.count)
    vx, vy = curve.vertex
    if args.ymin <= vy <= args.ymax and all(y != vy for _, y in points):
        points.append((vx, vy))
    out = Path(args.out)
    write_frontier_csv(points, out)
    meta = {
        "m": curve.m,
        "g": curve.g,
        "i": curve.i,
        "n": curve.n,
        "feasible_rule": str(curve.feasible_rule),
        "vertex": {"x": vx, "y": vy},
        "asymptote_slopes": [curve.g, -curve.g],
        "equation": "g^2 (x^2 - m^2) = (y + 1 - i)^2, x >= m",
        "feasible_region": (
            "the frontier curve only" if curve.feasible_rule is op.FeasibleRule.CURVE_ONLY
            else "points on or to the right of the frontier curve"
        ),
    }
    meta_path = out.with_name(out.name + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(points)} rows to {out}")
    print(f"wrote feasible-region metadata to {meta_path}")
    return EXIT_OK


def _cmd_estimate(args: argparse.Namespace) -> int:
    table = read_returns(args.returns, args.prices)
    spec = estimate_market(table)
    validate(spec)
    save_market(spec, args.out, labels=table.names,
                meta={"source": "sample estimate", "observations": str(len(table.rows))})
    print(f"wrote {spec.n}-asset market from {len(table.rows)} observations to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="markowitz", description="Classify Markowitz markets and optimize portfolios.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="canonical form, invariants and degeneracy report")
    p.add_argument("market")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("isomorphic", help="decide whether two markets are isomorphic")
    p.add_argument("market_a")
    p.add_argument("market_b")
    p.add_argument("--tol", type=float, default=None, help="relative tolerance for invariants")
    p.set_defaults(func=_cmd_isomorphic)

    p = sub.add_parser("arbitrage", help="search for an arbitrage portfolio")
    p.add_argument("market")
    p.set_defaults(func=_cmd_arbitrage)

    p = sub.add_parser("optimize", help="risk-minimizing portfolio for a cost and payoff")
    p.add_argument("market")
    p.add_argument("--cost", type=float, required=True)
    p.add_argument("--payoff", type=float, required=True)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("funds", help="mutual-fund basis")
    p.add_argument("market")
    p.set_defaults(func=_cmd_funds)

    p = sub.add_parser("frontier", help="sample the efficient frontier to CSV")
    p.add_argument("market")
    p.add_argument("--ymin", type=float, required=True)
    p.add_argument("--ymax", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_frontier)

    p = sub.add_parser("estimate", help="estimate a market from a payoff history")
    p.add_argument("--returns", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValidationError, ParseError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MarkowitzError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
