"""Command-line front end.

Exit status: 0 on success, 2 when a check fails (certificate rejected,
bound violated, reproduction mismatch), 1 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import benchmarks, equilibrium
from .auction import BidProfile, competing_prices, run_auction
from .best_response import build_frontier, roi_best_response
from .market import as_fraction
from .reproduce import IDS, reproduce
from .scenario import Scenario, _jsonable, load_scenario
from .stochastic import GammaModel, expected_outcome

SEED_ENV = "ROIPACE_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _fractions(text: str | None) -> list[Fraction] | None:
    if text is None:
        return None
    try:
        return [as_fraction(t) for t in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse rationals from {text!r}") from exc


def _alphas(args, sc: Scenario) -> tuple[Fraction, ...]:
    given = _fractions(getattr(args, "alphas", None))
    if given is not None:
        if len(given) != sc.instance.n:
            raise UsageError(f"expected {sc.instance.n} multipliers, got {len(given)}")
        return tuple(given)
    if sc.bids is not None:
        return sc.bids.alphas
    raise UsageError("no multipliers: pass --alphas or put bids in the scenario")


def _write_csv(directory: str | None, name: str, rows: list[dict]) -> None:
    if not directory or not rows:
        return
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / name, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get(SEED_ENV, "0"))


def cmd_validate(args, sc):
    return {"valid": True, "notices": sc.notices, "n": sc.instance.n, "m": sc.instance.m}, 0


def cmd_run(args, sc):
    alphas = _alphas(args, sc)
    bids = BidProfile(alphas, sc.bids.raw_bids if sc.bids is not None and args.alphas is None else None)
    out = run_auction(sc.instance, bids, sc.tiebreak)
    _write_csv(args.csv, "prices.csv", out.price_rows())
    return {"alphas": [str(a) for a in alphas], "outcome": out.to_json()}, 0


def cmd_frontier(args, sc):
    alphas = _alphas(args, sc)
    i = args.buyer
    if not 0 <= i < sc.instance.n:
        raise UsageError(f"buyer index {i} out of range")
    prices = competing_prices(sc.instance, BidProfile(alphas), i)
    fr = build_frontier(sc.instance, i, prices)
    br = roi_best_response(sc.instance, i, prices, frontier=fr)
    rows = fr.csv_rows(sc.instance.cost_curves[i])
    _write_csv(args.csv, f"frontier_buyer{i}.csv", rows)
    return {
        "buyer": i,
        "competing_prices": [str(c) for c in prices],
        "frontier": rows,
        "best_response": {
            "payment": str(br.payment),
            "utility": str(br.utility),
            "alpha_interval": [str(br.alpha_lo), str(br.alpha_hi)],
            "alpha": str(br.alpha),
        },
    }, 0


def cmd_solve(args, sc):
    deltas = _fractions(args.deltas) or sc.option("deltas")
    methods = tuple(args.methods.split(",")) if args.methods else ("perturbed", "dynamics", "grid")
    res = equilibrium.solve(sc.instance, deltas, methods, grid_K=sc.option("grid_K", 20))
    if res.trace is not None:
        _write_csv(args.csv, "delta_trace.csv", [
            {"delta": str(d), **{f"alpha{i}": a for i, a in enumerate(al)}}
            for d, al in zip(res.trace.deltas, res.trace.alphas)
        ])
    return res.to_json(), 0 if res.found else 2


def cmd_verify(args, sc):
    alphas = _alphas(args, sc)
    tb = sc.tiebreak
    if tb is None and args.reconcile:
        tb = equilibrium.reconcile_ties(sc.instance, alphas)
    cert = equilibrium.verify_equilibrium(sc.instance, alphas, tb)
    return cert.to_json(), 0 if cert.certified else 2


def cmd_enumerate(args, sc):
    K = args.K or sc.option("grid_K", 20)
    T = args.T or sc.option("tie_grid_T", 4)
    certs = equilibrium.enumerate_equilibria_grid(sc.instance, K, T)
    welfare = [benchmarks.transferable_welfare(sc.instance, c.outcome.allocation) for c in certs]
    _write_csv(args.csv, "equilibria.csv", [
        {"alphas": " ".join(map(str, c.alphas)), "revenue": str(c.outcome.revenue), "welfare": str(w)}
        for c, w in zip(certs, welfare)
    ])
    return {
        "K": K,
        "T": T,
        "count": len(certs),
        "equilibria": [{**c.to_json(), "transferable_welfare": str(w)} for c, w in zip(certs, welfare)],
    }, 0


def _certificate(args, sc):
    if args.alphas is not None or sc.bids is not None:
        alphas = _alphas(args, sc)
        tb = sc.tiebreak or equilibrium.reconcile_ties(sc.instance, alphas)
        return equilibrium.verify_equilibrium(sc.instance, alphas, tb)
    return equilibrium.solve(sc.instance).certificate


def cmd_bounds(args, sc):
    cert = _certificate(args, sc)
    if cert is None or not cert.certified:
        return {"error": "no certified equilibrium", "certificate": cert.to_json() if cert else None}, 2
    w, r = benchmarks.check_bounds(sc.instance, cert, args.indifference)
    _write_csv(args.csv, "revenue_ratios.csv", r.csv_rows())
    _write_csv(args.csv, "welfare.csv", [{"welfare": str(w.welfare), "optimum": str(w.optimum), "ratio": str(w.ratio)}])
    return {"alphas": [str(a) for a in cert.alphas], "welfare": w.to_json(), "revenue": r.to_json()}, 0 if (w.ok and r.ok) else 2


def cmd_posted_price(args, sc):
    prices = _fractions(args.prices) or list(sc.instance.reserves)
    if len(prices) != sc.instance.m:
        raise UsageError(f"expected {sc.instance.m} prices, got {len(prices)}")
    if args.order:
        orders = [tuple(int(x) for x in args.order.split(","))]
    else:
        orders = benchmarks.arrival_orders(sc.instance.n)
    try:
        rows = [benchmarks.sequential_posted_revenue(sc.instance, prices, o, args.indifference) for o in orders]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _write_csv(args.csv, "posted_revenue.csv", [{"order": " ".join(map(str, r.order)), "revenue": str(r.revenue)} for r in rows])
    return {"prices": [str(p) for p in prices], "rows": [r.to_json() for r in rows]}, 0


def cmd_expect(args, sc):
    alphas = _alphas(args, sc)
    gamma = sc.gamma or GammaModel.point(sc.instance.n, sc.instance.m)
    samples = args.samples or sc.option("samples", 100_000)
    eo = expected_outcome(sc.instance, gamma, BidProfile(alphas), samples, _seed(args), args.workers)
    return {"alphas": [str(a) for a in alphas], **eo.to_json()}, 0


def cmd_reproduce(args, _sc):
    ids = IDS if args.example == "all" else (args.example,)
    if any(i not in IDS for i in ids):
        raise UsageError(f"unknown example {args.example!r}; choose from {', '.join(IDS)} or all")
    reports = [reproduce(i) for i in ids]
    ok = all(r.ok for r in reports)
    payload = reports[0].to_json() if len(reports) == 1 else {"ok": ok, "reports": [r.to_json() for r in reports]}
    return payload, 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="roipace", description="ROI-optimal uniform bid scaling in simultaneous second-price auctions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_, scenario=True):
        sp = sub.add_parser(name, help=help_)
        if scenario:
            sp.add_argument("scenario", help="scenario JSON path or bundled name")
        sp.add_argument("--csv", metavar="DIR", help="also write CSV tables to DIR")
        sp.set_defaults(func=fn, needs_scenario=scenario)
        return sp

    add("validate", cmd_validate, "check a scenario's instance")
    sp = add("run", cmd_run, "run the auction at fixed multipliers")
    sp.add_argument("--alphas")
    sp = add("frontier", cmd_frontier, "payment/value frontier and ROI best response for one buyer")
    sp.add_argument("--buyer", type=int, default=0)
    sp.add_argument("--alphas")
    sp = add("solve", cmd_solve, "find a certified equilibrium")
    sp.add_argument("--deltas", help="comma-separated decreasing smoothing levels")
    sp.add_argument("--methods", help="comma-separated subset of perturbed,dynamics,grid")
    sp = add("verify", cmd_verify, "certify a multiplier profile")
    sp.add_argument("--alphas")
    sp.add_argument("--reconcile", action="store_true", help="choose tie shares by LP when none are given")
    sp = add("enumerate", cmd_enumerate, "grid search for all equilibrium outcome classes")
    sp.add_argument("--K", type=int)
    sp.add_argument("--T", type=int)
    indiff_help = "posted-price buyers make zero-marginal-utility purchases (buy) or not (skip)"
    sp = add("bounds", cmd_bounds, "welfare and revenue ratios of an equilibrium")
    sp.add_argument("--alphas")
    sp.add_argument("--indifference", choices=benchmarks.INDIFFERENCE, default="buy", help=indiff_help)
    sp = add("posted-price", cmd_posted_price, "sequential posted-price revenue")
    sp.add_argument("--prices")
    sp.add_argument("--order", help="comma-separated buyer order; default all orders")
    sp.add_argument("--indifference", choices=benchmarks.INDIFFERENCE, default="buy", help=indiff_help)
    sp = add("expect", cmd_expect, "Monte-Carlo expected outcome under random bid modifiers")
    sp.add_argument("--alphas")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int, help=f"default from ${SEED_ENV} or 0")
    sp.add_argument("--workers", type=int, default=1)
    sp = add("reproduce", cmd_reproduce, "re-derive a worked example and check its numbers", scenario=False)
    sp.add_argument("example", help=f"one of {', '.join(IDS)} or all")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        sc = load_scenario(args.scenario) if args.needs_scenario else None
        payload, code = args.func(args, sc)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if sc is not None:
        payload = {"config": sc.to_json(), **payload}
    print(json.dumps(_jsonable(payload), indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
