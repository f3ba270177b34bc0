"""Scenario files and reproduction of the worked examples."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .auction import BidProfile, TieBreak
from .market import CostCurve, InstanceError, MarketInstance, as_budget, as_fraction, validate_instance
from .stochastic import GammaDist, GammaModel

BUNDLED = ("example1", "example3", "a1", "a2", "a3", "a4", "a4r")


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<scenario>"):
        self.line = line
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")


@dataclass
class Scenario:
    instance: MarketInstance
    name: str = ""
    gamma: GammaModel | None = None
    bids: BidProfile | None = None
    tiebreak: TieBreak | None = None
    options: dict = field(default_factory=dict)
    notices: list[str] = field(default_factory=list)

    def option(self, key, default=None):
        return self.options.get(key, default)

    def to_json(self) -> dict:
        out = {"name": self.name, **self.instance.to_json(), "options": _jsonable(self.options)}
        if self.bids is not None:
            out["bids"] = {"alphas": [str(a) for a in self.bids.alphas]}
            if self.bids.raw_bids is not None:
                out["bids"]["raw"] = [[str(b) for b in row] for row in self.bids.raw_bids]
        if self.tiebreak is not None:
            out["tiebreak"] = self.tiebreak.to_json()
        if self.gamma is not None:
            out["gamma"] = {"dists": [[[d.low, d.high] for d in row] for row in self.gamma.dists]}
        return out


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _line_of(text: str, key: str, occurrence: int = 0) -> int | None:
    hits = [m.start() for m in re.finditer(re.escape(f'"{key}"'), text)]
    if occurrence < len(hits):
        return text.count("\n", 0, hits[occurrence]) + 1
    return None


def _problem_line(text: str, problem: str) -> int | None:
    m = re.match(r"(values|cost_curves)\[(\d+)\]", problem)
    if m:
        key = "values" if m.group(1) == "values" else "cost_curve"
        return _line_of(text, key, int(m.group(2)))
    m = re.match(r"buyer (\d+)", problem)
    if m:
        return _line_of(text, "values", int(m.group(1)))
    if problem.startswith("reserves") or "reserves for" in problem:
        return _line_of(text, "reserves")
    return None


def _gamma(entry, n: int, m: int) -> GammaModel:
    def one(d):
        kind = d.get("kind", "point")
        if kind == "point":
            v = float(as_fraction(d.get("value", "1")))
            return GammaDist(v, v)
        if kind == "uniform":
            return GammaDist(float(as_fraction(d["low"])), float(as_fraction(d.get("high", "1"))))
        raise ValueError(f"unknown gamma kind {kind!r}")

    if "dists" in entry:
        return GammaModel(tuple(tuple(one(d) for d in row) for row in entry["dists"]))
    d = one(entry)
    return GammaModel(tuple(tuple(d for _ in range(m)) for _ in range(n)))


def parse_scenario(data: dict, text: str = "", source: str = "<scenario>") -> Scenario:
    """Build a validated scenario from decoded JSON."""
    try:
        buyers = data["buyers"]
        values = [[as_fraction(v) for v in b["values"]] for b in buyers]
        curves = []
        for b in buyers:
            cc = b.get("cost_curve", {})
            segs = cc.get("segments", [["0", "1"]])
            curves.append(CostCurve(tuple((as_fraction(p), as_fraction(s)) for p, s in segs), as_budget(cc.get("budget", "inf"))))
        reserves = tuple(as_fraction(r) for r in data.get("reserves", ()))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"malformed instance: {exc!r}", None, source) from exc
    instance = MarketInstance(tuple(map(tuple, values)), tuple(curves), reserves)
    try:
        report = validate_instance(instance)
    except InstanceError as exc:
        first = next((ln for ln in (_problem_line(text, p) for p in exc.problems) if ln), None)
        raise ScenarioError("; ".join(exc.problems), first, source) from exc

    options = dict(data.get("options", {}))
    for key in ("grid_K", "tie_grid_T"):
        if key in options and int(options[key]) < 2:
            raise ScenarioError(f"option {key} must be at least 2", _line_of(text, key), source)
    if "samples" in options and int(options["samples"]) < 1:
        raise ScenarioError("option samples must be at least 1", _line_of(text, "samples"), source)
    if "deltas" in options:
        options["deltas"] = [as_fraction(d) for d in options["deltas"]]

    bids = None
    if "bids" in data:
        b = data["bids"]
        alphas = tuple(as_fraction(a) for a in b.get("alphas", ["1"] * instance.n))
        raw = b.get("raw")
        raw = tuple(tuple(as_fraction(x) for x in row) for row in raw) if raw is not None else None
        if len(alphas) != instance.n:
            raise ScenarioError(f"{len(alphas)} multipliers for {instance.n} buyers", _line_of(text, "bids"), source)
        bids = BidProfile(alphas, raw)
    tiebreak = TieBreak(data["tiebreak"]) if "tiebreak" in data else None
    try:
        gamma = _gamma(data["gamma"], instance.n, instance.m) if "gamma" in data else None
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"bad gamma model: {exc}", _line_of(text, "gamma"), source) from exc
    return Scenario(instance, data.get("name", ""), gamma, bids, tiebreak, options, report.notices)


def load_scenario(path) -> Scenario:
    """Read a scenario file; bundled names such as ``"example1"`` also work."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        text = resources.files("roipace.scenarios").joinpath(f"{path}.json").read_text()
        source = f"{path}.json"
    else:
        text = p.read_text()
        source = str(p)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, exc.lineno, source) from exc
    return parse_scenario(data, text, source)
