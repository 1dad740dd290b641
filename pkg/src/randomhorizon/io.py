"""Scenario files, rational serialization, and report writers.

A scenario is a JSON object::

    {"atoms": ["a", ...],
     "probs": ["1/4", ...],
     "horizon": 2,
     "filtration": [[["a","b"], ["c"]], ...]   # one partition per time,
     "tau": {"a": 1, "d": "inf", ...},
     "S": {"dim": 1, "values": {"a": [["0"], ["1"], ...], ...}}}

All rationals travel as strings "p/q" (plain "p" when the denominator is
1); "inf" is the infinite time.  Parsing failures raise
:class:`InvalidScenario` with a stable error code and the offending
location; see the README for the code list.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import InvalidScenario
from .space import (
    INF,
    AdaptedProcess,
    FiniteSpace,
    Filtration,
    RandomTime,
    is_adapted,
)


def format_fraction(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_fraction(s, location="") -> Fraction:
    try:
        if isinstance(s, int):
            return Fraction(s)
        if isinstance(s, str):
            return Fraction(s)
    except (ValueError, ZeroDivisionError):
        pass
    raise InvalidScenario("schema", location, f"not a rational: {s!r}")


def format_time(v) -> object:
    return "inf" if v is INF else v


def parse_time(v, horizon, location=""):
    if v == "inf":
        return INF
    if isinstance(v, int) and 0 <= v <= horizon:
        return v
    raise InvalidScenario("schema", location, f"not a grid time or 'inf': {v!r}")


@dataclass(frozen=True)
class Scenario:
    space: FiniteSpace
    filtration: Filtration
    tau: RandomTime
    price: AdaptedProcess


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise InvalidScenario("schema", "$", "scenario must be a JSON object")
    for key in ("atoms", "probs", "horizon", "filtration", "tau", "S"):
        if key not in doc:
            raise InvalidScenario("schema", f"$.{key}", "missing field")
    atoms = doc["atoms"]
    if not isinstance(atoms, list) or not all(isinstance(a, str) for a in atoms):
        raise InvalidScenario("schema", "$.atoms", "must be a list of strings")
    probs = [
        parse_fraction(p, f"$.probs[{i}]") for i, p in enumerate(doc["probs"])
    ]
    horizon = doc["horizon"]
    if not isinstance(horizon, int) or horizon < 1:
        raise InvalidScenario("schema", "$.horizon", "must be an integer >= 1")
    try:
        space = FiniteSpace(tuple(atoms), tuple(probs), horizon)
    except ValueError as exc:
        code = "probabilities" if "probab" in str(exc) or "sum" in str(exc) else "schema"
        raise InvalidScenario(code, "$.probs", str(exc)) from exc

    filt_doc = doc["filtration"]
    if not isinstance(filt_doc, list) or len(filt_doc) != horizon + 1:
        raise InvalidScenario(
            "schema", "$.filtration", "need one partition per grid time"
        )
    index = space.index
    parts = []
    for t, blocks in enumerate(filt_doc):
        if not isinstance(blocks, list):
            raise InvalidScenario("schema", f"$.filtration[{t}]", "must be a list of blocks")
        level = []
        for b, block in enumerate(blocks):
            loc = f"$.filtration[{t}][{b}]"
            if not isinstance(block, list) or not block:
                raise InvalidScenario("schema", loc, "block must be a non-empty list")
            try:
                level.append(tuple(index[a] for a in block))
            except KeyError as exc:
                raise InvalidScenario("schema", loc, f"unknown atom {exc}") from exc
        parts.append(tuple(level))
    try:
        filtration = Filtration(tuple(parts))
    except ValueError as exc:
        raise InvalidScenario("filtration", "$.filtration", str(exc)) from exc

    tau_doc = doc["tau"]
    if not isinstance(tau_doc, dict) or set(tau_doc) != set(atoms):
        raise InvalidScenario("schema", "$.tau", "need exactly one entry per atom")
    tau = RandomTime(
        tuple(parse_time(tau_doc[a], horizon, f"$.tau.{a}") for a in atoms)
    )

    s_doc = doc["S"]
    if not isinstance(s_doc, dict) or "dim" not in s_doc or "values" not in s_doc:
        raise InvalidScenario("schema", "$.S", "need fields 'dim' and 'values'")
    dim = s_doc["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise InvalidScenario("schema", "$.S.dim", "must be an integer >= 1")
    vals = s_doc["values"]
    if not isinstance(vals, dict) or set(vals) != set(atoms):
        raise InvalidScenario("schema", "$.S.values", "need exactly one path per atom")
    rows = []
    for t in space.times:
        row = []
        for a in atoms:
            path = vals[a]
            loc = f"$.S.values.{a}[{t}]"
            if not isinstance(path, list) or len(path) != horizon + 1:
                raise InvalidScenario("schema", f"$.S.values.{a}", "need one cell per time")
            cell = path[t]
            if not isinstance(cell, list) or len(cell) != dim:
                raise InvalidScenario("schema", loc, "need one rational per component")
            row.append(tuple(parse_fraction(c, loc) for c in cell))
        rows.append(tuple(row))
    price = AdaptedProcess(dim, tuple(rows))
    if not is_adapted(price, filtration):
        where = _first_non_adapted(price, filtration, space)
        raise InvalidScenario(
            "adaptedness", where, "price is not constant on a filtration block"
        )
    return Scenario(space, filtration, tau, price)


def _first_non_adapted(X: AdaptedProcess, filt: Filtration, space: FiniteSpace) -> str:
    for t in space.times:
        for block in filt.parts[t]:
            ref = X.values[t][block[0]]
            for i in block:
                if X.values[t][i] != ref:
                    return f"$.S.values.{space.atoms[i]}[{t}]"
    return "$.S"


def serialize_scenario(sc: Scenario) -> dict:
    space = sc.space
    return {
        "atoms": list(space.atoms),
        "probs": [format_fraction(p) for p in space.prob],
        "horizon": space.horizon,
        "filtration": [
            [[space.atoms[i] for i in block] for block in blocks]
            for blocks in sc.filtration.parts
        ],
        "tau": {a: format_time(sc.tau.at(i)) for i, a in enumerate(space.atoms)},
        "S": {
            "dim": sc.price.dim,
            "values": {
                a: [
                    [format_fraction(c) for c in sc.price.at(t, i)]
                    for t in space.times
                ]
                for i, a in enumerate(space.atoms)
            },
        },
    }


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidScenario("schema", str(path), f"invalid JSON: {exc}") from exc
    return parse_scenario(doc)


def load_builtin(name: str) -> Scenario:
    """Built-in fixtures shipped with the package ('ex1', 'ex2')."""
    text = resources.files("randomhorizon.scenarios").joinpath(f"{name}.json").read_text()
    return parse_scenario(json.loads(text))


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dump_json(obj), encoding="utf-8")


def write_csv(rows, header, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def process_table(X: AdaptedProcess, space: FiniteSpace):
    """Rows (atom, t, c0, c1, ...) with rationals formatted."""
    rows = []
    for i, a in enumerate(space.atoms):
        for t in space.times:
            rows.append([a, t] + [format_fraction(c) for c in X.at(t, i)])
    return rows
