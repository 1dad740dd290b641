"""Seeded random instances for the property and campaign suites.

Bounds: at most 12 atoms, horizon at most 4, price dimension at most 2,
branching at most 3, atom probabilities with denominators at most 64; the
random time is drawn uniformly per atom from the grid plus infinity.
Martingale inputs draw terminal values and backward-induct conditional
means, so they are exact martingales by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .projections import condexp
from .space import INF, AdaptedProcess, FiniteSpace, Filtration, RandomTime

MAX_ATOMS = 12
MAX_HORIZON = 4
MAX_BRANCHING = 3


@dataclass(frozen=True)
class Instance:
    seed: int
    space: FiniteSpace
    filtration: Filtration
    tau: RandomTime
    price: AdaptedProcess  # exact martingale, dim 1 or 2


def _random_tree(rng: random.Random, horizon: int):
    """Per-time partitions of a random branching tree with <= MAX_ATOMS
    leaves; returns (atom count, parts) with blocks of atom indices."""
    paths = [()]
    for _ in range(horizon):
        new_paths = []
        remaining = len(paths)
        for p in paths:
            remaining -= 1
            room = MAX_ATOMS - len(new_paths) - remaining
            b = min(rng.randint(1, MAX_BRANCHING), max(1, room))
            for c in range(b):
                new_paths.append(p + (c,))
        paths = new_paths
    parts = []
    for t in range(horizon + 1):
        groups = {}
        for i, p in enumerate(paths):
            groups.setdefault(p[:t], []).append(i)
        parts.append([tuple(v) for v in groups.values()])
    return len(paths), parts


def _random_probs(rng: random.Random, n: int):
    weights = [rng.randint(1, 5) for _ in range(n)]
    total = sum(weights)
    return [Fraction(w, total) for w in weights]


def random_martingale(
    space: FiniteSpace,
    filt: Filtration,
    rng: random.Random,
    dim: int = 1,
    spread: int = 4,
) -> AdaptedProcess:
    """Draw terminal values, then set X_t = E[X_{t+1} | F_t] backwards."""
    n = space.n
    current = [
        tuple(Fraction(rng.randint(-spread, spread)) for _ in range(dim))
        for _ in range(n)
    ]
    rows = [None] * (space.horizon + 1)
    rows[space.horizon] = tuple(current)
    for t in range(space.horizon - 1, -1, -1):
        comps = [
            condexp([current[i][k] for i in range(n)], filt.parts[t], space)
            for k in range(dim)
        ]
        current = [tuple(comps[k][i] for k in range(dim)) for i in range(n)]
        rows[t] = tuple(current)
    return AdaptedProcess(dim, tuple(rows))


def random_adapted(
    space: FiniteSpace, filt: Filtration, rng: random.Random, dim: int = 1, spread: int = 3
) -> AdaptedProcess:
    """An arbitrary adapted process: independent block values at each time."""
    rows = []
    for t in space.times:
        row = [None] * space.n
        for block in filt.parts[t]:
            cell = tuple(
                Fraction(rng.randint(-spread, spread), rng.randint(1, 3))
                for _ in range(dim)
            )
            for i in block:
                row[i] = cell
        rows.append(tuple(row))
    return AdaptedProcess(dim, tuple(rows))


def random_predictable_fv(
    space: FiniteSpace, filt: Filtration, rng: random.Random, nonconstant: bool
) -> AdaptedProcess:
    """Predictable finite-variation scalar process started at 0."""
    if not nonconstant:
        return AdaptedProcess.zero(space)
    while True:
        rows = [tuple((Fraction(0),) for _ in range(space.n))]
        acc = [Fraction(0)] * space.n
        some = False
        for t in range(1, space.horizon + 1):
            for block in filt.parts[t - 1]:
                inc = Fraction(rng.randint(-2, 2))
                if inc != 0:
                    some = True
                for i in block:
                    acc[i] += inc
            rows.append(tuple((acc[i],) for i in range(space.n)))
        if some:
            return AdaptedProcess(1, tuple(rows), predictable=True)


def random_tau(space: FiniteSpace, rng: random.Random) -> RandomTime:
    choices = list(space.times) + [INF]
    return RandomTime(tuple(rng.choice(choices) for _ in range(space.n)))


def random_instance(seed: int) -> Instance:
    rng = random.Random(seed)
    horizon = rng.randint(1, MAX_HORIZON)
    n, parts = _random_tree(rng, horizon)
    probs = _random_probs(rng, n)
    atoms = tuple(f"w{i}" for i in range(n))
    space = FiniteSpace(atoms, tuple(probs), horizon)
    named = [[tuple(atoms[i] for i in block) for block in blocks] for blocks in parts]
    filt = Filtration.from_names(named, space)
    tau = random_tau(space, rng)
    dim = rng.choice((1, 1, 2))
    price = random_martingale(space, filt, rng, dim=dim)
    return Instance(seed, space, filt, tau, price)
