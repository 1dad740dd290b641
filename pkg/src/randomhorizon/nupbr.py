"""Exact certification of No-Unbounded-Profit-with-Bounded-Risk (NUPBR).

On a finite space with finite horizon, NUPBR coincides with the classical
no-arbitrage notions and is decided node by node: a process passes iff at
every one-period node the conditional increments over the positive-mass
children admit strictly positive convex weights summing to zero, i.e. zero
lies in the relative interior of their convex hull.  The module never
builds an unbounded-profit sequence; the node-wise reduction is itself a
tested invariant (weights reassemble into an equivalent martingale
measure, and failing nodes yield an explicit arbitrage direction).

The remaining entry points package the equivalence statements that relate
a base-filtration model to its enlargement: single predictable-jump
processes and their reweighted counterparts, the masked-increment
criterion for thin processes, abrupt-collapse witnesses, and the universal
preservation dichotomy driven by the thin set {Zt = 0 & Z_- > 0}.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .enlargement import AzemaBundle, azema, enlarge, jump_time_measures
from .errors import EngineError, PreconditionViolated
from .generator import random_martingale
from .lp import separating_direction, zero_in_relative_interior
from .projections import condexp, is_martingale
from .space import (
    AdaptedProcess,
    FiniteSpace,
    Filtration,
    RandomTime,
    assert_adapted,
    frac,
    stop,
)


@dataclass(frozen=True)
class NodeWeights:
    time: int
    block: tuple  # atom names of the parts[t-1]-block
    children: tuple  # atom-name blocks, only positive-mass children
    weights: tuple  # strictly positive Fractions summing to 1


@dataclass(frozen=True)
class Arbitrage:
    time: int
    block: tuple  # atom names of the failing node
    theta: tuple  # direction with theta . dX >= 0 on the node, > 0 somewhere


@dataclass(frozen=True)
class CertResult:
    verdict: bool
    node_weights: Optional[tuple] = None
    arbitrage: Optional[Arbitrage] = None

    def __post_init__(self):
        if self.verdict and (self.node_weights is None or self.arbitrage is not None):
            raise ValueError("a true verdict carries exactly the weight witness")
        if not self.verdict and (self.arbitrage is None or self.node_weights is not None):
            raise ValueError("a false verdict carries exactly the arbitrage witness")


def certify_nupbr(
    X: AdaptedProcess,
    filt: Filtration,
    space: FiniteSpace,
    weights: Optional[Sequence[Fraction]] = None,
) -> CertResult:
    """Exact node-wise NUPBR certificate, optionally under an absolutely
    continuous reweighting given by nonnegative atom weights (zero-mass
    nodes and children are ignored)."""
    assert_adapted(X, filt, "certify_nupbr input")
    w = None if weights is None else [frac(v) for v in weights]
    names = space.atoms
    collected = []
    for t in range(1, space.horizon + 1):
        for parent_idx, parent in enumerate(filt.parts[t - 1]):
            if w is not None and sum(space.prob[i] * w[i] for i in parent) == 0:
                continue
            kids = []
            for j in filt.children(t, parent_idx):
                child = filt.parts[t][j]
                if w is not None and sum(space.prob[i] * w[i] for i in child) == 0:
                    continue
                kids.append(child)
            deltas = [X.delta_at(t, child[0]) for child in kids]
            ok, lam = zero_in_relative_interior(deltas)
            if not ok:
                theta = separating_direction(deltas)
                return CertResult(
                    False,
                    arbitrage=Arbitrage(
                        t,
                        tuple(names[i] for i in parent),
                        theta,
                    ),
                )
            collected.append(
                NodeWeights(
                    t,
                    tuple(names[i] for i in parent),
                    tuple(tuple(names[i] for i in c) for c in kids),
                    lam,
                )
            )
    return CertResult(True, node_weights=tuple(collected))


def martingale_measure_from_weights(
    result: CertResult, filt: Filtration, space: FiniteSpace
):
    """Reassemble the per-node weights into atom weights dQ/dP.

    Q is the product of the node weights along each atom's path, scaled by
    the P-mass of the time-0 block; under Q the certified process is an
    exact martingale (tested invariant of the certificate)."""
    if not result.verdict:
        raise ValueError("only a true verdict carries deflator weights")
    table = {(nw.time, nw.block): nw for nw in result.node_weights}
    q = []
    for i, name in enumerate(space.atoms):
        block0 = filt.block_of(0, i)
        mass0 = space.mass(block0)
        acc = mass0
        for t in range(1, space.horizon + 1):
            parent = tuple(space.atoms[j] for j in filt.block_of(t - 1, i))
            nw = table[(t, parent)]
            child = tuple(space.atoms[j] for j in filt.block_of(t, i))
            acc *= nw.weights[nw.children.index(child)]
        # conditional-measure weight of the atom inside its terminal block,
        # then dQ/dP
        term = filt.block_of(space.horizon, i)
        acc *= space.prob[i] / space.mass(term)
        q.append(acc / space.prob[i])
    return tuple(q)


def single_jump_process(
    xi_values: Sequence[tuple],
    T: int,
    space: FiniteSpace,
    mask: Optional[Sequence[bool]] = None,
) -> AdaptedProcess:
    """xi I_{[T, inf)} with an optional atom mask applied to xi."""
    dim = len(xi_values[0])
    zero = tuple(Fraction(0) for _ in range(dim))
    rows = []
    for t in space.times:
        row = []
        for i in range(space.n):
            if t >= T and (mask is None or mask[i]):
                row.append(tuple(frac(c) for c in xi_values[i]))
            else:
                row.append(zero)
        rows.append(tuple(row))
    return AdaptedProcess(dim, tuple(rows))


def _xi_from_process(X: AdaptedProcess, T: int, space: FiniteSpace):
    return [X.delta_at(T, i) for i in range(space.n)]


def _check_f_measurable(xi_values, T, filt, space, what="xi"):
    for block in filt.parts[T]:
        ref = tuple(xi_values[block[0]])
        if any(tuple(xi_values[i]) != ref for i in block):
            raise EngineError(f"{what} must be measurable at the jump date")


@dataclass(frozen=True)
class SingleJumpRecord:
    """The four equivalent certificates for a single predictable jump."""

    T: int
    stopped_in_enlarged: bool
    masked_in_base: bool
    under_jump_measure: bool
    under_ratio_measure: bool

    @property
    def consistent(self) -> bool:
        return (
            self.stopped_in_enlarged
            == self.masked_in_base
            == self.under_jump_measure
            == self.under_ratio_measure
        )


def single_jump_equivalences(
    xi_values: Sequence[tuple],
    T: int,
    bundle: AzemaBundle,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> SingleJumpRecord:
    """Certify xi I_{Z_{T-}>0} I_{[T,inf)} four ways: stopped in G, masked by
    {Zt_T > 0} in F, and in F under the two jump-date reweightings."""
    _check_f_measurable(xi_values, T, filt, space)
    alive_prev = [bundle.Z.scalar_at(T - 1, i) > 0 for i in range(space.n)]
    S = single_jump_process(xi_values, T, space, mask=alive_prev)
    masked = [
        alive_prev[i] and bundle.Ztilde.scalar_at(T, i) > 0 for i in range(space.n)
    ]
    S_masked = single_jump_process(xi_values, T, space, mask=masked)
    measures = jump_time_measures(T, bundle, filt, tau, space)
    return SingleJumpRecord(
        T=T,
        stopped_in_enlarged=certify_nupbr(stop(S, tau), enlarged, space).verdict,
        masked_in_base=certify_nupbr(S_masked, filt, space).verdict,
        under_jump_measure=certify_nupbr(S, filt, space, weights=measures.q).verdict,
        under_ratio_measure=certify_nupbr(S, filt, space, weights=measures.q_tilde).verdict,
    )


def thin_set_empty_at(bundle: AzemaBundle, T: int) -> bool:
    """True iff no atom has Zt_T = 0 while Z_{T-1} > 0, i.e. the abrupt
    survival collapse {Zt_T = 0} stays inside {Z_{T-} = 0}."""
    return all(t != T for (_, t) in bundle.thin_mask)


def thin_set_empty(bundle: AzemaBundle) -> bool:
    return not bundle.thin_mask


def witness_martingale(
    T: int, bundle: AzemaBundle, filt: Filtration, space: FiniteSpace
) -> AdaptedProcess:
    """Bounded single-jump martingale xi I_{[T,inf)} with
    xi = I_{Zt_T = 0} - P(Zt_T = 0 | F_{T-}); stopping it at tau fails NUPBR
    in the enlargement exactly when the thin set meets date T."""
    ind = [
        Fraction(1) if bundle.Ztilde.scalar_at(T, i) == 0 else Fraction(0)
        for i in range(space.n)
    ]
    proj = condexp(ind, filt.parts[T - 1], space)
    xi = [(ind[i] - proj[i],) for i in range(space.n)]
    return single_jump_process(xi, T, space)


@dataclass(frozen=True)
class MaskedCriterionRecord:
    per_delta: dict  # Fraction -> bool
    all_deltas: bool
    stopped_verdict: bool

    @property
    def consistent(self) -> bool:
        return self.all_deltas == self.stopped_verdict


def masked_increment_criterion(
    S: AdaptedProcess,
    bundle: AzemaBundle,
    filt: Filtration,
    space: FiniteSpace,
    delta: Fraction,
) -> bool:
    """On every node with Z_{t-1} >= delta, zero must lie in the relative
    interior of the convex hull of the increments over children that keep
    Zt_t > 0 (an empty family passes)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    for t in range(1, space.horizon + 1):
        for parent_idx, parent in enumerate(filt.parts[t - 1]):
            if bundle.Z.scalar_at(t - 1, parent[0]) < delta:
                continue
            deltas = []
            for j in filt.children(t, parent_idx):
                child = filt.parts[t][j]
                if bundle.Ztilde.scalar_at(t, child[0]) > 0:
                    deltas.append(S.delta_at(t, child[0]))
            ok, _ = zero_in_relative_interior(deltas)
            if not ok:
                return False
    return True


def masked_increment_criterion_all(
    S: AdaptedProcess,
    bundle: AzemaBundle,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
    extra_deltas: Sequence[Fraction] = (),
) -> MaskedCriterionRecord:
    """Quantify the criterion over the finite set of positive values taken by
    Z_-, plus any user-supplied thresholds; the conjunction must match the
    NUPBR certificate of the stopped process in the enlargement.

    Requires S to satisfy NUPBR in the base filtration (theorem
    precondition; violations raise :class:`PreconditionViolated`)."""
    if not certify_nupbr(S, filt, space).verdict:
        raise PreconditionViolated(
            "masked-increment criterion requires the base process to satisfy NUPBR"
        )
    values = sorted(
        {
            bundle.Z.scalar_at(t - 1, i)
            for t in range(1, space.horizon + 1)
            for i in range(space.n)
            if bundle.Z.scalar_at(t - 1, i) > 0
        }
        | {frac(d) for d in extra_deltas}
    )
    per = {d: masked_increment_criterion(S, bundle, filt, space, d) for d in values}
    combined = all(per.values())
    stopped = certify_nupbr(stop(S, tau), enlarged, space).verdict
    return MaskedCriterionRecord(per, combined, stopped)


@dataclass(frozen=True)
class MartingaleTransferRecord:
    """Equivalent martingale statements for a centered single jump at T:
    under the jump-date measure in F, the thin-set mean-zero identity, and
    for the stopped process under the positive enlarged weight."""

    T: int
    under_jump_measure: bool
    thin_mean_zero: bool
    stopped_under_enlarged_weight: bool

    @property
    def consistent(self) -> bool:
        return (
            self.under_jump_measure
            == self.thin_mean_zero
            == self.stopped_under_enlarged_weight
        )


def single_jump_martingale_transfer(
    xi_values: Sequence[tuple],
    T: int,
    bundle: AzemaBundle,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> MartingaleTransferRecord:
    _check_f_measurable(xi_values, T, filt, space)
    dim = len(xi_values[0])
    for k in range(dim):
        proj = condexp([xi_values[i][k] for i in range(space.n)], filt.parts[T - 1], space)
        if any(v != 0 for v in proj):
            raise EngineError("xi must have zero conditional mean at T-")
    M = single_jump_process(xi_values, T, space)
    measures = jump_time_measures(T, bundle, filt, tau, space)

    thin_rows = []
    for k in range(dim):
        masked = [
            xi_values[i][k]
            if (space.atoms[i], T) in bundle.thin_mask
            else Fraction(0)
            for i in range(space.n)
        ]
        thin_rows.append(condexp(masked, filt.parts[T - 1], space))
    thin_zero = all(v == 0 for row in thin_rows for v in row)

    return MartingaleTransferRecord(
        T=T,
        under_jump_measure=is_martingale(M, filt, space, weights=measures.q),
        thin_mean_zero=thin_zero,
        stopped_under_enlarged_weight=is_martingale(
            stop(M, tau), enlarged, space, weights=measures.u_enlarged
        ),
    )


def decompose_accessible(S: AdaptedProcess, space: FiniteSpace):
    """(accessible part, quasi-left-continuous part).

    Every discrete jump date is predictable, hence accessible: the
    decomposition is (S, 0) and NUPBR of S reduces to NUPBR of the
    accessible part alone."""
    return S, AdaptedProcess.zero(space, dim=S.dim)


@dataclass(frozen=True)
class PreservationReport:
    """Both directions of the universal-preservation dichotomy."""

    thin_set_empty: bool
    martingales_checked: int
    preserved: int
    failing_seeds: tuple
    witness_time: Optional[int]
    witness_fails_enlarged: Optional[bool]

    @property
    def consistent(self) -> bool:
        if self.thin_set_empty:
            return self.preserved == self.martingales_checked
        return bool(self.witness_fails_enlarged)


def preservation_report(
    space: FiniteSpace,
    filt: Filtration,
    tau: RandomTime,
    bundle: Optional[AzemaBundle] = None,
    enlarged: Optional[Filtration] = None,
    n_martingales: int = 100,
    seed: int = 0,
) -> PreservationReport:
    """If the thin set is empty, stopping preserves NUPBR for a battery of
    random bounded martingales (each certified exactly); otherwise the
    explicit witness martingale at a violating date fails in the
    enlargement."""
    bundle = bundle if bundle is not None else azema(filt, tau, space)
    enlarged = enlarged if enlarged is not None else enlarge(filt, tau, space)
    if thin_set_empty(bundle):
        rng = random.Random(seed)
        preserved, failing = 0, []
        for k in range(n_martingales):
            M = random_martingale(space, filt, rng, dim=1, spread=3)
            if certify_nupbr(stop(M, tau), enlarged, space).verdict:
                preserved += 1
            else:
                failing.append(k)
        return PreservationReport(
            True, n_martingales, preserved, tuple(failing), None, None
        )
    T = min(bundle.thin_times())
    M = witness_martingale(T, bundle, filt, space)
    fails = not certify_nupbr(stop(M, tau), enlarged, space).verdict
    return PreservationReport(False, 0, 0, (), T, fails)
