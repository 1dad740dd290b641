"""Optional/predictable projections, dual projections, Doob decomposition,
predictable covariation and exact martingale tests.

In discrete time the dual projections are cumulative conditional
expectations of increments: the dual optional projection conditions on the
current date, the dual predictable one on the previous date.  No
integrability caveats apply on a finite space.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .errors import NotMartingale
from .space import AdaptedProcess, FiniteSpace, Filtration, condexp, frac


def predictable_projection(X: AdaptedProcess, filt: Filtration, space: FiniteSpace) -> AdaptedProcess:
    """(pX)_t = E[X_t | F_{t-1}] for t >= 1, E[X_0 | F_0] at t = 0."""
    rows = []
    for t in space.times:
        blocks = filt.parts[max(t - 1, 0)]
        comps = [
            condexp([X.values[t][i][k] for i in range(space.n)], blocks, space)
            for k in range(X.dim)
        ]
        rows.append(tuple(tuple(c[i] for c in comps) for i in range(space.n)))
    return AdaptedProcess(X.dim, tuple(rows), predictable=True)


def _dual(V: AdaptedProcess, filt: Filtration, space: FiniteSpace, lag: int) -> AdaptedProcess:
    acc = [[Fraction(0)] * V.dim for _ in range(space.n)]
    rows = [tuple(tuple(c) for c in acc)]
    for t in range(1, space.horizon + 1):
        blocks = filt.parts[t - lag]
        for k in range(V.dim):
            inc = condexp([V.delta_at(t, i)[k] for i in range(space.n)], blocks, space)
            for i in range(space.n):
                acc[i][k] += inc[i]
        rows.append(tuple(tuple(c) for c in acc))
    return AdaptedProcess(V.dim, tuple(rows), predictable=(lag == 1))


def dual_optional(V: AdaptedProcess, filt: Filtration, space: FiniteSpace) -> AdaptedProcess:
    """Starts at 0; increments E[dV_t | F_t]."""
    return _dual(V, filt, space, lag=0)


def dual_predictable(V: AdaptedProcess, filt: Filtration, space: FiniteSpace) -> AdaptedProcess:
    """Starts at 0; increments E[dV_t | F_{t-1}]; the compensator of V."""
    return _dual(V, filt, space, lag=1)


def quadratic_covariation(M: AdaptedProcess, N: AdaptedProcess) -> AdaptedProcess:
    """[M, N]_t = sum_{s<=t} dM_s dN_s, componentwise.

    Scalar inputs give a scalar process; vector inputs give the dM x dN
    matrix process in row-major component order.
    """
    if M.horizon != N.horizon:
        raise ValueError("grids differ")
    dim = M.dim * N.dim
    n = len(M.values[0])
    acc = [[Fraction(0)] * dim for _ in range(n)]
    rows = [tuple(tuple(c) for c in acc)]
    for t in range(1, M.horizon + 1):
        for i in range(n):
            dm = M.delta_at(t, i)
            dn = N.delta_at(t, i)
            k = 0
            for a in dm:
                for b in dn:
                    acc[i][k] += a * b
                    k += 1
        rows.append(tuple(tuple(c) for c in acc))
    return AdaptedProcess(dim, tuple(rows))


def angle_bracket(M: AdaptedProcess, N: AdaptedProcess, filt: Filtration, space: FiniteSpace) -> AdaptedProcess:
    """<M, N>_t = sum_{s<=t} E[dM_s dN_s | F_{s-1}]: the compensator of [M, N]."""
    return dual_predictable(quadratic_covariation(M, N), filt, space)


def is_martingale(
    M: AdaptedProcess,
    filt: Filtration,
    space: FiniteSpace,
    weights: Optional[Sequence[Fraction]] = None,
) -> bool:
    """Exact martingale test, optionally under an absolutely continuous
    reweighting.

    ``weights`` is an atom vector of nonnegative rationals defining
    dQ/dP up to normalization; the test then requires
    E_Q[dM_t | F_{t-1}] = 0 on every node of positive Q-mass and ignores the
    rest (Q only needs to be absolutely continuous).
    """
    if weights is None:
        for t in range(1, space.horizon + 1):
            for block in filt.parts[t - 1]:
                for k in range(M.dim):
                    if sum(space.prob[i] * M.delta_at(t, i)[k] for i in block) != 0:
                        return False
        return True
    w = [frac(x) for x in weights]
    if any(x < 0 for x in w):
        raise ValueError("weights must be nonnegative")
    # density projected on F_t; E_Q[dM_t|F_{t-1}] uses E[w|F_t] since dM_t
    # is F_t-measurable
    proj = [condexp(w, filt.parts[t], space) for t in space.times]
    for t in range(1, space.horizon + 1):
        for block in filt.parts[t - 1]:
            if sum(space.prob[i] * w[i] for i in block) == 0:
                continue
            for k in range(M.dim):
                if sum(space.prob[i] * proj[t][i] * M.delta_at(t, i)[k] for i in block) != 0:
                    return False
    return True


def assert_martingale(M, filt, space, name="process"):
    if not is_martingale(M, filt, space):
        raise NotMartingale(f"{name} is not a martingale for the given filtration")


def doob(X: AdaptedProcess, filt: Filtration, space: FiniteSpace):
    """Unique decomposition X = X_0 + M + A, M martingale null at 0, A
    predictable null at 0 with increments E[dX_t | F_{t-1}]."""
    A = dual_predictable(X, filt, space)
    first = X.values[0]
    rows = tuple(
        tuple(
            tuple(x - a - x0 for x, a, x0 in zip(X.values[t][i], A.values[t][i], first[i]))
            for i in range(space.n)
        )
        for t in space.times
    )
    M = AdaptedProcess(X.dim, rows)
    return M, A
