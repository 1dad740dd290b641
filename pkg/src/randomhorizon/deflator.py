"""Supermartingale deflators for processes stopped at the random time.

The construction runs entirely in the enlarged filtration G:

* the optional stochastic integral ``H (.) N`` is the compensated sum with
  jumps ``H dN - pG(H dN)`` (discrete time has no continuous part),
* the driver ``L = -(K (.) mhat)`` uses the kernel
  ``K = Z_-^2 / (Z_-^2 + d<m>) * (1/Zt)`` on ``]0, tau]`` and the
  G-martingale part ``mhat`` of the survival martingale ``m``; its jumps
  collapse to the closed form ``dL = (-dm/Zt + pF(I_{Zt=0})) I_{]0,tau]}``,
  which the builder re-derives and checks cell by cell,
* the nondecreasing predictable ``drawdown`` accumulates
  ``pF(I_{Zt=0}) I_{]0,tau]}`` -- the mass lost to abrupt survival
  collapse -- and the candidate deflator is the stochastic exponential of
  ``L - drawdown``, strictly positive since ``1 + dL - d(drawdown)`` equals
  ``Z_-/Zt`` on ``]0, tau]`` and 1 elsewhere.

``verify_deflator`` is the exact arbiter: per node it maximizes the
deflated one-period wealth over the admissibility polytope by rational LP
and demands the supermartingale inequality, reporting the worst node
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .enlargement import AzemaBundle, g_martingale_part
from .errors import EngineError, InadmissibleStrategy, StructuralViolation
from .lp import maximize_over_admissible
from .projections import assert_martingale, condexp, is_martingale
from .space import (
    AdaptedProcess,
    FiniteSpace,
    Filtration,
    RandomTime,
    assert_adapted,
    assert_predictable,
    stop,
)


def optional_integral(
    H: AdaptedProcess, N: AdaptedProcess, filt: Filtration, space: FiniteSpace
) -> AdaptedProcess:
    """Compensated (optional) stochastic integral of a scalar optional H
    against a martingale N: starts at 0, jumps H dN - E[H dN | G_{t-1}]."""
    if H.dim != 1:
        raise ValueError("optional integrand must be scalar")
    assert_martingale(N, filt, space, "optional-integral driver")
    assert_adapted(H, filt, "optional integrand")
    n = space.n
    acc = [[Fraction(0)] * N.dim for _ in range(n)]
    rows = [tuple(tuple(c) for c in acc)]
    for t in range(1, space.horizon + 1):
        for k in range(N.dim):
            prod = [H.scalar_at(t, i) * N.delta_at(t, i)[k] for i in range(n)]
            proj = condexp(prod, filt.parts[t - 1], space)
            for i in range(n):
                acc[i][k] += prod[i] - proj[i]
        rows.append(tuple(tuple(c) for c in acc))
    return AdaptedProcess(N.dim, tuple(rows))


def stoch_exp(N: AdaptedProcess) -> AdaptedProcess:
    """Stochastic exponential: the running product of (1 + dN); requires
    N_0 = 0.  Positive exactly when every factor is positive."""
    if N.dim != 1:
        raise ValueError("stochastic exponential of a scalar process")
    n = len(N.values[0])
    if any(N.values[0][i][0] != 0 for i in range(n)):
        raise EngineError("stochastic exponential requires N_0 = 0")
    acc = [Fraction(1)] * n
    rows = [tuple((Fraction(1),) for _ in range(n))]
    for t in range(1, N.horizon + 1):
        for i in range(n):
            acc[i] *= 1 + N.delta_at(t, i)[0]
        rows.append(tuple((acc[i],) for i in range(n)))
    return AdaptedProcess(1, tuple(rows))


@dataclass(frozen=True)
class DeflatorBundle:
    """Kernel, driver, drawdown and the resulting candidate deflator."""

    kernel: AdaptedProcess      # K, supported on ]0, tau]
    driver: AdaptedProcess      # L = -(K (.) mhat), a G-martingale, L_0 = 0
    drawdown: AdaptedProcess    # nondecreasing G-predictable, jumps in [0, 1)
    deflator: AdaptedProcess    # stochastic exponential of (driver - drawdown)
    mhat: AdaptedProcess        # G-martingale part of m, kept for tests


def build_deflator(
    bundle: AzemaBundle,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> DeflatorBundle:
    n = space.n
    mhat = g_martingale_part(bundle.m, bundle, filt, enlarged, tau, space)

    bracket_rows = [condexp(
        [bundle.m.delta_at(t, i)[0] ** 2 for i in range(n)],
        filt.parts[t - 1],
        space,
    ) if t >= 1 else None for t in space.times]

    k_rows = [tuple((Fraction(0),) for _ in range(n))]
    for t in range(1, space.horizon + 1):
        row = []
        for i in range(n):
            if t <= tau.at(i):
                zprev = bundle.Z.scalar_at(t - 1, i)
                ztil = bundle.Ztilde.scalar_at(t, i)
                kappa = zprev * zprev + bracket_rows[t][i]
                row.append((zprev * zprev / kappa / ztil,))
            else:
                row.append((Fraction(0),))
        k_rows.append(tuple(row))
    K = AdaptedProcess(1, tuple(k_rows))

    L = -optional_integral(K, mhat, enlarged, space)

    collapse_rows = [None] + [
        condexp(
            [
                Fraction(1) if bundle.Ztilde.scalar_at(t, i) == 0 else Fraction(0)
                for i in range(n)
            ],
            filt.parts[t - 1],
            space,
        )
        for t in range(1, space.horizon + 1)
    ]

    # closed form of the jumps, re-derived independently of the integral
    for t in range(1, space.horizon + 1):
        for i in range(n):
            if t <= tau.at(i):
                expected = (
                    -bundle.m.delta_at(t, i)[0] / bundle.Ztilde.scalar_at(t, i)
                    + collapse_rows[t][i]
                )
            else:
                expected = Fraction(0)
            if L.delta_at(t, i)[0] != expected:
                raise StructuralViolation("driver jumps disagree with the closed form")
            if 1 + L.delta_at(t, i)[0] <= 0:
                raise StructuralViolation("driver jump fell to -1 or below")

    acc = [Fraction(0)] * n
    v_rows = [tuple((Fraction(0),) for _ in range(n))]
    for t in range(1, space.horizon + 1):
        for i in range(n):
            if t <= tau.at(i):
                inc = collapse_rows[t][i]
                if not 0 <= inc < 1:
                    raise StructuralViolation("drawdown jump outside [0, 1)")
                acc[i] += inc
        v_rows.append(tuple((acc[i],) for i in range(n)))
    drawdown = AdaptedProcess(1, tuple(v_rows), predictable=True)

    if not is_martingale(L, enlarged, space):
        raise StructuralViolation("deflator driver is not a G-martingale")
    deflator = stoch_exp(L - drawdown)
    for t in space.times:
        for i in range(n):
            if deflator.scalar_at(t, i) <= 0:
                raise StructuralViolation("candidate deflator is not positive")
    return DeflatorBundle(K, L, drawdown, deflator, mhat)


def is_supermartingale(Y: AdaptedProcess, filt: Filtration, space: FiniteSpace) -> bool:
    for t in range(1, space.horizon + 1):
        for block in filt.parts[t - 1]:
            for k in range(Y.dim):
                if sum(space.prob[i] * Y.delta_at(t, i)[k] for i in block) > 0:
                    return False
    return True


@dataclass(frozen=True)
class WealthDeflation:
    """Output of :func:`supermartingale_deflator`."""

    process: AdaptedProcess
    positive: bool
    supermartingale: bool


def supermartingale_deflator(
    S: AdaptedProcess,
    theta: AdaptedProcess,
    deflators: DeflatorBundle,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> WealthDeflation:
    """Stochastic exponential of
    dX = dL - dD + theta (1 + dL - dD) dS^tau  (D the drawdown),
    the deflated wealth of the one-period strategy theta on the stopped
    price.  theta must be G-predictable and keep theta . S^tau >= -1."""
    assert_predictable(theta, enlarged, "strategy")
    if theta.dim != S.dim:
        raise ValueError("strategy dimension must match the price")
    stopped = stop(S, tau)
    n = space.n
    wealth = [Fraction(0)] * n
    x_rows = [tuple((Fraction(0),) for _ in range(n))]
    acc = [Fraction(0)] * n
    for t in range(1, space.horizon + 1):
        for i in range(n):
            gain = sum(
                theta.at(t, i)[k] * stopped.delta_at(t, i)[k] for k in range(S.dim)
            )
            wealth[i] += gain
            if wealth[i] < -1:
                raise InadmissibleStrategy(
                    f"wealth dropped below -1 at (atom {space.atoms[i]}, time {t})"
                )
            core = deflators.driver.delta_at(t, i)[0] - deflators.drawdown.delta_at(t, i)[0]
            acc[i] += core + (1 + core) * gain
        x_rows.append(tuple((acc[i],) for i in range(n)))
    X = AdaptedProcess(1, tuple(x_rows))
    E = stoch_exp(X)
    positive = all(
        E.scalar_at(t, i) > 0 for t in space.times for i in range(n)
    )
    return WealthDeflation(E, positive, is_supermartingale(E, enlarged, space))


@dataclass(frozen=True)
class DeflatorFailure:
    time: int
    block: tuple          # atom names of the node
    direction: Optional[tuple]  # strategy or recession direction
    unbounded: bool
    excess: Optional[Fraction]  # achieved value minus the allowed bound


@dataclass(frozen=True)
class DeflatorVerdict:
    passed: bool
    worst: Optional[DeflatorFailure]


def verify_deflator(
    Y: AdaptedProcess,
    S_stopped: AdaptedProcess,
    filt: Filtration,
    space: FiniteSpace,
) -> DeflatorVerdict:
    """Exact check that Y deflates every admissible one-period wealth.

    Per node, maximize E[Y_t (1 + theta . dS) | node] over the polytope
    {theta : 1 + theta . dS >= 0 on all children}; the supermartingale
    bound is the node value Y_{t-1}.  An LP unbounded along a profitable
    recession direction fails the node outright."""
    if Y.dim != 1:
        raise ValueError("deflator must be scalar")
    assert_adapted(Y, filt, "deflator")
    if any(Y.scalar_at(t, i) <= 0 for t in space.times for i in range(space.n)):
        raise EngineError("deflator must be strictly positive")
    worst: Optional[DeflatorFailure] = None
    names = space.atoms
    for t in range(1, space.horizon + 1):
        for parent_idx, parent in enumerate(filt.parts[t - 1]):
            mass = space.mass(parent)
            kids = [filt.parts[t][j] for j in filt.children(t, parent_idx)]
            deltas = [S_stopped.delta_at(t, c[0]) for c in kids]
            base = sum(
                space.prob[i] * Y.scalar_at(t, i) for c in kids for i in c
            ) / mass
            g = tuple(
                sum(
                    space.prob[i] * Y.scalar_at(t, i) * S_stopped.delta_at(t, i)[k]
                    for c in kids
                    for i in c
                )
                / mass
                for k in range(S_stopped.dim)
            )
            status, direction, value = maximize_over_admissible(g, deltas)
            bound = Y.scalar_at(t - 1, parent[0])
            if status == "unbounded":
                failure = DeflatorFailure(
                    t, tuple(names[i] for i in parent), direction, True, None
                )
                return DeflatorVerdict(False, failure)
            if base + value > bound:
                excess = base + value - bound
                if worst is None or excess > worst.excess:
                    worst = DeflatorFailure(
                        t, tuple(names[i] for i in parent), direction, False, excess
                    )
    return DeflatorVerdict(worst is None, worst)
