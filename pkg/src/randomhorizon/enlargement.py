"""Progressive enlargement of a filtration by a random time.

Given a base filtration F and a random time ``tau`` (an arbitrary atom ->
grid-or-INF map), this module builds the smallest filtration G containing F
that makes ``tau`` a stopping time, and computes the survival machinery
attached to the pair:

* ``Z_t  = P(tau >  t | F_t)``   (Azema supermartingale),
* ``Zt_t = P(tau >= t | F_t)``   (its left-closed variant),
* ``m = Z + D^o`` where ``D^o`` is the dual optional projection of the
  default indicator ``I_{[tau, inf)}`` -- an F-martingale,
* the thin set ``{Zt = 0 & Z_- > 0}`` where survival collapses abruptly,
* the death times derived from the first zero of Z.

It then provides the exact transfer formulas between F- and G-compensators
and projections on the stochastic interval ``]0, tau]``, the two
change-of-measure weight families attached to a predictable jump date, and
the reduction of G-predictable processes to F-predictable ones.

Key structural facts the engine relies on (and re-checks at build time):
``Zt_t = Z_{t-1} + dm_t`` for t >= 1, and ``{Zt = 0}``, ``{Z_- = 0}`` never
meet ``]0, tau]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NotPredictable, StructuralViolation
from .projections import condexp, dual_predictable, is_martingale
from .space import (
    INF,
    AdaptedProcess,
    FiniteSpace,
    Filtration,
    RandomTime,
    assert_adapted,
    check_stopping_time,
    stop,
)
from .projections import assert_martingale


def enlarge(filt: Filtration, tau: RandomTime, space: FiniteSpace) -> Filtration:
    """Progressive enlargement: split each F_t-block by {tau = s}, s <= t,
    keeping {tau > t} together."""
    parts = []
    for t in space.times:
        blocks = []
        for block in filt.parts[t]:
            groups = {}
            for i in block:
                v = tau.at(i)
                key = v if (v is not INF and v <= t) else "alive"
                groups.setdefault(key, []).append(i)
            blocks.extend(groups.values())
        parts.append(tuple(tuple(b) for b in blocks))
    enlarged = Filtration(tuple(parts))
    if not check_stopping_time(tau, enlarged, space):
        raise StructuralViolation("enlargement failed to absorb the random time")
    return enlarged


@dataclass(frozen=True)
class AzemaBundle:
    """Survival data of (F, tau).

    ``death`` is the first grid time t >= 1 with Z_{t-1} = 0 (0 when Z_0 = 0,
    INF when Z never dies); ``announced_death`` restricts it to
    {Z_{death-} = 0} and ``sudden_death`` to {Zt_death = 0}, both INF
    elsewhere.  ``thin_mask`` collects the (atom, t) pairs where Zt_t = 0
    while Z_{t-1} > 0.
    """

    Z: AdaptedProcess
    Ztilde: AdaptedProcess
    default_compensator: AdaptedProcess  # dual optional projection of I_[tau, inf)
    m: AdaptedProcess
    thin_mask: frozenset
    death: RandomTime
    announced_death: RandomTime
    sudden_death: RandomTime

    def thin_times(self):
        return sorted({t for (_, t) in self.thin_mask})

    def alive(self, tau: RandomTime, atom: int, t: int) -> bool:
        """Membership of (atom, t) in the stochastic interval ]0, tau]."""
        return t >= 1 and t <= tau.at(atom)


def azema(filt: Filtration, tau: RandomTime, space: FiniteSpace) -> AzemaBundle:
    n = space.n
    zero = Fraction(0)

    z_rows, zt_rows, comp_rows = [], [], []
    acc = [zero] * n
    for t in space.times:
        gt = [Fraction(1) if tau.at(i) > t else zero for i in range(n)]
        ge = [Fraction(1) if tau.at(i) >= t else zero for i in range(n)]
        eq = [Fraction(1) if tau.at(i) == t else zero for i in range(n)]
        z_rows.append(condexp(gt, filt.parts[t], space))
        zt_rows.append(condexp(ge, filt.parts[t], space))
        if t >= 1:
            inc = condexp(eq, filt.parts[t], space)
            acc = [a + b for a, b in zip(acc, inc)]
        comp_rows.append(tuple(acc))

    Z = AdaptedProcess.from_scalar_paths(space, z_rows)
    Zt = AdaptedProcess.from_scalar_paths(space, zt_rows)
    Dof = AdaptedProcess.from_scalar_paths(space, comp_rows)
    m = Z + Dof

    # engine self-checks: these identities hold on every valid instance
    assert_martingale(m, filt, space, "survival martingale part")
    for t in space.times:
        for i in range(n):
            z, zt = Z.scalar_at(t, i), Zt.scalar_at(t, i)
            if not (0 <= z <= zt <= 1):
                raise StructuralViolation("survival ordering 0 <= Z <= Zt <= 1 failed")
            if t >= 1 and zt != Z.scalar_at(t - 1, i) + m.delta_at(t, i)[0]:
                raise StructuralViolation("Zt = Z_- + dm failed")
            if t >= 1 and t <= tau.at(i) and (zt == 0 or Z.scalar_at(t - 1, i) == 0):
                raise StructuralViolation("{Zt=0} or {Z_-=0} met ]0, tau]")

    mask = frozenset(
        (space.atoms[i], t)
        for t in range(1, space.horizon + 1)
        for i in range(n)
        if Zt.scalar_at(t, i) == 0 and Z.scalar_at(t - 1, i) > 0
    )

    death_vals, announced_vals, sudden_vals = [], [], []
    for i in range(n):
        if Z.scalar_at(0, i) == 0:
            d = 0
        else:
            d = INF
            for t in range(1, space.horizon + 1):
                if Z.scalar_at(t - 1, i) == 0:
                    d = t
                    break
        death_vals.append(d)
        if d is INF:
            announced_vals.append(INF)
            sudden_vals.append(INF)
        else:
            prev = Z.scalar_at(d - 1 if d >= 1 else 0, i)
            announced_vals.append(d if prev == 0 else INF)
            sudden_vals.append(d if Zt.scalar_at(d, i) == 0 else INF)

    return AzemaBundle(
        Z=Z,
        Ztilde=Zt,
        default_compensator=Dof,
        m=m,
        thin_mask=mask,
        death=RandomTime(tuple(death_vals)),
        announced_death=RandomTime(tuple(announced_vals)),
        sudden_death=RandomTime(tuple(sudden_vals)),
    )


def compensator_of_stopped(
    V: AdaptedProcess,
    bundle: AzemaBundle,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> AdaptedProcess:
    """G-compensator of the stopped process V^tau, in F-closed form.

    Increments: (1/Z_{t-1}) I_{t <= tau} E[Zt_t dV_t | F_{t-1}].  Equals
    ``dual_predictable(stop(V, tau), enlarged)`` exactly; that equality is
    asserted by the test-suite rather than recomputed here.
    """
    assert_adapted(V, filt, "V")
    n = space.n
    acc = [[Fraction(0)] * V.dim for _ in range(n)]
    rows = [tuple(tuple(c) for c in acc)]
    for t in range(1, space.horizon + 1):
        for k in range(V.dim):
            weighted = [
                bundle.Ztilde.scalar_at(t, i) * V.delta_at(t, i)[k] for i in range(n)
            ]
            proj = condexp(weighted, filt.parts[t - 1], space)
            for i in range(n):
                if t <= tau.at(i):
                    zprev = bundle.Z.scalar_at(t - 1, i)
                    if zprev == 0:
                        raise StructuralViolation(
                            "Z_- vanished inside ]0, tau]; engine invariant broken"
                        )
                    acc[i][k] += proj[i] / zprev
        rows.append(tuple(tuple(c) for c in acc))
    return AdaptedProcess(V.dim, tuple(rows), predictable=True)


def compensator_of_rescaled(
    V: AdaptedProcess,
    bundle: AzemaBundle,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> AdaptedProcess:
    """G-compensator of U := (1/Zt) I_{]0,tau]} . V, with its F-closed form.

    Asserts the closed form (1/Z_-) I_{]0,tau]} . (I_{Zt>0} . V)^{p,F}
    against the directly computed compensator, and, when the increments of V
    are supported on {Zt > 0}, the converse identity
    dV^{p,F} = Z_- dU^{p,G} on ]0, tau].
    """
    assert_adapted(V, filt, "V")
    n = space.n

    def u_delta(t, i, k):
        if t >= 1 and t <= tau.at(i):
            return V.delta_at(t, i)[k] / bundle.Ztilde.scalar_at(t, i)
        return Fraction(0)

    u_rows = []
    acc = [[Fraction(0)] * V.dim for _ in range(n)]
    u_rows.append(tuple(tuple(c) for c in acc))
    for t in range(1, space.horizon + 1):
        for i in range(n):
            for k in range(V.dim):
                acc[i][k] += u_delta(t, i, k)
        u_rows.append(tuple(tuple(c) for c in acc))
    U = AdaptedProcess(V.dim, tuple(u_rows))
    direct = dual_predictable(U, enlarged, space)

    supported = all(
        V.delta_at(t, i) == tuple(Fraction(0) for _ in range(V.dim))
        for t in range(1, space.horizon + 1)
        for i in range(n)
        if bundle.Ztilde.scalar_at(t, i) == 0
    )
    for t in range(1, space.horizon + 1):
        for k in range(V.dim):
            masked = [
                V.delta_at(t, i)[k]
                if bundle.Ztilde.scalar_at(t, i) > 0
                else Fraction(0)
                for i in range(n)
            ]
            proj = condexp(masked, filt.parts[t - 1], space)
            plain = condexp([V.delta_at(t, i)[k] for i in range(n)], filt.parts[t - 1], space)
            for i in range(n):
                on_interval = t <= tau.at(i)
                closed = proj[i] / bundle.Z.scalar_at(t - 1, i) if on_interval else Fraction(0)
                got = direct.delta_at(t, i)[k]
                if got != closed:
                    raise StructuralViolation(
                        "rescaled-compensator transfer identity failed"
                    )
                if supported and on_interval:
                    if plain[i] != bundle.Z.scalar_at(t - 1, i) * got:
                        raise StructuralViolation(
                            "converse compensator identity failed on ]0, tau]"
                        )
    return direct


def g_martingale_part(
    M: AdaptedProcess,
    bundle: AzemaBundle,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> AdaptedProcess:
    """G-martingale part of the stopped F-martingale M:

        Mhat_t = M^tau_t - sum_{s <= t & tau} E[dM_s dm_s | F_{s-1}] / Z_{s-1}.

    The output is verified to be an exact G-martingale.
    """
    assert_martingale(M, filt, space, "input of g_martingale_part")
    stopped = stop(M, tau)
    n = space.n
    rows = [stopped.values[0]]
    acc = [[Fraction(0)] * M.dim for _ in range(n)]
    for t in range(1, space.horizon + 1):
        for k in range(M.dim):
            prod = [
                M.delta_at(t, i)[k] * bundle.m.delta_at(t, i)[0] for i in range(n)
            ]
            proj = condexp(prod, filt.parts[t - 1], space)
            for i in range(n):
                if t <= tau.at(i):
                    acc[i][k] += proj[i] / bundle.Z.scalar_at(t - 1, i)
        rows.append(
            tuple(
                tuple(s - c for s, c in zip(stopped.values[t][i], acc[i]))
                for i in range(n)
            )
        )
    result = AdaptedProcess(M.dim, tuple(rows))
    if not is_martingale(result, enlarged, space):
        raise StructuralViolation("drift-corrected stopped process is not a G-martingale")
    return result


@dataclass(frozen=True)
class TransferIdentities:
    """Both sides of the two projection-ratio identities on ]0, tau],
    stored as processes that vanish off the interval."""

    jump_lhs: AdaptedProcess   # pG(dM / Zt)
    jump_rhs: AdaptedProcess   # pF(dM I_{Zt>0}) / Z_-
    unit_lhs: AdaptedProcess   # pG(1 / Zt)
    unit_rhs: AdaptedProcess   # pF(I_{Zt>0}) / Z_-

    @property
    def consistent(self) -> bool:
        return (
            self.jump_lhs.values == self.jump_rhs.values
            and self.unit_lhs.values == self.unit_rhs.values
        )


def projection_transfer_identities(
    M: AdaptedProcess,
    bundle: AzemaBundle,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> TransferIdentities:
    """Evaluate pG(dM/Zt) = pF(dM I_{Zt>0})/Z_- and pG(1/Zt) = pF(I_{Zt>0})/Z_-
    on ]0, tau] for an F-martingale M; equality is asserted."""
    assert_martingale(M, filt, space, "input of projection_transfer_identities")
    if M.dim != 1:
        raise ValueError("transfer identities are per scalar component")
    n = space.n
    zero_row = tuple((Fraction(0),) for _ in range(n))
    jl, jr, ul, ur = [list([zero_row]) for _ in range(4)]

    for t in range(1, space.horizon + 1):
        # G-side: average over the alive part of each G_{t-1}-node
        g_jump = [Fraction(0)] * n
        g_unit = [Fraction(0)] * n
        for block in enlarged.parts[t - 1]:
            alive = [i for i in block if tau.at(i) >= t]
            if not alive:
                continue
            mass = sum(space.prob[i] for i in alive)
            jacc = sum(
                space.prob[i] * M.delta_at(t, i)[0] / bundle.Ztilde.scalar_at(t, i)
                for i in alive
            )
            uacc = sum(
                space.prob[i] / bundle.Ztilde.scalar_at(t, i) for i in alive
            )
            for i in alive:
                g_jump[i] = jacc / mass
                g_unit[i] = uacc / mass
        # F-side closed forms
        masked = [
            M.delta_at(t, i)[0] if bundle.Ztilde.scalar_at(t, i) > 0 else Fraction(0)
            for i in range(n)
        ]
        pos = [
            Fraction(1) if bundle.Ztilde.scalar_at(t, i) > 0 else Fraction(0)
            for i in range(n)
        ]
        pj = condexp(masked, filt.parts[t - 1], space)
        pu = condexp(pos, filt.parts[t - 1], space)
        f_jump = [Fraction(0)] * n
        f_unit = [Fraction(0)] * n
        for i in range(n):
            if t <= tau.at(i):
                zprev = bundle.Z.scalar_at(t - 1, i)
                f_jump[i] = pj[i] / zprev
                f_unit[i] = pu[i] / zprev
        jl.append(tuple((v,) for v in g_jump))
        jr.append(tuple((v,) for v in f_jump))
        ul.append(tuple((v,) for v in g_unit))
        ur.append(tuple((v,) for v in f_unit))

    out = TransferIdentities(
        AdaptedProcess(1, tuple(jl)),
        AdaptedProcess(1, tuple(jr)),
        AdaptedProcess(1, tuple(ul)),
        AdaptedProcess(1, tuple(ur)),
    )
    if not out.consistent:
        raise StructuralViolation("projection-ratio transfer identity failed")
    return out


@dataclass(frozen=True)
class JumpTimeMeasures:
    """Weight vectors attached to a predictable jump date T.

    ``q`` and ``q_tilde`` are absolutely continuous changes of measure with
    expectation exactly 1 under P; ``u_enlarged`` is the strictly positive
    G-weight used to transfer single-jump martingale tests across the
    enlargement.
    """

    q: tuple
    q_tilde: tuple
    u_enlarged: tuple


def jump_time_measures(
    T: int, bundle: AzemaBundle, filt: Filtration, tau: RandomTime, space: FiniteSpace
) -> JumpTimeMeasures:
    if not 1 <= T <= space.horizon:
        raise ValueError("jump date must lie in {1, ..., horizon}")
    n = space.n
    pos = [Fraction(1) if bundle.Ztilde.scalar_at(T, i) > 0 else Fraction(0) for i in range(n)]
    p_pos = condexp(pos, filt.parts[T - 1], space)

    q = []
    for i in range(n):
        if p_pos[i] > 0:
            q.append(pos[i] / p_pos[i])
        else:
            q.append(Fraction(1))
    qt = []
    for i in range(n):
        zprev = bundle.Z.scalar_at(T - 1, i)
        if zprev > 0:
            qt.append(bundle.Ztilde.scalar_at(T, i) / zprev)
        else:
            qt.append(Fraction(1))
    ug = []
    for i in range(n):
        if T > tau.at(i):
            ug.append(Fraction(1))
        else:
            ug.append(bundle.Z.scalar_at(T - 1, i) / bundle.Ztilde.scalar_at(T, i))

    if space.expectation(q) != 1 or space.expectation(qt) != 1:
        raise StructuralViolation("jump-date measures must have expectation 1")
    if any(u <= 0 for u in ug):
        raise StructuralViolation("enlarged jump-date weight must be positive")
    return JumpTimeMeasures(tuple(q), tuple(qt), tuple(ug))


def _is_g_predictable(H: AdaptedProcess, enlarged: Filtration) -> bool:
    from .space import is_predictable

    return is_predictable(H, enlarged)


def reduce_g_predictable(
    H: AdaptedProcess,
    filt: Filtration,
    enlarged: Filtration,
    tau: RandomTime,
    space: FiniteSpace,
) -> AdaptedProcess:
    """F-predictable reduction of a G-predictable process.

    The output agrees with the input on ]0, tau]; strict positivity and
    upper bounds by 1 are preserved (cells not seen on ]0, tau] are filled
    with 1).  On each F_{t-1}-block the sub-block {tau >= t} is a single
    G_{t-1}-atom, so the copied value is well defined.
    """
    if not _is_g_predictable(H, enlarged):
        raise NotPredictable("input of reduce_g_predictable is not G-predictable")
    n = space.n
    one = tuple(Fraction(1) for _ in range(H.dim))
    rows = []
    for t in space.times:
        row = [one] * n
        for block in filt.parts[max(t - 1, 0)]:
            survivors = [i for i in block if tau.at(i) >= max(t, 1)]
            if survivors:
                v = H.values[t][survivors[0]]
                if any(H.values[t][i] != v for i in survivors):
                    raise StructuralViolation(
                        "G-predictable process not constant on an alive sub-block"
                    )
                for i in block:
                    row[i] = v
        rows.append(tuple(row))
    return AdaptedProcess(H.dim, tuple(rows), predictable=True)
