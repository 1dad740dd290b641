"""Randomized equivalence campaign.

Each instance from the seeded generator is pushed through every identity
and equivalence the engine certifies exactly: the compensator and
projection transfer formulas, the deflator construction, the single-jump
quadruple, the masked-increment contract, the martingale-transfer triple
and both directions of the universal-preservation dichotomy.  Any
disagreement is a build-breaking violation (exit code 2 at the CLI).

Reports are deterministic functions of (instances, seed, battery): no
timestamps, stable key order, rationals as "p/q" strings.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from .deflator import build_deflator, is_supermartingale, verify_deflator
from .enlargement import (
    azema,
    compensator_of_rescaled,
    compensator_of_stopped,
    enlarge,
    projection_transfer_identities,
)
from .errors import EngineError
from .generator import random_instance
from .io import format_fraction
from .nupbr import (
    masked_increment_criterion_all,
    preservation_report,
    single_jump_equivalences,
    single_jump_martingale_transfer,
    thin_set_empty,
)
from .projections import dual_predictable, quadratic_covariation
from .space import stop

JOBS_ENV = "RANDOMHORIZON_JOBS"


def _projection_identities(inst, bundle, enlarged):
    space, filt, tau = inst.space, inst.filtration, inst.tau
    out = {}
    ok = True
    for V in (bundle.default_compensator, quadratic_covariation(bundle.m, bundle.m)):
        closed = compensator_of_stopped(V, bundle, filt, enlarged, tau, space)
        direct = dual_predictable(stop(V, tau), enlarged, space)
        ok = ok and closed.values == direct.values
    out["stopped_compensator"] = ok
    try:
        compensator_of_rescaled(
            quadratic_covariation(bundle.m, bundle.m), bundle, filt, enlarged, tau, space
        )
        compensator_of_rescaled(inst.price, bundle, filt, enlarged, tau, space)
        out["rescaled_compensator"] = True
    except EngineError:
        out["rescaled_compensator"] = False
    try:
        out["projection_ratios"] = projection_transfer_identities(
            bundle.m, bundle, filt, enlarged, tau, space
        ).consistent
    except EngineError:
        out["projection_ratios"] = False
    try:
        from .enlargement import g_martingale_part

        g_martingale_part(bundle.m, bundle, filt, enlarged, tau, space)
        g_martingale_part(inst.price.component(0), bundle, filt, enlarged, tau, space)
        out["martingale_part"] = True
    except EngineError:
        out["martingale_part"] = False
    out["survival_identity"] = all(
        bundle.Ztilde.scalar_at(t, i)
        == bundle.Z.scalar_at(t - 1, i) + bundle.m.delta_at(t, i)[0]
        for t in range(1, space.horizon + 1)
        for i in range(space.n)
    )
    return out


def _deflator_suite(inst, bundle, enlarged):
    space, filt, tau = inst.space, inst.filtration, inst.tau
    out = {}
    try:
        deflators = build_deflator(bundle, filt, enlarged, tau, space)
        out["construction"] = True
    except EngineError:
        out["construction"] = False
        out["supermartingale"] = False
        out["deflates_stopped_price"] = None
        return out
    out["supermartingale"] = is_supermartingale(deflators.deflator, enlarged, space)
    if thin_set_empty(bundle):
        verdict = verify_deflator(
            deflators.deflator, stop(inst.price, tau), enlarged, space
        )
        out["deflates_stopped_price"] = verdict.passed
    else:
        out["deflates_stopped_price"] = None
    return out


def instance_report(seed: int, battery: int = 100) -> dict:
    inst = random_instance(seed)
    space, filt, tau = inst.space, inst.filtration, inst.tau
    bundle = azema(filt, tau, space)
    enlarged = enlarge(filt, tau, space)
    violations = []

    projections = _projection_identities(inst, bundle, enlarged)
    for name, good in projections.items():
        if not good:
            violations.append(f"projection:{name}")

    deflator = _deflator_suite(inst, bundle, enlarged)
    if not deflator["construction"]:
        violations.append("deflator:construction")
    if not deflator["supermartingale"]:
        violations.append("deflator:supermartingale")
    if deflator["deflates_stopped_price"] is False:
        violations.append("deflator:deflates_stopped_price")

    single = []
    transfer = []
    for T in range(1, space.horizon + 1):
        xi = [inst.price.delta_at(T, i) for i in range(space.n)]
        rec = single_jump_equivalences(xi, T, bundle, filt, enlarged, tau, space)
        single.append(
            {
                "T": T,
                "stopped_in_enlarged": rec.stopped_in_enlarged,
                "masked_in_base": rec.masked_in_base,
                "under_jump_measure": rec.under_jump_measure,
                "under_ratio_measure": rec.under_ratio_measure,
                "consistent": rec.consistent,
            }
        )
        if not rec.consistent:
            violations.append(f"single_jump:T={T}")
        mrec = single_jump_martingale_transfer(
            xi, T, bundle, filt, enlarged, tau, space
        )
        transfer.append(
            {
                "T": T,
                "under_jump_measure": mrec.under_jump_measure,
                "thin_mean_zero": mrec.thin_mean_zero,
                "stopped_under_enlarged_weight": mrec.stopped_under_enlarged_weight,
                "consistent": mrec.consistent,
            }
        )
        if not mrec.consistent:
            violations.append(f"martingale_transfer:T={T}")

    masked = masked_increment_criterion_all(
        inst.price, bundle, filt, enlarged, tau, space
    )
    masked_doc = {
        "per_delta": {
            format_fraction(d): v for d, v in sorted(masked.per_delta.items())
        },
        "all_deltas": masked.all_deltas,
        "stopped_verdict": masked.stopped_verdict,
        "consistent": masked.consistent,
    }
    if not masked.consistent:
        violations.append("masked_criterion")

    pres = preservation_report(
        space, filt, tau, bundle, enlarged, n_martingales=battery, seed=seed
    )
    pres_doc = {
        "thin_set_empty": pres.thin_set_empty,
        "martingales_checked": pres.martingales_checked,
        "preserved": pres.preserved,
        "witness_time": pres.witness_time,
        "witness_fails_enlarged": pres.witness_fails_enlarged,
        "consistent": pres.consistent,
    }
    if not pres.consistent:
        violations.append("preservation")

    return {
        "seed": seed,
        "atoms": space.n,
        "horizon": space.horizon,
        "price_dim": inst.price.dim,
        "thin_set_empty": thin_set_empty(bundle),
        "projection_identities": projections,
        "deflator": deflator,
        "single_jump": single,
        "martingale_transfer": transfer,
        "masked_criterion": masked_doc,
        "preservation": pres_doc,
        "violations": sorted(violations),
    }


def _worker(args):
    seed, battery = args
    return instance_report(seed, battery)


def run_campaign(instances: int, seed: int, battery: int = 100, jobs: int = 0) -> dict:
    """Run the equivalence suite on `instances` seeded instances.

    ``jobs`` = 0 reads the RANDOMHORIZON_JOBS environment override (default
    sequential); results are assembled in instance order, so the report is
    byte-identical for a given (instances, seed, battery) regardless of the
    parallelism degree."""
    if jobs == 0:
        jobs = int(os.environ.get(JOBS_ENV, "1") or "1")
    seeds = [seed + k for k in range(instances)]
    if jobs > 1 and instances > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_worker, [(s, battery) for s in seeds]))
    else:
        reports = [instance_report(s, battery) for s in seeds]
    total = sum(len(r["violations"]) for r in reports)
    return {
        "instances": instances,
        "seed": seed,
        "battery": battery,
        "violations_total": total,
        "per_instance": reports,
    }
