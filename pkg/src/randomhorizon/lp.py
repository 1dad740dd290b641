"""Exact linear programming over rationals.

A small dense two-phase primal simplex with Bland's rule, written for the
node-sized problems this package generates (a handful of variables and
rows).  All arithmetic is :class:`fractions.Fraction`, so feasibility,
optimality and unboundedness are decided exactly.

Three wrappers cover every use in the package:

* :func:`zero_in_relative_interior` -- decides whether 0 lies in the
  relative interior of the convex hull of a finite point set by maximizing
  the common floor of the convex weights,
* :func:`separating_direction` -- the Stiemke alternative: a direction
  making a nonnegative, somewhere-positive inner product with every point,
* :func:`maximize_over_admissible` -- maximizes a linear objective over the
  one-period admissibility polytope {theta : 1 + theta . delta >= 0}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[tuple] = None
    objective: Optional[Fraction] = None
    ray: Optional[tuple] = None


def _pivot(T, basis, row, col):
    piv = T[row][col]
    T[row] = [v / piv for v in T[row]]
    for r in range(len(T)):
        if r != row and T[r][col] != 0:
            f = T[r][col]
            T[r] = [a - f * b for a, b in zip(T[r], T[row])]
    basis[row] = col


def _iterate(T, basis, cost, ncols):
    """Run Bland-rule simplex on tableau T (rows [A|b]) minimizing cost.

    Returns ("optimal", None) or ("unbounded", entering_column).
    """
    m = len(T)
    while True:
        cb = [cost[basis[r]] for r in range(m)]
        entering = -1
        for j in range(ncols):
            red = cost[j] - sum(cb[r] * T[r][j] for r in range(m))
            if red < 0:
                entering = j
                break
        if entering < 0:
            return "optimal", None
        leave, best = -1, None
        for r in range(m):
            if T[r][entering] > 0:
                ratio = T[r][-1] / T[r][entering]
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave < 0:
            return "unbounded", entering
        _pivot(T, basis, leave, entering)


def solve_min(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]) -> LPResult:
    """min c.x  s.t.  A x = b, x >= 0, exactly."""
    m, n = len(A), len(c)
    T = []
    for r in range(m):
        row = [Fraction(v) for v in A[r]] + [Fraction(b[r])]
        if row[-1] < 0:
            row = [-v for v in row]
        T.append(row)

    # phase 1: artificial basis
    for r in range(m):
        art = [Fraction(0)] * m
        art[r] = Fraction(1)
        T[r] = T[r][:-1] + art + [T[r][-1]]
    cost1 = [Fraction(0)] * n + [Fraction(1)] * m
    basis = [n + r for r in range(m)]
    status, _ = _iterate(T, basis, cost1, n + m)
    assert status == "optimal"  # phase-1 objective is bounded below by 0
    obj1 = sum(cost1[basis[r]] * T[r][-1] for r in range(m))
    if obj1 != 0:
        return LPResult("infeasible")
    # drive artificials out of the basis; drop rows that are redundant
    keep = []
    for r in range(m):
        if basis[r] >= n:
            piv = next((j for j in range(n) if T[r][j] != 0), None)
            if piv is None:
                continue  # redundant constraint
            _pivot(T, basis, r, piv)
        keep.append(r)
    T = [T[r][:n] + [T[r][-1]] for r in keep]
    basis = [basis[r] for r in keep]

    cost2 = [Fraction(v) for v in c]
    status, entering = _iterate(T, basis, cost2, n)
    if status == "unbounded":
        ray = [Fraction(0)] * n
        ray[entering] = Fraction(1)
        for r in range(len(T)):
            if basis[r] < n:
                ray[basis[r]] = -T[r][entering]
        return LPResult("unbounded", ray=tuple(ray))
    x = [Fraction(0)] * n
    for r in range(len(T)):
        x[basis[r]] = T[r][-1]
    return LPResult("optimal", x=tuple(x), objective=sum(ci * xi for ci, xi in zip(cost2, x)))


def zero_in_relative_interior(deltas: Sequence[tuple]):
    """Decide 0 in ri(conv(deltas)) exactly.

    Returns (verdict, weights): strictly positive rational weights summing
    to 1 with sum(w_i * delta_i) = 0 when the verdict is true, else
    (False, None).  The empty family passes vacuously.

    LP (as one maximization): max eps subject to
        sum_i w_i delta_i = 0,  sum_i w_i = 1,  w_i - eps >= 0,
    with eps free; the verdict is eps* > 0.
    """
    k = len(deltas)
    if k == 0:
        return True, ()
    d = len(deltas[0])
    if all(all(c == 0 for c in v) for v in deltas):
        w = Fraction(1, k)
        return True, tuple(w for _ in range(k))
    # variables: w_1..w_k, ep, em, s_1..s_k  (eps = ep - em)
    nvars = k + 2 + k
    A, b = [], []
    for comp in range(d):
        A.append(
            [deltas[i][comp] for i in range(k)] + [Fraction(0)] * (2 + k)
        )
        b.append(Fraction(0))
    A.append([Fraction(1)] * k + [Fraction(0)] * (2 + k))
    b.append(Fraction(1))
    for i in range(k):
        row = [Fraction(0)] * nvars
        row[i] = Fraction(1)
        row[k] = Fraction(-1)
        row[k + 1] = Fraction(1)
        row[k + 2 + i] = Fraction(-1)
        A.append(row)
        b.append(Fraction(0))
    c = [Fraction(0)] * nvars
    c[k] = Fraction(-1)
    c[k + 1] = Fraction(1)
    res = solve_min(A, b, c)
    if res.status == "infeasible":
        return False, None
    assert res.status == "optimal"  # eps <= 1/k, never unbounded
    eps = -res.objective
    if eps <= 0:
        return False, None
    return True, tuple(res.x[:k])


def separating_direction(deltas: Sequence[tuple]) -> tuple:
    """A direction theta with theta . delta_i >= 0 for all i and > 0 for at
    least one i, normalized to the unit box.  Exists exactly when
    :func:`zero_in_relative_interior` fails on a nonempty family."""
    k = len(deltas)
    d = len(deltas[0])
    # variables: u_1..u_d, v_1..v_d (theta = u - v), slack s_i for
    # theta.delta_i >= 0, box slacks p_j, q_j for u_j, v_j <= 1
    nvars = 2 * d + k + 2 * d
    A, b = [], []
    for i in range(k):
        row = [Fraction(0)] * nvars
        for j in range(d):
            row[j] = -deltas[i][j]
            row[d + j] = deltas[i][j]
        row[2 * d + i] = Fraction(1)
        A.append(row)
        b.append(Fraction(0))
    for j in range(d):
        row = [Fraction(0)] * nvars
        row[j] = Fraction(1)
        row[2 * d + k + j] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
        row = [Fraction(0)] * nvars
        row[d + j] = Fraction(1)
        row[2 * d + k + d + j] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
    c = [Fraction(0)] * nvars
    for i in range(k):
        for j in range(d):
            c[j] -= deltas[i][j]
            c[d + j] += deltas[i][j]
    res = solve_min(A, b, c)
    assert res.status == "optimal" and res.objective < 0, "no separation: not a failing node"
    theta = tuple(res.x[j] - res.x[d + j] for j in range(d))
    return theta


def maximize_over_admissible(objective: tuple, deltas: Sequence[tuple]):
    """max objective . theta over {theta : 1 + theta . delta_i >= 0 for all i}.

    Returns ("optimal", theta, value) or ("unbounded", ray, None); theta is
    free (split internally), and theta = 0 is always feasible.
    """
    k = len(deltas)
    d = len(objective)
    if all(g == 0 for g in objective):
        return "optimal", tuple(Fraction(0) for _ in range(d)), Fraction(0)
    # variables: u, v (theta = u - v), slacks s_i
    nvars = 2 * d + k
    A, b = [], []
    for i in range(k):
        row = [Fraction(0)] * nvars
        for j in range(d):
            row[j] = -deltas[i][j]
            row[d + j] = deltas[i][j]
        row[2 * d + i] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
    c = [Fraction(0)] * nvars
    for j in range(d):
        c[j] = -objective[j]
        c[d + j] = objective[j]
    res = solve_min(A, b, c)
    if res.status == "unbounded":
        ray = tuple(res.ray[j] - res.ray[d + j] for j in range(d))
        return "unbounded", ray, None
    assert res.status == "optimal"
    theta = tuple(res.x[j] - res.x[d + j] for j in range(d))
    return "optimal", theta, -res.objective
