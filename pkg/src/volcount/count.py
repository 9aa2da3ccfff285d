"""Exact integer-point counting for conjunctions of linear constraints.

The core works on integer rows ``a . x <= b`` (strict and equality rows are
rewritten exactly up front) and alternates three exact reductions:

* interval propagation to a fixpoint — single-variable rows pin or tighten a
  variable exactly; rows satisfied over the whole current box drop out;
* connected-component split — variables not linked by any remaining row
  contribute independent factors that multiply;
* branching on the narrowest bounded variable, with LP-derived integer
  bounds as a fallback when propagation leaves a variable unbounded.

Deferred disequalities are resolved by inclusion–exclusion:
count(P, neq rest) = count(P, rest) - count(P ∩ {equality}, rest).
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence

from .errors import UnboundedError, check_deadline
from . import lp
from .model import Cmp, LinearConstraint, PolyRow, Polytope, RowKind


def strict_to_closed(rhs: Fraction) -> Fraction:
    """Exact rewrite of ``a . x < rhs`` to ``a . x <= rhs'`` over integer
    left-hand sides: one less when the bound is integral, the floor
    otherwise."""
    if rhs.denominator == 1:
        return rhs - 1
    return Fraction(math.floor(rhs))


def count_integer_points(
    p: Polytope,
    deferred_neqs: Sequence[LinearConstraint] = (),
    deadline: Optional[float] = None,
) -> int:
    """Number of integer points satisfying every row of ``p`` and every
    disequality in ``deferred_neqs``.

    Raises UnboundedError when the count would be infinite (some variable
    runs free), so callers must box the variables first unless the
    constraints themselves bound everything.
    """
    if p.contradictory:
        return 0
    if p.n == 0:
        return 1

    rows: list[tuple[tuple[int, ...], int]] = []
    for row in p.rows:
        coeffs, rhs = _integer_row(row.coeffs, row.rhs)
        if row.kind is RowKind.LE_STRICT:
            rhs = int(strict_to_closed(Fraction(rhs)))
            rows.append((coeffs, rhs))
        elif row.kind is RowKind.EQ:
            rows.append((coeffs, rhs))
            rows.append((tuple(-c for c in coeffs), -rhs))
        else:
            rows.append((coeffs, rhs))

    neqs: list[tuple[tuple[int, ...], int]] = []
    for c in deferred_neqs:
        if c.op is not Cmp.EQ:
            raise ValueError("deferred constraints must be equalities")
        neqs.append(_integer_row(c.coeffs, c.rhs))

    return _count_with_neqs(rows, neqs, p.n, deadline)


def _integer_row(coeffs: Sequence[Fraction], rhs: Fraction) -> tuple[tuple[int, ...], int]:
    denom = math.lcm(rhs.denominator, *(c.denominator for c in coeffs))
    return tuple(int(c * denom) for c in coeffs), int(rhs * denom)


def _count_with_neqs(rows, neqs, n: int, deadline) -> int:
    """Inclusion–exclusion over the disequalities."""
    if not neqs:
        intervals = {j: (None, None) for j in range(n)}
        return _count_core(rows, intervals, deadline)
    (coeffs, rhs), rest = neqs[0], neqs[1:]
    # A disequality a.x != rhs over an all-zero row is either always true or
    # always false; handle it without recursion.
    if all(c == 0 for c in coeffs):
        if rhs == 0:
            return 0
        return _count_with_neqs(rows, rest, n, deadline)
    total = _count_with_neqs(rows, rest, n, deadline)
    pinned = rows + [(coeffs, rhs), (tuple(-c for c in coeffs), -rhs)]
    return total - _count_with_neqs(pinned, rest, n, deadline)


def _count_core(rows, intervals, deadline) -> int:
    """Count integer points of ``rows`` with variables limited to
    ``intervals`` (endpoints may be None for unbounded)."""
    check_deadline(deadline)
    state = _propagate(rows, intervals)
    if state is None:
        return 0
    rows, intervals = state

    if not intervals:
        return 1

    total = 1
    for var_group, row_group in _components(rows, intervals):
        sub_intervals = {v: intervals[v] for v in var_group}
        if not row_group:
            # Unconstrained block: every variable contributes its width.
            for v, (lo, hi) in sub_intervals.items():
                if lo is None or hi is None:
                    raise UnboundedError("cannot count an infinite set")
                total *= hi - lo + 1
            continue
        total *= _branch(row_group, sub_intervals, deadline)
        if total == 0:
            # Other components cannot rescue a zero factor.
            return 0
    return total


def _branch(rows, intervals, deadline) -> int:
    """Pick the narrowest variable, ground it, recurse."""
    check_deadline(deadline)
    bounded = [
        (hi - lo, v) for v, (lo, hi) in intervals.items() if lo is not None and hi is not None
    ]
    if bounded:
        _, var = min(bounded)
        lo, hi = intervals[var]
    else:
        var = min(intervals)
        lo, hi = _lp_bounds(rows, intervals, var)
        if lo is None:
            return 0

    total = 0
    for value in range(lo, hi + 1):
        fixed_rows = []
        feasible = True
        for coeffs, rhs in rows:
            c = coeffs.get(var)
            if c is None:
                fixed_rows.append((coeffs, rhs))
                continue
            rest = {k: x for k, x in coeffs.items() if k != var}
            new_rhs = rhs - c * value
            if not rest:
                if 0 > new_rhs:
                    feasible = False
                    break
                continue
            fixed_rows.append((rest, new_rhs))
        if not feasible:
            continue
        sub_intervals = {v: iv for v, iv in intervals.items() if v != var}
        total += _count_core(fixed_rows, sub_intervals, deadline)
    return total


def _lp_bounds(rows, intervals, var):
    """Integer bounds for a variable with no finite propagated interval,
    via the LP relaxation of this component."""
    var_list = sorted(intervals)
    pos = {v: j for j, v in enumerate(var_list)}
    n = len(var_list)
    poly_rows = []
    for coeffs, rhs in rows:
        vec = tuple(Fraction(coeffs.get(v, 0)) for v in var_list)
        poly_rows.append(PolyRow(vec, Fraction(rhs), RowKind.LE))
    for v in var_list:
        lo, hi = intervals[v]
        unit = tuple(Fraction(int(u == v)) for u in var_list)
        if hi is not None:
            poly_rows.append(PolyRow(unit, Fraction(hi), RowKind.LE))
        if lo is not None:
            poly_rows.append(PolyRow(tuple(-u for u in unit), Fraction(-lo), RowKind.LE))
    poly = Polytope(tuple(poly_rows), n)
    try:
        bounds = lp.integer_bounds(poly, pos[var])
    except UnboundedError as exc:
        raise UnboundedError("cannot count an infinite set") from exc
    if bounds is None:
        return None, None
    return bounds



def _propagate(rows, intervals):
    """Exact interval propagation to a fixpoint.

    Rows are kept as (coeff dict, rhs).  Returns (active rows, intervals of
    still-free variables) or None when some row or interval is impossible.
    Fixed variables are substituted into the rows and removed.
    """
    work: list[tuple[dict, int]] = []
    for coeffs, rhs in rows:
        if isinstance(coeffs, dict):
            cd = {v: c for v, c in coeffs.items() if c != 0}
        else:
            cd = {v: c for v, c in enumerate(coeffs) if c != 0}
        work.append((cd, rhs))
    ivs = dict(intervals)

    changed = True
    rounds = 0
    max_rounds = 8 * (len(ivs) + 2)
    while changed and rounds < max_rounds:
        changed = False
        rounds += 1
        next_work = []
        for coeffs, rhs in work:
            if not coeffs:
                if 0 > rhs:
                    return None
                continue
            # Row-wide minimum of a.x given current intervals, tracking
            # whether it is finite.
            lo_sum = 0
            lo_finite = True
            for v, c in coeffs.items():
                lo, hi = ivs[v]
                end = lo if c > 0 else hi
                if end is None:
                    lo_finite = False
                    break
                lo_sum += c * end
            # Satisfied-everywhere test needs the row maximum.
            hi_sum = 0
            hi_finite = True
            for v, c in coeffs.items():
                lo, hi = ivs[v]
                end = hi if c > 0 else lo
                if end is None:
                    hi_finite = False
                    break
                hi_sum += c * end
            if hi_finite and hi_sum <= rhs:
                changed = True  # row drops out
                continue
            if lo_finite and lo_sum > rhs:
                return None
            for v, c in coeffs.items():
                lo, hi = ivs[v]
                end = lo if c > 0 else hi
                if lo_finite:
                    rest = lo_sum - c * end
                elif not _rest_finite(coeffs, ivs, v):
                    continue
                else:
                    rest = _rest_min(coeffs, ivs, v)
                bound = rhs - rest
                if c > 0:
                    new_hi = bound // c
                    if hi is None or new_hi < hi:
                        hi = new_hi
                        changed = True
                else:
                    new_lo = -((-bound) // c)
                    if lo is None or new_lo > lo:
                        lo = new_lo
                        changed = True
                if lo is not None and hi is not None and lo > hi:
                    return None
                ivs[v] = (lo, hi)
            next_work.append((coeffs, rhs))
        work = next_work

        # Substitute pinned variables away.
        pinned = {v: lo for v, (lo, hi) in ivs.items() if lo is not None and lo == hi}
        if pinned:
            changed = True
            for v in pinned:
                del ivs[v]
            substituted = []
            for coeffs, rhs in work:
                inside = [v for v in coeffs if v in pinned]
                if inside:
                    rhs = rhs - sum(coeffs[v] * pinned[v] for v in inside)
                    coeffs = {v: c for v, c in coeffs.items() if v not in pinned}
                    if not coeffs:
                        if 0 > rhs:
                            return None
                        continue
                substituted.append((coeffs, rhs))
            work = substituted

    return work, ivs


def _rest_min(coeffs, ivs, skip):
    total = 0
    for v, c in coeffs.items():
        if v == skip:
            continue
        lo, hi = ivs[v]
        total += c * (lo if c > 0 else hi)
    return total


def _rest_finite(coeffs, ivs, skip) -> bool:
    for v, c in coeffs.items():
        if v == skip:
            continue
        lo, hi = ivs[v]
        end = lo if c > 0 else hi
        if end is None:
            return False
    return True


def _components(rows, intervals):
    """Split variables into groups connected through shared rows; each group
    comes with the rows touching it."""
    parent = {v: v for v in intervals}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for coeffs, _ in rows:
        vs = list(coeffs)
        for v in vs[1:]:
            union(vs[0], v)

    groups: dict = {}
    for v in intervals:
        groups.setdefault(find(v), []).append(v)
    row_groups: dict = {r: [] for r in groups}
    for coeffs, rhs in rows:
        if coeffs:
            row_groups[find(next(iter(coeffs)))].append((coeffs, rhs))
    for root, vs in sorted(groups.items()):
        yield sorted(vs), row_groups[root]
