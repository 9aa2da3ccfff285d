"""Core domain types: linear constraints, formulas, bunches, polytopes, config.

Coefficients stay exact rationals from parsing through canonicalization.
Numeric backends convert to floats (or machine integers) at their own
boundaries, never earlier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np


class Cmp(Enum):
    """Comparison operator of a linear constraint."""

    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    EQ = "="


class RowKind(Enum):
    """Role of a polytope row.

    NEQ rows never enter a polytope; disequalities are kept in a separate
    deferred list and only matter to the integer-counting backend.
    """

    LE = "le"
    LE_STRICT = "lt"
    EQ = "eq"


class NumericKind(Enum):
    INT = "Int"
    REAL = "Real"


class Backend(Enum):
    ESTIMATE = "estimate"
    EXACT_VOLUME = "exact_volume"
    INTEGER_COUNT = "integer_count"


Rational = Union[int, Fraction]


@dataclass(frozen=True)
class LinearConstraint:
    """A linear constraint ``coeffs . x  op  rhs`` over the numeric variables.

    Canonical form (produced by :func:`normalize_constraint`): ``op`` is LE or
    EQ, ``strict`` distinguishes ``<`` from ``<=``, and all coefficients plus
    the right-hand side are integers with no common factor.
    """

    coeffs: tuple[Fraction, ...]
    op: Cmp
    rhs: Fraction
    strict: bool = False

    @property
    def is_zero_row(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    @property
    def is_tautology(self) -> bool:
        """True when the row constrains nothing (all-zero coefficients, holds)."""
        return self.is_zero_row and _zero_row_holds(self.op, self.rhs, self.strict)

    @property
    def is_contradiction(self) -> bool:
        """True when the row can never hold (all-zero coefficients, fails)."""
        return self.is_zero_row and not _zero_row_holds(self.op, self.rhs, self.strict)

    def evaluate(self, point: Sequence[Rational]) -> bool:
        """Exact truth value of the constraint at a rational point."""
        lhs = sum((c * p for c, p in zip(self.coeffs, point)), start=Fraction(0))
        if self.op is Cmp.LT:
            return lhs < self.rhs
        if self.op is Cmp.LE:
            return lhs < self.rhs if self.strict else lhs <= self.rhs
        if self.op is Cmp.GT:
            return lhs > self.rhs
        if self.op is Cmp.GE:
            return lhs >= self.rhs
        return lhs == self.rhs


def _zero_row_holds(op: Cmp, rhs: Fraction, strict: bool) -> bool:
    if op is Cmp.LT:
        return rhs > 0
    if op is Cmp.LE:
        return rhs > 0 if strict else rhs >= 0
    if op is Cmp.GT:
        return rhs < 0
    if op is Cmp.GE:
        return rhs <= 0
    return rhs == 0


def normalize_constraint(raw: LinearConstraint) -> LinearConstraint:
    """Rewrite a constraint into canonical ``<=`` / ``=`` form.

    GT/GE constraints get both sides negated; the scale factor applied
    afterwards is positive, so no further sign flips happen.  Coefficients and
    the right-hand side are scaled by a common positive rational so that all
    of them are integers whose collective gcd is 1.  Idempotent.
    """
    coeffs = tuple(Fraction(c) for c in raw.coeffs)
    rhs = Fraction(raw.rhs)
    if raw.op in (Cmp.GT, Cmp.GE):
        coeffs = tuple(-c for c in coeffs)
        rhs = -rhs
        op = Cmp.LE
        strict = raw.op is Cmp.GT
    elif raw.op in (Cmp.LT, Cmp.LE):
        op = Cmp.LE
        strict = raw.op is Cmp.LT or raw.strict
    else:
        op = Cmp.EQ
        strict = False

    denom_lcm = math.lcm(rhs.denominator, *(c.denominator for c in coeffs)) if coeffs else rhs.denominator
    ints = [int(c * denom_lcm) for c in coeffs]
    rhs_int = int(rhs * denom_lcm)
    g = math.gcd(rhs_int, *ints) if ints else abs(rhs_int)
    if g > 1:
        ints = [i // g for i in ints]
        rhs_int //= g
    return LinearConstraint(tuple(Fraction(i) for i in ints), op, Fraction(rhs_int), strict)


@dataclass(frozen=True)
class Formula:
    """A CNF skeleton over Boolean variables plus the theory-atom bindings.

    Boolean variables are numbered from 1.  ``atom_map`` sends the subset of
    them that stand for linear constraints to their canonical constraint;
    ``aux_var_ids`` marks CNF-conversion auxiliaries.  The remaining variables
    are plain user Booleans.
    """

    num_bool_vars: int
    clauses: tuple[tuple[int, ...], ...]
    atom_map: Mapping[int, LinearConstraint]
    num_numeric_vars: int
    numeric_kind: NumericKind
    var_names: tuple[str, ...] = ()
    aux_var_ids: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        nb = self.num_bool_vars
        for clause in self.clauses:
            seen = set()
            for lit in clause:
                v = abs(lit)
                if lit == 0 or v > nb:
                    raise ValueError(f"literal {lit} out of range for {nb} variables")
                if v in seen:
                    raise ValueError(f"variable {v} repeats within a clause")
                seen.add(v)
        for v, c in self.atom_map.items():
            if not 1 <= v <= nb:
                raise ValueError(f"atom variable {v} out of range")
            if len(c.coeffs) != self.num_numeric_vars:
                raise ValueError("atom coefficient count != numeric dimension")
        if self.aux_var_ids & set(self.atom_map):
            raise ValueError("a variable cannot be both an atom and an auxiliary")

    @property
    def user_bool_ids(self) -> frozenset[int]:
        return frozenset(range(1, self.num_bool_vars + 1)) - set(self.atom_map) - self.aux_var_ids


@dataclass(frozen=True)
class Bunch:
    """A partial Boolean assignment whose completions all satisfy the CNF.

    ``free_user_bool_count`` is the number of *user* Booleans (not theory
    atoms, not auxiliaries) that the assignment leaves open; it drives the
    bunch multiplier.
    """

    assignment: Mapping[int, bool]
    free_user_bool_count: int


def bunch_multiplier(bunch: Bunch) -> int:
    """Number of Boolean completions a bunch stands for: 2**free user bools."""
    return 1 << bunch.free_user_bool_count


@dataclass(frozen=True)
class PolyRow:
    """One canonical row ``coeffs . x (<|<=|=) rhs`` of a polytope."""

    coeffs: tuple[Fraction, ...]
    rhs: Fraction
    kind: RowKind


@dataclass(frozen=True)
class Polytope:
    """A conjunction of canonical linear rows over ``n`` numeric variables.

    ``contradictory`` marks polytopes recognized as empty during
    construction (a constant row that fails); backends short-circuit on it.
    """

    rows: tuple[PolyRow, ...]
    n: int
    contradictory: bool = False

    def inequality_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Float (A, b) for the inequality relaxation: LE and strict-LE rows
        plus EQ rows expanded into opposite pairs."""
        a_rows: list[list[float]] = []
        b_vals: list[float] = []
        for row in self.rows:
            coeffs = [float(c) for c in row.coeffs]
            rhs = float(row.rhs)
            a_rows.append(coeffs)
            b_vals.append(rhs)
            if row.kind is RowKind.EQ:
                a_rows.append([-c for c in coeffs])
                b_vals.append(-rhs)
        if not a_rows:
            return np.zeros((0, self.n)), np.zeros(0)
        return np.array(a_rows, dtype=float), np.array(b_vals, dtype=float)

    def split_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Float (A_ub, b_ub, A_eq, b_eq) keeping equality rows as equalities."""
        ub_a: list[list[float]] = []
        ub_b: list[float] = []
        eq_a: list[list[float]] = []
        eq_b: list[float] = []
        for row in self.rows:
            coeffs = [float(c) for c in row.coeffs]
            if row.kind is RowKind.EQ:
                eq_a.append(coeffs)
                eq_b.append(float(row.rhs))
            else:
                ub_a.append(coeffs)
                ub_b.append(float(row.rhs))
        to_arr = lambda rows, width: (
            np.array(rows, dtype=float) if rows else np.zeros((0, width))
        )
        return (
            to_arr(ub_a, self.n),
            np.array(ub_b, dtype=float),
            to_arr(eq_a, self.n),
            np.array(eq_b, dtype=float),
        )


def make_polytope(constraints: Iterable[tuple[LinearConstraint, RowKind]], n: int) -> Polytope:
    """Assemble a polytope from canonical constraints, dropping tautologies,
    deduplicating parallel duplicates (keeping the tightest), and marking the
    result contradictory when a constant row fails."""
    contradictory = False
    # Keyed by (coeffs, kind-class); LE and strict LE share a key so the
    # tighter of the two survives.
    best_le: dict[tuple[Fraction, ...], tuple[Fraction, bool]] = {}
    eq_rows: dict[tuple[Fraction, ...], Fraction] = {}
    order: list[tuple[tuple[Fraction, ...], RowKind]] = []
    for c, kind in constraints:
        if c.is_tautology:
            continue
        if c.is_contradiction:
            contradictory = True
            continue
        if kind is RowKind.EQ:
            prev = eq_rows.get(c.coeffs)
            if prev is None:
                eq_rows[c.coeffs] = c.rhs
                order.append((c.coeffs, RowKind.EQ))
            elif prev != c.rhs:
                contradictory = True
        else:
            strict = kind is RowKind.LE_STRICT
            prev = best_le.get(c.coeffs)
            if prev is None:
                best_le[c.coeffs] = (c.rhs, strict)
                order.append((c.coeffs, RowKind.LE))
            else:
                prhs, pstrict = prev
                if c.rhs < prhs or (c.rhs == prhs and strict and not pstrict):
                    best_le[c.coeffs] = (c.rhs, strict)
    rows: list[PolyRow] = []
    for coeffs, marker in order:
        if marker is RowKind.EQ:
            rows.append(PolyRow(coeffs, eq_rows[coeffs], RowKind.EQ))
        else:
            rhs, strict = best_le[coeffs]
            rows.append(PolyRow(coeffs, rhs, RowKind.LE_STRICT if strict else RowKind.LE))
    return Polytope(tuple(rows), n, contradictory)


def literal_row(constraint: LinearConstraint, polarity: bool):
    """Geometry of one theory literal.

    Returns ``("row", constraint, kind)`` for a polytope row, or
    ``("neq", constraint)`` when the literal is a negated equality, which must
    be deferred (it removes a measure-zero set and only matters to counting).
    The input must be canonical; the output constraint is canonical too
    (negating coprime integers keeps them coprime integers).
    """
    if polarity:
        if constraint.op is Cmp.EQ:
            return ("row", constraint, RowKind.EQ)
        kind = RowKind.LE_STRICT if constraint.strict else RowKind.LE
        return ("row", constraint, kind)
    if constraint.op is Cmp.EQ:
        return ("neq", constraint)
    flipped = LinearConstraint(
        tuple(-c for c in constraint.coeffs),
        Cmp.LE,
        -constraint.rhs,
        strict=not constraint.strict,
    )
    kind = RowKind.LE_STRICT if flipped.strict else RowKind.LE
    return ("row", flipped, kind)


def box_constraints(n: int, word_length: int) -> list[tuple[LinearConstraint, RowKind]]:
    """Two's-complement style bounding box: -2**(w-1) <= x_j <= 2**(w-1)-1."""
    if word_length <= 0:
        return []
    lo = -(1 << (word_length - 1))
    hi = (1 << (word_length - 1)) - 1
    out: list[tuple[LinearConstraint, RowKind]] = []
    for j in range(n):
        unit = tuple(Fraction(int(i == j)) for i in range(n))
        neg = tuple(-u for u in unit)
        out.append((LinearConstraint(unit, Cmp.LE, Fraction(hi)), RowKind.LE))
        out.append((LinearConstraint(neg, Cmp.LE, Fraction(-lo)), RowKind.LE))
    return out


def bunch_polytope(
    bunch: Bunch, formula: Formula, config: "SolverConfig"
) -> tuple[Polytope, list[LinearConstraint]]:
    """Geometric region of a bunch: rows from its theory literals plus the
    word-length box, along with the deferred disequalities.

    Adding literals to a bunch can only shrink the region (monotonicity):
    every literal contributes either a row or a deferred disequality and
    nothing is ever dropped besides exact duplicates and tautologies.
    """
    n = formula.num_numeric_vars
    items: list[tuple[LinearConstraint, RowKind]] = []
    deferred: list[LinearConstraint] = []
    for var in sorted(bunch.assignment):
        constraint = formula.atom_map.get(var)
        if constraint is None:
            continue
        shaped = literal_row(constraint, bunch.assignment[var])
        if shaped[0] == "neq":
            deferred.append(shaped[1])
        else:
            items.append((shaped[1], shaped[2]))
    items.extend(box_constraints(n, config.word_length))
    return make_polytope(items, n), deferred


class OutputMode(Enum):
    TEXT = "text"
    JSON = "json"


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters shared by the driver and the backends."""

    word_length: int = 8
    min_coeff: int = 40
    max_coeff: int = 1600
    backends: frozenset[Backend] = frozenset({Backend.ESTIMATE})
    seed: int = 0
    output_mode: OutputMode = OutputMode.TEXT
    timeout: Optional[float] = None
    burnin: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.word_length <= 62:
            raise ValueError("word length must be within 0..62")
        if self.min_coeff < 1 or self.max_coeff < self.min_coeff:
            raise ValueError("need 1 <= min_coeff <= max_coeff")
        if self.burnin < 0:
            raise ValueError("burn-in must be nonnegative")
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("timeout must be positive")
