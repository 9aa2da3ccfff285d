"""Enumerate the bunches of a formula: disjoint partial Boolean assignments
that jointly cover every theory-consistent model of the CNF skeleton.

The search is a chronological DPLL over all solutions: decide unassigned
variables in ascending index order (trying False first), propagate with
two-watched-literal lists, and on each total assignment consult the linear
arithmetic theory.  Theory conflicts block a shrunk inconsistent core;
consistent assignments are greedily minimized, emitted as a bunch, and
blocked so the search moves on.  Blocking clauses are added to the clause
database mid-search, which chronological backtracking handles by unwinding
decisions until the new clause is no longer falsified.

Disjointness of emitted bunches comes from the blocking clauses: any later
model disagrees with each earlier bunch on at least one pinned literal.
Coverage comes from exhausting the decision tree.
"""
from __future__ import annotations

from typing import Iterable, Iterator, Optional, Sequence

from .errors import check_deadline
from .lp import LpStatus, lp_feasible
from .model import (
    Bunch,
    Formula,
    SolverConfig,
    box_constraints,
    literal_row,
    make_polytope,
)


def theory_check(
    literals: Sequence[tuple[int, bool]],
    formula: Formula,
    config: SolverConfig,
) -> Optional[list[tuple[int, bool]]]:
    """Check whether the theory literals are jointly satisfiable inside the
    word-length box.  Returns None when consistent, otherwise a shrunk
    inconsistent core (a sublist of the input, still inconsistent).

    Negated equalities carve out measure-zero sets; they are never part of a
    conflict and are ignored here.
    """
    ordered = sorted(literals)
    if _feasible(ordered, formula, config):
        return None
    core = list(ordered)
    for lit in ordered:
        trial = [x for x in core if x != lit]
        if len(trial) < len(core) and not _feasible(trial, formula, config):
            core = trial
    return core


def _feasible(literals: Sequence[tuple[int, bool]], formula: Formula, config: SolverConfig) -> bool:
    items = []
    for var, value in literals:
        constraint = formula.atom_map.get(var)
        if constraint is None:
            continue
        shaped = literal_row(constraint, value)
        if shaped[0] == "row":
            items.append((shaped[1], shaped[2]))
    items.extend(box_constraints(formula.num_numeric_vars, config.word_length))
    poly = make_polytope(items, formula.num_numeric_vars)
    if poly.contradictory:
        return False
    return lp_feasible(poly).status is LpStatus.OPTIMAL


def minimize_assignment(
    assignment: dict[int, bool], clauses: Sequence[Sequence[int]]
) -> dict[int, bool]:
    """Greedily drop variables (highest index first) while every clause keeps
    at least one satisfied literal among the still-assigned variables.

    Variables appearing in no clause always drop.  The result is a partial
    assignment all of whose completions satisfy the clauses, assuming the
    input did.
    """
    occ_true: dict[int, list[int]] = {}
    sat_count = [0] * len(clauses)
    for ci, clause in enumerate(clauses):
        for lit in clause:
            var = abs(lit)
            value = assignment.get(var)
            if value is not None and (lit > 0) == value:
                sat_count[ci] += 1
                occ_true.setdefault(var, []).append(ci)

    kept = dict(assignment)
    for var in sorted(assignment, reverse=True):
        pinned = any(sat_count[ci] == 1 for ci in occ_true.get(var, ()))
        if pinned:
            continue
        del kept[var]
        for ci in occ_true.get(var, ()):
            sat_count[ci] -= 1
    return kept


def enumerate_bunches(
    formula: Formula,
    config: SolverConfig,
    deadline: Optional[float] = None,
) -> Iterator[Bunch]:
    """Yield the bunches of a formula in deterministic search order."""
    yield from _Enumerator(formula, config, deadline).run()


class _Enumerator:
    def __init__(self, formula: Formula, config: SolverConfig, deadline: Optional[float]):
        self.formula = formula
        self.config = config
        self.deadline = deadline
        self.nvars = formula.num_bool_vars
        self.clauses: list[list[int]] = []
        self.watches: list[tuple[int, int]] = []  # two watched positions per clause
        self.watch_map: dict[int, list[int]] = {}  # literal -> clause indices watching it
        self.assign: list[Optional[bool]] = [None] * (self.nvars + 1)
        self.trail: list[int] = []  # literals in assignment order
        self.trail_pos: dict[int, int] = {}  # var -> index into trail
        self.decisions: list[tuple[int, int, bool]] = []  # (trail length, var, flipped)
        self.root_units: list[int] = []
        self.unsat = False
        for clause in formula.clauses:
            self._install_clause(list(clause))

    # ---- assignment plumbing -------------------------------------------

    def _lit_value(self, lit: int) -> Optional[bool]:
        v = self.assign[abs(lit)]
        if v is None:
            return None
        return v if lit > 0 else not v

    def _set(self, lit: int) -> None:
        var = abs(lit)
        self.assign[var] = lit > 0
        self.trail_pos[var] = len(self.trail)
        self.trail.append(lit)

    def _unwind_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            lit = self.trail.pop()
            var = abs(lit)
            self.assign[var] = None
            del self.trail_pos[var]

    # ---- clause database -----------------------------------------------

    def _install_clause(self, clause: list[int]) -> None:
        """Add a clause, choosing watches that prefer unassigned/true
        literals and, among false ones, the most recently assigned."""
        if not clause:
            self.unsat = True
            return
        ci = len(self.clauses)
        self.clauses.append(clause)
        if len(clause) == 1:
            self.root_units.append(clause[0])
            self.watches.append((0, 0))
            self.watch_map.setdefault(clause[0], []).append(ci)
            return

        def rank(position: int) -> tuple[int, int]:
            lit = clause[position]
            val = self._lit_value(lit)
            if val is None or val:
                return (0, 0)
            return (1, -self.trail_pos[abs(lit)])

        order = sorted(range(len(clause)), key=rank)
        w1, w2 = order[0], order[1]
        self.watches.append((w1, w2))
        self.watch_map.setdefault(clause[w1], []).append(ci)
        self.watch_map.setdefault(clause[w2], []).append(ci)

    def _clause_state(self, ci: int) -> str:
        clause = self.clauses[ci]
        unassigned = 0
        for lit in clause:
            val = self._lit_value(lit)
            if val:
                return "sat"
            if val is None:
                unassigned += 1
        if unassigned == 0:
            return "conflict"
        return "unit" if unassigned == 1 else "open"

    # ---- propagation ----------------------------------------------------

    def _propagate(self, queue: list[int]) -> bool:
        """Two-watched-literal unit propagation from the given newly assigned
        literals.  Returns False on conflict."""
        head = 0
        while head < len(queue):
            lit = queue[head]
            head += 1
            falsified = -lit
            watchers = self.watch_map.get(falsified)
            if not watchers:
                continue
            kept: list[int] = []
            for ci in watchers:
                clause = self.clauses[ci]
                w1, w2 = self.watches[ci]
                if clause[w1] == falsified:
                    w1, w2 = w2, w1
                # Now clause[w2] == falsified (unless stale after a move).
                if clause[w2] != falsified:
                    kept.append(ci)
                    continue
                first_val = self._lit_value(clause[w1])
                if first_val:
                    kept.append(ci)
                    continue
                moved = False
                for pos in range(len(clause)):
                    if pos == w1 or pos == w2:
                        continue
                    val = self._lit_value(clause[pos])
                    if val is None or val:
                        self.watches[ci] = (w1, pos)
                        self.watch_map.setdefault(clause[pos], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(ci)
                if first_val is None:
                    self._set(clause[w1])
                    queue.append(clause[w1])
                    self.watches[ci] = (w1, w2)
                else:
                    self.watch_map[falsified] = kept + watchers[watchers.index(ci) + 1 :]
                    return False
            self.watch_map[falsified] = kept
        return True

    # ---- chronological search -------------------------------------------

    def _backtrack(self) -> Optional[int]:
        """Undo decisions until one can be flipped; flip it and return its
        literal, or None when the tree is exhausted."""
        while self.decisions:
            mark, var, flipped = self.decisions.pop()
            self._unwind_to(mark)
            if not flipped:
                self.decisions.append((mark, var, True))
                self._set(var)  # second branch: True
                return var
        return None

    def _restore_invariants(self) -> bool:
        """After adding a clause mid-search, unwind until no clause is
        falsified, replaying unit consequences.  Returns False when the
        search space is exhausted.

        Flips must go through `_recover_from_conflict` so the flipped
        literal is propagated: an unpropagated flip leaves stale watches
        behind, and a clause with two stale false watches becomes invisible
        to unit propagation."""
        while True:
            status = self._scan_all()
            if status == "ok":
                return True
            if not self._recover_from_conflict():
                return False

    def _scan_all(self) -> str:
        """Full-database scan: propagate every unit clause, report conflicts."""
        while True:
            progressed = False
            for ci in range(len(self.clauses)):
                state = self._clause_state(ci)
                if state == "conflict":
                    return "conflict"
                if state == "unit":
                    clause = self.clauses[ci]
                    for pos, lit in enumerate(clause):
                        if self._lit_value(lit) is None:
                            self._set(lit)
                            if not self._propagate([lit]):
                                return "conflict"
                            progressed = True
                            break
            if not progressed:
                return "ok"

    def run(self) -> Iterator[Bunch]:
        if self.unsat:
            return
        for lit in self.root_units:
            val = self._lit_value(lit)
            if val is None:
                self._set(lit)
                if not self._propagate([lit]):
                    return
            elif not val:
                return

        while True:
            check_deadline(self.deadline)
            var = self._next_unassigned()
            if var is not None:
                self.decisions.append((len(self.trail), var, False))
                self._set(-var)  # first branch: False
                if not self._propagate([-var]) and not self._recover_from_conflict():
                    return
                continue

            bunch, keep_going = self._handle_total_assignment()
            if bunch is not None:
                yield bunch
            if not keep_going:
                return

    def _next_unassigned(self) -> Optional[int]:
        for v in range(1, self.nvars + 1):
            if self.assign[v] is None:
                return v
        return None

    def _recover_from_conflict(self) -> bool:
        while True:
            flipped = self._backtrack()
            if flipped is None:
                return False
            if self._propagate([flipped]):
                return True

    def _handle_total_assignment(self) -> tuple[Optional[Bunch], bool]:
        """Theory-check the current total assignment.  Either emit a bunch
        (minimized, then blocked) or block the shrunk theory conflict core.
        The boolean says whether the search can continue."""
        theory_lits = [(v, bool(self.assign[v])) for v in sorted(self.formula.atom_map)]
        core = theory_check(theory_lits, self.formula, self.config)
        bunch: Optional[Bunch] = None
        if core is None:
            total = {v: bool(self.assign[v]) for v in range(1, self.nvars + 1)}
            partial = minimize_assignment(total, self.clauses)
            free = sum(1 for v in self.formula.user_bool_ids if v not in partial)
            bunch = Bunch(dict(sorted(partial.items())), free)
            block = [(-v if val else v) for v, val in sorted(partial.items())]
        else:
            block = [(-v if val else v) for v, val in core]
        if not block:
            # An empty blocking clause: nothing outside this bunch remains.
            return bunch, False
        self._install_clause(block)
        return bunch, self._restore_invariants()
