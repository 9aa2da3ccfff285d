"""CNF conversion with full biconditional (Tseitin) gate encoding.

Boolean structure is a DAG of And/Or/Not nodes over integer literals
(positive for a variable, negative for its negation).  Shared subterms — the
product of `let` bindings upstream — are encoded once: the memo is keyed on
node identity, so each distinct gate gets exactly one auxiliary variable and
one biconditional clause group.  Because gates are encoded as equivalences
(not mere implications), every auxiliary variable's value is forced by the
variables below it; auxiliaries never contribute free choices.

The root conjunction is flattened rather than gated: each conjunct becomes
its own clause (a unit for a literal, a plain disjunction for an Or), which
keeps the variable count down and mirrors what a human encoder would write.
"""
from __future__ import annotations

from typing import Iterable, Optional, Union

BoolNode = Union[bool, int, "And", "Or", "Not"]


class And:
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        self.args = args


class Or:
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        self.args = args


class Not:
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg


def make_not(x: BoolNode) -> BoolNode:
    if isinstance(x, bool):
        return not x
    if isinstance(x, int):
        return -x
    if isinstance(x, Not):
        return x.arg
    return Not(x)


def make_and(args: Iterable[BoolNode]) -> BoolNode:
    flat: list = []
    for a in args:
        if a is True:
            continue
        if a is False:
            return False
        flat.append(a)
    if not flat:
        return True
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def make_or(args: Iterable[BoolNode]) -> BoolNode:
    flat: list = []
    for a in args:
        if a is False:
            continue
        if a is True:
            return True
        flat.append(a)
    if not flat:
        return False
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def make_implies(args: Iterable[BoolNode]) -> BoolNode:
    """Right-associative n-ary implication: (=> a b c) = a -> (b -> c),
    which flattens to (not a) or (not b) or c."""
    items = list(args)
    if not items:
        raise ValueError("implication needs at least one argument")
    return make_or([make_not(a) for a in items[:-1]] + [items[-1]])


def tseitin_cnf(root: BoolNode, num_vars: int) -> tuple[list[tuple[int, ...]], list[int]]:
    """Convert a Boolean DAG into CNF clauses over variables 1..num_vars plus
    fresh auxiliaries numbered from num_vars + 1.

    Returns (clauses, auxiliary variable ids).  A True root yields no
    clauses; a False root yields the empty clause.
    """
    clauses: list[tuple[int, ...]] = []
    aux_ids: list[int] = []
    memo: dict[int, int] = {}
    next_var = num_vars + 1

    def add_clause(lits: Iterable[int]) -> None:
        seen: dict[int, int] = {}
        out: list[int] = []
        for lit in lits:
            prev = seen.get(abs(lit))
            if prev is None:
                seen[abs(lit)] = lit
                out.append(lit)
            elif prev != lit:
                return  # tautological clause: v and not v together
        clauses.append(tuple(out))

    def encode(node) -> int:
        nonlocal next_var
        if isinstance(node, bool):
            raise ValueError("constants must be folded before encoding")
        if isinstance(node, int):
            return node
        if isinstance(node, Not):
            return -encode(node.arg)
        cached = memo.get(id(node))
        if cached is not None:
            return cached
        lits = [encode(a) for a in node.args]
        gate = next_var
        next_var += 1
        aux_ids.append(gate)
        memo[id(node)] = gate
        if isinstance(node, And):
            for lit in lits:
                add_clause((-gate, lit))
            add_clause([gate] + [-lit for lit in lits])
        else:
            for lit in lits:
                add_clause((gate, -lit))
            add_clause([-gate] + lits)
        return gate

    def top_clause(node) -> None:
        """One root-level conjunct becomes one clause (no root gate)."""
        if node is True:
            return
        if node is False:
            clauses.append(())
            return
        if isinstance(node, Or):
            add_clause([encode(a) for a in node.args])
        else:
            add_clause((encode(node),))

    if isinstance(root, And):
        stack = list(root.args)
        units: list = []
        while stack:
            item = stack.pop(0)
            if isinstance(item, And):
                stack = list(item.args) + stack
            else:
                units.append(item)
        for unit in units:
            top_clause(unit)
    else:
        top_clause(root)
    return clauses, aux_ids
