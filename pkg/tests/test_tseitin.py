"""CNF conversion: model-preservation checked by exhaustive truth tables."""
import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from volcount.tseitin import And, Not, Or, make_and, make_implies, make_not, make_or, tseitin_cnf

from oracles import clause_true

NUM_INPUTS = 4


def node_truth(node, assignment) -> bool:
    if isinstance(node, bool):
        return node
    if isinstance(node, int):
        return assignment[node] if node > 0 else not assignment[-node]
    if isinstance(node, Not):
        return not node_truth(node.arg, assignment)
    if isinstance(node, And):
        return all(node_truth(a, assignment) for a in node.args)
    if isinstance(node, Or):
        return any(node_truth(a, assignment) for a in node.args)
    raise TypeError(node)


nodes = st.recursive(
    st.one_of(st.integers(1, NUM_INPUTS), st.booleans()),
    lambda children: st.one_of(
        st.builds(lambda a: make_not(a), children),
        st.builds(lambda args: make_and(args), st.lists(children, min_size=1, max_size=3)),
        st.builds(lambda args: make_or(args), st.lists(children, min_size=1, max_size=3)),
        st.builds(lambda a, b: make_implies([a, b]), children, children),
    ),
    max_leaves=12,
)


@given(nodes)
@settings(max_examples=200, deadline=None)
def test_cnf_preserves_models(node):
    clauses, aux_ids = tseitin_cnf(node, NUM_INPUTS)
    aux_ids = list(aux_ids)
    for bits in itertools.product((False, True), repeat=NUM_INPUTS):
        assignment = {v: bits[v - 1] for v in range(1, NUM_INPUTS + 1)}
        expected = node_truth(node, assignment)
        extensions = 0
        for aux_bits in itertools.product((False, True), repeat=len(aux_ids)):
            full = dict(assignment)
            full.update(zip(aux_ids, aux_bits))
            if all(clause_true(c, full) for c in clauses):
                extensions += 1
        # full biconditional gates: satisfying aux values are unique
        assert extensions == (1 if expected else 0)


@given(nodes)
@settings(max_examples=200, deadline=None)
def test_clauses_are_clean(node):
    clauses, aux_ids = tseitin_cnf(node, NUM_INPUTS)
    top = NUM_INPUTS + len(aux_ids)
    for clause in clauses:
        vars_seen = [abs(l) for l in clause]
        assert len(set(vars_seen)) == len(vars_seen)  # no duplicate variable
        assert all(1 <= v <= top for v in vars_seen)


def test_root_conjunction_flattens():
    clauses, aux = tseitin_cnf(make_and([1, make_or([2, 3])]), 3)
    assert aux == []
    assert sorted(clauses) == [(1,), (2, 3)]


def test_root_or_is_single_clause():
    clauses, aux = tseitin_cnf(make_or([1, make_not(2), 3]), 3)
    assert aux == []
    assert len(clauses) == 1
    assert set(clauses[0]) == {1, -2, 3}


def test_nested_gate_gets_aux():
    node = make_or([make_and([1, 2]), 3])
    clauses, aux = tseitin_cnf(node, 3)
    assert len(aux) == 1
    assert aux[0] == 4


def test_constant_folding():
    assert make_and([True, 1]) == 1
    assert make_and([False, 1]) is False
    assert make_or([True, 1]) is True
    assert make_or([False, 1]) == 1
    assert make_not(True) is False
    assert make_not(make_not(1)) == 1


def test_constant_roots():
    assert tseitin_cnf(True, 2) == ([], [])
    clauses, aux = tseitin_cnf(False, 2)
    assert clauses == [()]
    assert aux == []


def test_shared_subterm_encoded_once():
    shared = make_or([1, 2])
    node = make_and([make_or([shared, 3]), make_or([shared, make_not(3)])])
    clauses, aux = tseitin_cnf(node, 3)
    assert len(aux) == 1  # one gate for the shared disjunction
