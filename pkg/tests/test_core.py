from itertools import product

import pytest
from hypothesis import given

from dcsp.core import (
    BudgetExceeded,
    Constraint,
    EdgeLabel,
    Instance,
    Relation,
    ValidationError,
    brute_force_solve,
    brute_force_symmetric_solution,
    build_factor_graph,
    connected_components,
    disjoint_union,
    evaluate,
    is_connected,
    iter_solutions,
    relabel,
)
from dcsp.corpus import IMPL, NEQ, ONE, horn_example, neq_cycle
from dcsp.refinement import refine_instance

from conftest import instances

R2 = Relation("R", 2, frozenset({(0, 0), (1, 1)}))


def test_factor_graph_neq_labels(neq_pair):
    g = build_factor_graph(neq_pair)
    assert sorted(g.edges) == [(0, 2, EdgeLabel((1,), "NEQ")), (1, 2, EdgeLabel((2,), "NEQ"))]


def test_repeated_variable_single_channel():
    g = build_factor_graph(Instance(1, 2, (Constraint((0, 0), R2),)))
    assert g.edges == ((0, 1, EdgeLabel((1, 2), "R")),)


def test_triangle_edge_count():
    g = build_factor_graph(neq_cycle(3))
    assert len(g.edges) == 6
    assert all(len(adj) == 2 for adj in g.adjacency)


def test_arity_mismatch_rejected():
    with pytest.raises(ValidationError):
        Constraint((0, 1, 2), NEQ)
    with pytest.raises(ValidationError):
        Instance(1, 2, (Constraint((0, 1), NEQ),))


def test_evaluate_examples(neq_pair):
    assert evaluate(neq_pair, (0, 1))
    assert not evaluate(neq_pair, (0, 0))
    assert not any(evaluate(neq_cycle(3), a) for a in product(range(2), repeat=3))
    with pytest.raises(ValidationError):
        evaluate(neq_pair, (0,))


def test_brute_force_examples():
    assert brute_force_solve(neq_cycle(4)) == (0, 1, 0, 1)
    assert brute_force_solve(neq_cycle(3)) is None
    assert brute_force_solve(Instance(2, 2, ())) == (0, 0)


def test_brute_force_is_lex_least():
    inst = Instance(3, 2, (Constraint((0, 1), IMPL), Constraint((2,), ONE)))
    sols = [a for a in product(range(2), repeat=3) if evaluate(inst, a)]
    assert brute_force_solve(inst) == min(sols)
    assert list(iter_solutions(inst)) == sorted(sols)


def test_budget_error():
    with pytest.raises(BudgetExceeded):
        brute_force_solve(Instance(30, 3, ()), budget=10)


def test_symmetric_solution_examples():
    c4 = neq_cycle(4)
    assert brute_force_symmetric_solution(c4, refine_instance(c4)) is None
    h = horn_example()
    assert brute_force_symmetric_solution(h, refine_instance(h)) == (1, 1)


def test_connectivity():
    assert is_connected(build_factor_graph(Instance(1, 2, (Constraint((0,), ONE),))))
    two = Instance(4, 2, (Constraint((0, 1), NEQ), Constraint((2, 3), NEQ)))
    assert not is_connected(build_factor_graph(two))
    assert len(connected_components(build_factor_graph(two))) == 2
    assert is_connected(build_factor_graph(Instance(1, 2, ())))


@given(instances())
def test_factor_graph_bipartite_simple(inst):
    g = build_factor_graph(inst)
    pairs = [(x, c) for x, c, _ in g.edges]
    assert len(pairs) == len(set(pairs))
    assert all(x < inst.n <= c for x, c in pairs)


@given(instances(n_max=5))
def test_solution_satisfies(inst):
    a = brute_force_solve(inst)
    if a is not None:
        assert evaluate(inst, a)
    else:
        assert not any(evaluate(inst, b) for b in product(range(inst.domain_size), repeat=inst.n))


@given(instances(n_max=5))
def test_symmetric_solution_matches_enumeration(inst):
    p = refine_instance(inst)
    ranks = p.ranks[: inst.n]
    found = brute_force_symmetric_solution(inst, p)
    constant = [
        a
        for a in product(range(inst.domain_size), repeat=inst.n)
        if evaluate(inst, a) and all(a[x] == a[y] for x in range(inst.n) for y in range(inst.n) if ranks[x] == ranks[y])
    ]
    assert (found is None) == (not constant)
    if found is not None:
        assert found in constant


@given(instances())
def test_relabel_preserves_satisfiability(inst):
    perm = list(reversed(range(inst.n)))
    cperm = list(reversed(range(inst.m)))
    other = relabel(inst, perm, cperm)
    assert (brute_force_solve(inst) is None) == (brute_force_solve(other) is None)


def test_disjoint_union_sizes(neq_pair):
    u = disjoint_union(neq_pair, neq_cycle(3))
    assert (u.n, u.m) == (5, 4)
