from collections import Counter

from hypothesis import given

from dcsp.core import build_factor_graph, relabel
from dcsp.corpus import IMPL, NEQ, horn_example, k33, neq_cycle, neq_path, prism
from dcsp.hardgen import generate_hard_pair
from dcsp.corpus import NEQ_LANGUAGE
from dcsp.refinement import partition_refines, refine, refine_instance, same_degree_sequence

from conftest import instances


def naive_colours(inst, rounds, table=None):
    """Colour refinement interning each signature in first-seen order; share ``table`` to compare instances."""
    table = {} if table is None else table
    g = build_factor_graph(inst)
    colour = [table.setdefault(("kind", v < g.n), len(table)) for v in range(g.num_nodes)]
    for k in range(rounds):
        colour = [
            table.setdefault(
                (k, colour[v], tuple(sorted((repr(lab), colour[w]) for w, lab in g.adjacency[v]))), len(table)
            )
            for v in range(g.num_nodes)
        ]
    return colour


def blocks(labels):
    out = {}
    for v, c in enumerate(labels):
        out.setdefault(c, set()).add(v)
    return {frozenset(b) for b in out.values()}


def test_oriented_cycle_one_class():
    p = refine_instance(neq_cycle(4))
    assert len(set(p.ranks[:4])) == 1 and len(set(p.ranks[4:])) == 1


def test_path_splits_endpoints():
    p = refine_instance(neq_path(2))
    assert p.ranks[0] != p.ranks[1]


def test_three_regular_graphs_indistinguishable():
    assert same_degree_sequence(k33(), prism())
    # one is bipartite, the other has triangles
    from dcsp.core import brute_force_solve

    assert brute_force_solve(k33()) is not None and brute_force_solve(prism()) is None


def test_same_degree_examples():
    h = horn_example()
    assert same_degree_sequence(h, h)
    assert not same_degree_sequence(neq_cycle(3), neq_cycle(4))
    assert not same_degree_sequence(neq_cycle(4), neq_path(4))


def test_hard_pair_same_degree():
    pair = generate_hard_pair(NEQ_LANGUAGE, 2)
    assert same_degree_sequence(pair.i1, pair.i2)


def test_partition_refines_examples():
    p = refine_instance(neq_path(3))
    assert partition_refines(p, p)
    assert partition_refines(p.at(1), p.at(0))


@given(instances(n_max=8, m_max=10))
def test_matches_naive_refinement(inst):
    p = refine_instance(inst)
    g = build_factor_graph(inst)
    assert blocks(p.ranks) == blocks(naive_colours(inst, g.num_nodes))


@given(instances(n_max=8, m_max=10))
def test_round_bound_and_monotone(inst):
    p = refine_instance(inst)
    assert p.rounds_to_fixpoint <= 2 * inst.n
    for k in range(1, len(p.history)):
        assert partition_refines(p.at(k), p.at(k - 1))


@given(instances(n_max=7, m_max=9))
def test_isomorphism_invariant(inst):
    perm = [(x * 5 + 3) % inst.n for x in range(inst.n)] if inst.n % 5 else list(range(inst.n))[::-1]
    other = relabel(inst, perm, list(range(inst.m))[::-1])
    a, b = refine_instance(inst), refine_instance(other)
    assert sorted(Counter(a.ranks).values()) == sorted(Counter(b.ranks).values())
    assert same_degree_sequence(inst, other)


@given(instances(n_max=5, m_max=6), instances(n_max=5, m_max=6))
def test_same_degree_against_naive(i1, i2):
    if (i1.n, i1.m, i1.domain_size) != (i2.n, i2.m, i2.domain_size):
        assert not same_degree_sequence(i1, i2)
        return
    rounds = 2 * (i1.n + i1.m) + 2
    table = {}
    expected = Counter(naive_colours(i1, rounds, table)) == Counter(naive_colours(i2, rounds, table))
    if {c.relation.name for c in i1.constraints + i2.constraints} and any(
        c.relation != d.relation and c.relation.name == d.relation.name
        for c in i1.constraints
        for d in i2.constraints
    ):
        return  # clashing relation names cannot be unioned
    assert same_degree_sequence(i1, i2) == expected
