from itertools import product

import pytest
from hypothesis import assume, given, settings, strategies as st

from dcsp.algebra import augmented_language
from dcsp.codec import decode_ints, encode_ints, mask_of, mask_values
from dcsp.core import Constraint, Instance, ValidationError, brute_force_solve, build_factor_graph, evaluate, is_connected
from dcsp.corpus import HORN, NEQ, ONE, horn_example, neq_cycle
from dcsp.distalgo import (
    Walk,
    class_constant_system,
    consistency_fixpoint,
    decode_consistency,
    distributed_decide,
    distributed_search,
    encode_start,
    full_system,
    is_supported,
    local_consistency,
    propagate,
    run_distributed,
    verify_set_system,
)
from dcsp.refinement import refine_instance

from conftest import horn_instances, instances

HORN_PRIME = augmented_language(HORN)


def test_propagate_examples(neq_pair):
    full = full_system(neq_pair)
    assert propagate({0}, Walk((0,)), full, neq_pair) == {0}
    assert propagate({0}, Walk((0, 1), (0,)), full, neq_pair) == {1}
    assert propagate({0}, Walk((0, 1), (0,)), (frozenset({0, 1}), frozenset({0})), neq_pair) == set()


def test_propagate_rejects_bad_walks(neq_pair):
    with pytest.raises(ValidationError):
        propagate({0}, Walk((0, 1), (0,)), full_system(neq_pair), Instance(3, 2, (Constraint((0, 2), NEQ),)))
    with pytest.raises(ValidationError):
        Walk((0, 1), ())


def test_supported_examples(neq_pair):
    p = refine_instance(neq_pair)
    assert all(is_supported(full_system(neq_pair), x, d, p, neq_pair) for x in (0, 1) for d in (0, 1))
    c3 = neq_cycle(3)
    assert not is_supported(full_system(c3), 0, 0, refine_instance(c3), c3)


def test_supported_four_cycle_uses_equivalent_targets():
    # all four variables are equivalent, so the one-step walk x0 -> x1 already
    # ends at an equivalent variable with front {1}
    c4 = neq_cycle(4)
    assert not is_supported(full_system(c4), 0, 0, refine_instance(c4), c4)
    # the closed walk around the cycle alone would keep 0
    assert propagate({0}, Walk((0, 1, 2, 3, 0), (0, 1, 2, 3)), full_system(c4), c4) == {0}


def test_fixpoint_examples():
    h = horn_example()
    res = consistency_fixpoint(h, full_system(h), refine_instance(h))
    assert res.sets[0] == {1} and 1 in res.sets[1] and not res.unsat
    c3 = neq_cycle(3)
    assert consistency_fixpoint(c3, full_system(c3), refine_instance(c3)).unsat
    free = Instance(3, 2, ())
    start = (frozenset({0}), frozenset({0, 1}), frozenset({1}))
    assert consistency_fixpoint(free, start, refine_instance(free)).sets == start


def test_verify_examples():
    h = horn_example()
    s = consistency_fixpoint(h, full_system(h), refine_instance(h)).sets
    assert verify_set_system(h, s)
    assert not verify_set_system(h, full_system(h))
    assert verify_set_system(Instance(2, 3, ()), (frozenset({2}), frozenset({0, 1})))


def test_distributed_examples():
    assert distributed_decide(neq_cycle(3)).verdict == "unsat"
    h = horn_example()
    res = distributed_decide(h, language=HORN)
    assert res.verdict == "sat"
    assert res.sets == consistency_fixpoint(h, full_system(h), refine_instance(h)).sets
    assert distributed_decide(Instance(2, 2, ())).verdict == "sat"


def test_search_examples():
    assert distributed_search(horn_example(), HORN_PRIME).assignment == (1, 1)
    free = Instance(3, 2, ())
    assert distributed_search(free, augmented_language(free.language)).assignment == (0, 0, 0)


def test_search_on_unsat_fails_cleanly():
    gp = augmented_language(neq_cycle(3).language)
    res = distributed_search(neq_cycle(3), gp)
    assert res.verdict in ("unsat", "fail") and res.assignment is None


def test_codec_round_trips():
    assert decode_ints(encode_ints([0, 1, 127, 128, 300000])) == [0, 1, 127, 128, 300000]
    assert mask_values(mask_of({0, 2, 5})) == (0, 2, 5)
    trip = frozenset({(0, 1, 3), (2, 0, 1)})
    assert decode_consistency(encode_start(5, trip))[1:] == (5, trip)


@settings(max_examples=40)
@given(horn_instances(n_max=7, m_max=9))
def test_decide_matches_brute_force(inst):
    res = distributed_decide(inst, language=HORN)
    assert (res.verdict == "sat") == (brute_force_solve(inst) is not None)


@settings(max_examples=40)
@given(horn_instances(n_max=7, m_max=9))
def test_search_valid_and_class_constant(inst):
    if brute_force_solve(inst) is None:
        return
    res = distributed_search(inst, HORN_PRIME)
    a = res.assignment
    assert res.verdict == "sat" and a is not None and evaluate(inst, a)
    ranks = refine_instance(inst).ranks
    assert all(a[x] == a[y] for x in range(inst.n) for y in range(inst.n) if ranks[x] == ranks[y])


@settings(max_examples=40)
@given(instances(n_max=5, m_max=6), st.integers(0, 7))
def test_distributed_consistency_matches_reference(inst, salt):
    k = inst.domain_size

    def rule(rank):
        return [d for d in range(k) if (rank * 3 + d + salt) % 4 != 0] or [0]

    # rank numbers are only global on connected instances
    assume(is_connected(build_factor_graph(inst)))
    p = refine_instance(inst)
    ref = consistency_fixpoint(inst, class_constant_system(p, rule), p)
    res = run_distributed(inst, local_consistency(rule))
    assert res.verdict == ("unsat" if ref.unsat else "sat")
    if not ref.unsat:
        assert res.sets == ref.sets


@settings(max_examples=40)
@given(instances(n_max=5, m_max=6))
def test_pruning_is_safe_and_monotone(inst):
    p = refine_instance(inst)
    res = consistency_fixpoint(inst, full_system(inst), p)
    ranks = p.variable_ranks
    constant_solutions = [
        a
        for a in product(range(inst.domain_size), repeat=inst.n)
        if evaluate(inst, a) and all(a[x] == a[y] for x in range(inst.n) for y in range(inst.n) if ranks[x] == ranks[y])
    ]
    for before, after in zip(res.history, res.history[1:]):
        assert all(a <= b for a, b in zip(after, before))
    for s in res.history:
        for a in constant_solutions:
            assert all(a[x] in s[x] for x in range(inst.n))
