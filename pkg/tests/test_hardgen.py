from collections import Counter
from itertools import combinations
from math import factorial

import pytest

from dcsp.algebra import Operation, projection
from dcsp.core import ConstraintLanguage, Relation, ValidationError, brute_force_solve, evaluate
from dcsp.corpus import HORN, NEQ_LANGUAGE
from dcsp.distalgo import distributed_decide
from dcsp.hardgen import ParameterError, choose_n, generate_hard_pair, good_sets, tuple_classes, witness_solution_i2
from dcsp.refinement import same_degree_sequence


@pytest.fixture(scope="module")
def neq_pair():
    return generate_hard_pair(NEQ_LANGUAGE, 2)


def test_singletons():
    fam = good_sets(1, 3, 5)
    assert fam.sets == tuple((i,) for i in range(5))


def test_k2_d4_n6():
    fam = good_sets(2, 4, 6)
    assert len(fam.sets) == 36
    assert all(0 <= x < 12 for s in fam.sets for x in s)
    assert set(Counter(x for s in fam.sets for x in s).values()) == {6}
    assert set(combinations(range(4), 2)) <= set(fam.sets)


def test_parameter_errors_name_inequality():
    with pytest.raises(ParameterError, match=r"n > 2\(d-1\)/k"):
        good_sets(2, 4, 3)
    with pytest.raises(ParameterError, match="n\\^k/\\(kn\\)"):
        good_sets(2, 4, 4)
    with pytest.raises(ParameterError, match="0 < k < d"):
        good_sets(3, 3, 6)


@pytest.mark.parametrize("k,d,n", [(2, 4, 6), (2, 4, 8), (2, 6, 10), (3, 6, 9), (1, 2, 2)])
def test_family_properties(k, d, n):
    fam = good_sets(k, d, n)
    assert len(set(fam.sets)) == n**k
    assert all(len(s) == k and len(set(s)) == k for s in fam.sets)
    assert set(combinations(range(d), k)) <= set(fam.sets)
    assert len(set(Counter(x for s in fam.sets for x in s).values())) == 1


def test_tuple_classes_partition():
    classes = tuple_classes(2, 2, 6)
    assert [c.k for c in classes] == [1, 2, 1]
    assert sorted(t for c in classes for t in c.members) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(factorial(2) % c.k == 0 for c in classes)


def test_smallest_n():
    n, _ = choose_n(2, [1, 2, 1])
    assert n == 6


def test_neq_pair_counts(neq_pair):
    assert neq_pair.n == 6
    assert neq_pair.i1.n == neq_pair.i2.n == 24
    assert neq_pair.i1.m == neq_pair.i2.m == 2 * 6**4


def test_neq_pair_claims(neq_pair):
    assert same_degree_sequence(neq_pair.i1, neq_pair.i2)
    assert brute_force_solve(neq_pair.i1) is None
    assert brute_force_solve(neq_pair.i2) is not None


def test_witnesses(neq_pair):
    for i in (0, 1):
        w = witness_solution_i2(neq_pair, projection(2, 2, i))
        assert evaluate(neq_pair.i2, w)
    first = witness_solution_i2(neq_pair, projection(2, 2, 0))
    assert first[:6] == (0,) * 6 and first[18:] == (1,) * 6
    assert first[6:12] == (0,) * 6 and first[12:18] == (1,) * 6
    with pytest.raises(ValidationError):
        witness_solution_i2(neq_pair, Operation.from_function(2, 3, lambda x, y, z: x ^ y ^ z))
    with pytest.raises(ValidationError):
        witness_solution_i2(neq_pair, Operation.from_function(2, 2, min))


def test_regularity(neq_pair):
    m = neq_pair.i1.m
    stage1 = m // 2
    for inst in (neq_pair.i1, neq_pair.i2):
        first = inst.constraints[:stage1]
        for cl in neq_pair.classes:
            for x in range(cl.offset, cl.offset + cl.k * neq_pair.n):
                hits = sum(x in c.scope for c in first)
                assert hits * neq_pair.n == stage1
                for pos in cl.coordinates:
                    at = sum(c.scope[pos] == x for c in inst.constraints)
                    assert at * neq_pair.n * cl.k == m


def test_identical_verdicts(neq_pair):
    v1 = distributed_decide(neq_pair.i1).verdict
    v2 = distributed_decide(neq_pair.i2).verdict
    assert v1 == v2


def test_requires_no_symmetric_polymorphism():
    with pytest.raises(ParameterError):
        generate_hard_pair(HORN, 2)


def test_other_language():
    # "exactly one of three" has no symmetric binary polymorphism
    one_in_three = Relation("ONE3", 3, frozenset({(1, 0, 0), (0, 1, 0), (0, 0, 1)}))
    gamma = ConstraintLanguage(2, (one_in_three,))
    pair = generate_hard_pair(gamma, 2)
    assert same_degree_sequence(pair.i1, pair.i2)
    assert evaluate(pair.i2, witness_solution_i2(pair, projection(2, 2)))
