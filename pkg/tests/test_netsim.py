import random

import pytest
from hypothesis import given, settings

from dcsp.core import Instance, ValidationError, build_factor_graph, connected_components, relabel
from dcsp.corpus import HORN, NEQ_LANGUAGE, horn_example, horn_suite, neq_cycle, neq_path, symmetric_horn_gadgets
from dcsp.distalgo import decision_algorithm, local_colour_refinement, local_consistency, round_bound
from dcsp.hardgen import generate_hard_pair
from dcsp.netsim import Echo, anonymity_audit, build_network, run
from dcsp.refinement import refine_instance

from conftest import horn_instances, instances


def test_network_sizes(neq_pair):
    net = build_network(neq_pair)
    assert (net.num_agents, net.num_channels) == (3, 2)
    empty = build_network(Instance(1, 2, ()))
    assert (empty.num_agents, empty.num_channels) == (1, 0)


def test_hard_pair_network_size():
    pair = generate_hard_pair(NEQ_LANGUAGE, 2)
    assert build_network(pair.i1).num_agents == 4 * 6 + 2 * 6**4


def test_language_must_cover_relations(neq_pair):
    with pytest.raises(ValidationError):
        build_network(neq_pair, HORN)


def test_echo_terminates_at_zero():
    trace = run(build_network(neq_cycle(3)), Echo(), 10)
    assert trace.rounds == 0 and trace.status == "terminated"
    assert set(trace.terminated_at) == {0}


def test_timeout_is_a_status():
    trace = run(build_network(neq_cycle(5)), decision_algorithm(), 3)
    assert trace.status == "timeout" and trace.rounds == 3
    with pytest.raises(ValidationError):
        run(build_network(neq_cycle(5)), Echo(), -1)


def test_refinement_agents_match_refine():
    for inst in (neq_cycle(4), neq_path(2), horn_example()):
        trace = run(build_network(inst), local_colour_refinement(), 10_000)
        assert tuple(s.rank for s in trace.final_states) == refine_instance(inst).ranks


def test_path_states_diverge():
    inst = neq_path(2)
    trace = run(build_network(inst), local_colour_refinement(), 10_000)
    seq0, seq1 = trace.state_sequence(0), trace.state_sequence(1)
    assert seq0[0] == seq1[0]
    assert seq0 != seq1
    assert anonymity_audit(trace, refine_instance(inst))


def test_deterministic_traces():
    inst = symmetric_horn_gadgets()[1]
    net = build_network(inst, HORN)
    a = run(net, decision_algorithm(), 5000, record_messages=True)
    b = run(net, decision_algorithm(), 5000, record_messages=True, memoize=False)
    assert a.digest() == b.digest()


@settings(max_examples=30)
@given(instances(n_max=6, m_max=7))
def test_distributed_ranks_match_per_component(inst):
    trace = run(build_network(inst), local_colour_refinement(), 10_000)
    assert trace.status == "terminated"
    ranks = refine_instance(inst).ranks
    dist = [s.rank for s in trace.final_states]
    for comp in connected_components(build_factor_graph(inst)):
        pairs = {(dist[v], ranks[v]) for v in comp}
        # a bijection between the two rankings inside each component
        assert len(pairs) == len({a for a, _ in pairs}) == len({b for _, b in pairs})


@settings(max_examples=30)
@given(horn_instances(n_max=6, m_max=7))
def test_anonymity_every_algorithm(inst):
    p = refine_instance(inst)
    net = build_network(inst, HORN)
    for alg in (Echo(), local_colour_refinement(), local_consistency(), decision_algorithm()):
        trace = run(net, alg, round_bound(inst.n, 2) * 2)
        assert anonymity_audit(trace, p)


@settings(max_examples=30)
@given(horn_instances(n_max=6, m_max=7))
def test_permutation_invariance(inst):
    rng = random.Random(inst.n * 1000 + inst.m)
    vp = list(range(inst.n))
    cp = list(range(inst.m))
    rng.shuffle(vp)
    rng.shuffle(cp)
    other = relabel(inst, vp, cp)
    a = run(build_network(inst, HORN), decision_algorithm(), 10_000)
    b = run(build_network(other, HORN), decision_algorithm(), 10_000)
    assert sorted(map(repr, a.final_states)) == sorted(map(repr, b.final_states))
