"""Colour refinement (iterated degree) on factor graphs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .core import FactorGraph, Instance, ValidationError, build_factor_graph, disjoint_union

VARIABLE, CONSTRAINT = 0, 1


@dataclass(frozen=True)
class DegreePartition:
    """Per-node ranks after refinement, with the rank history of every round.

    Nodes are numbered as in :class:`FactorGraph`: variables first, then
    constraints.  ``history[k]`` holds the ranks of round ``k``.
    ``rounds_to_fixpoint`` is the least ``k`` whose partition equals that of
    round ``k + 1``; ``ranks`` are those of round ``rounds_to_fixpoint + 1``.
    """

    n: int
    ranks: tuple[int, ...]
    rounds_to_fixpoint: int
    history: tuple[tuple[int, ...], ...]

    @property
    def round(self) -> int:
        return len(self.history) - 1

    @property
    def num_classes(self) -> int:
        return len(set(self.ranks))

    @property
    def variable_ranks(self) -> tuple[int, ...]:
        return self.ranks[: self.n]

    @property
    def class_order(self) -> tuple[int, ...]:
        """Distinct ranks in increasing order; variable classes come first."""
        return tuple(sorted(set(self.ranks)))

    def classes(self) -> list[list[int]]:
        by_rank: dict[int, list[int]] = {}
        for v, r in enumerate(self.ranks):
            by_rank.setdefault(r, []).append(v)
        return [by_rank[r] for r in sorted(by_rank)]

    def variable_classes(self) -> list[list[int]]:
        return [c for c in self.classes() if c[0] < self.n]

    def at(self, k: int) -> "DegreePartition":
        """The partition of round ``k`` (clamped to the recorded history)."""
        k = min(k, self.round)
        return DegreePartition(self.n, self.history[k], self.rounds_to_fixpoint, self.history[: k + 1])

    def equivalent(self, u: int, v: int) -> bool:
        return self.ranks[u] == self.ranks[v]


def degree_values(g: FactorGraph, prev: Sequence[int]) -> list[tuple]:
    """One refinement round: ``(kind, sorted((label, prev rank of neighbour)))`` per node."""
    return [
        (VARIABLE if v < g.n else CONSTRAINT, tuple(sorted((lab, prev[w]) for w, lab in g.adjacency[v])))
        for v in range(g.num_nodes)
    ]


def canonical_ranks(values: Sequence) -> list[int]:
    order = {val: i for i, val in enumerate(sorted(set(values)))}
    return [order[val] for val in values]


def refine(g: FactorGraph) -> DegreePartition:
    ranks = [VARIABLE if v < g.n else CONSTRAINT for v in range(g.num_nodes)]
    ranks = canonical_ranks(ranks)
    history = [tuple(ranks)]
    count = len(set(ranks))
    while True:
        ranks = canonical_ranks(degree_values(g, ranks))
        history.append(tuple(ranks))
        new_count = len(set(ranks))
        assert new_count >= count, "refinement must never merge classes"
        if new_count == count:
            break
        count = new_count
    return DegreePartition(g.n, tuple(ranks), len(history) - 2, tuple(history))


def refine_instance(instance: Instance) -> DegreePartition:
    return refine(build_factor_graph(instance))


def partition_refines(p: DegreePartition, q: DegreePartition) -> bool:
    """Every class of ``p`` lies inside a class of ``q``."""
    if len(p.ranks) != len(q.ranks):
        raise ValidationError("partitions of different graphs")
    image: dict[int, int] = {}
    return all(image.setdefault(a, b) == b for a, b in zip(p.ranks, q.ranks))


def same_degree_sequence(i1: Instance, i2: Instance) -> bool:
    """Is there a class-preserving bijection between the nodes of the two instances?"""
    if i1.domain_size != i2.domain_size or i1.n != i2.n or i1.m != i2.m:
        return False
    try:
        union = disjoint_union(i1, i2)
    except ValidationError:
        return False
    g = build_factor_graph(union)
    p = refine(g)
    side = [0] * g.num_nodes
    for v in range(i1.n, 2 * i1.n):
        side[v] = 1
    for v in range(g.n + i1.m, g.num_nodes):
        side[v] = 1
    counts = Counter((p.ranks[v], side[v]) for v in range(g.num_nodes))
    return all(counts[(r, 0)] == counts[(r, 1)] for r in set(p.ranks))
