"""Named languages and instance generators used by tests, scripts and the CLI."""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product

from .core import Constraint, ConstraintLanguage, Instance, Relation

NEQ = Relation("NEQ", 2, frozenset({(0, 1), (1, 0)}))
IMPL = Relation("IMPL", 2, frozenset({(0, 0), (0, 1), (1, 1)}))
ONE = Relation("ONE", 1, frozenset({(1,)}))
ZERO = Relation("ZERO", 1, frozenset({(0,)}))

HORN = ConstraintLanguage(2, (IMPL, ONE, ZERO))
NEQ_LANGUAGE = ConstraintLanguage(2, (NEQ,))


def neq_cycle(k: int) -> Instance:
    """``NEQ(x_i, x_{i+1})`` around a cycle, every edge oriented the same way."""
    return Instance(k, 2, tuple(Constraint((i, (i + 1) % k), NEQ) for i in range(k)))


def neq_path(k: int) -> Instance:
    return Instance(k, 2, tuple(Constraint((i, i + 1), NEQ) for i in range(k - 1)))


def symmetric_neq_graph(n: int, edges) -> Instance:
    """A graph as an instance: both orientations of NEQ on every edge."""
    cons = []
    for u, v in edges:
        cons.append(Constraint((u, v), NEQ))
        cons.append(Constraint((v, u), NEQ))
    return Instance(n, 2, tuple(cons))


def k33() -> Instance:
    return symmetric_neq_graph(6, [(a, b) for a in range(3) for b in range(3, 6)])


def prism() -> Instance:
    """Two triangles joined by a perfect matching; 3-regular like K_{3,3}."""
    edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)]
    return symmetric_neq_graph(6, edges)


def horn_example() -> Instance:
    """``ONE(x)`` and ``x -> y``."""
    return Instance(2, 2, (Constraint((0,), ONE), Constraint((0, 1), IMPL)))


def random_instance(
    rng: random.Random, language: ConstraintLanguage, n: int, m: int
) -> Instance:
    rels = language.relations
    cons = []
    for _ in range(m):
        rel = rng.choice(rels)
        cons.append(Constraint(tuple(rng.randrange(n) for _ in range(rel.arity)), rel))
    return Instance(n, language.domain_size, tuple(cons))


def random_language(rng: random.Random, domain_size: int, count: int, max_arity: int = 2) -> ConstraintLanguage:
    rels = []
    for i in range(count):
        arity = rng.randint(1, max_arity)
        space = list(product(range(domain_size), repeat=arity))
        k = rng.randint(1, len(space))
        rels.append(Relation(f"R{i}", arity, frozenset(rng.sample(space, k))))
    return ConstraintLanguage(domain_size, tuple(rels))


@dataclass(frozen=True)
class RandomSpec:
    n_max: int = 10
    m_max: int = 14
    n_min: int = 1
    m_min: int = 0


def random_horn(rng: random.Random, spec: RandomSpec = RandomSpec()) -> Instance:
    n = rng.randint(spec.n_min, spec.n_max)
    m = rng.randint(spec.m_min, spec.m_max)
    return random_instance(rng, HORN, n, m)


def horn_suite(seed: int, count: int, spec: RandomSpec = RandomSpec()) -> list[Instance]:
    rng = random.Random(seed)
    return [random_horn(rng, spec) for _ in range(count)]


def random_suite(seed: int, count: int, n_max: int = 12, m_max: int = 16, d_max: int = 3) -> list[Instance]:
    """Instances over fresh random languages, for refinement checks."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        k = rng.randint(1, d_max)
        lang = random_language(rng, k, rng.randint(1, 3), max_arity=3)
        out.append(random_instance(rng, lang, rng.randint(1, n_max), rng.randint(0, m_max)))
    return out


def symmetric_horn_gadgets() -> list[Instance]:
    """Horn instances with nontrivial classes of equivalent variables."""
    out = []
    for k in (3, 4):
        cycle = tuple(Constraint((i, (i + 1) % k), IMPL) for i in range(k))
        out.append(Instance(k, 2, cycle))
        out.append(Instance(k, 2, cycle + tuple(Constraint((i,), ONE) for i in range(k))))
    # two sources feeding two sinks
    out.append(
        Instance(
            4,
            2,
            (
                Constraint((0,), ONE),
                Constraint((1,), ONE),
                Constraint((0, 2), IMPL),
                Constraint((1, 3), IMPL),
            ),
        )
    )
    return out


def fixed_instances() -> list[Instance]:
    return [
        neq_cycle(3),
        neq_cycle(4),
        neq_cycle(5),
        neq_path(3),
        k33(),
        prism(),
        horn_example(),
        Instance(1, 2, ()),
        Instance(3, 2, ()),
    ] + symmetric_horn_gadgets()


def full_corpus(seed: int = 7, horn_count: int = 300, random_count: int = 300) -> list[Instance]:
    """Fixed instances, random Horn instances and instances over random languages."""
    return (
        fixed_instances()
        + horn_suite(seed, horn_count)
        + random_suite(seed + 1, random_count, n_max=8, m_max=10)
    )
