"""CSP instances, factor graphs, evaluation and the backtracking oracle."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

Assignment = tuple[int, ...]

DEFAULT_BUDGET = 2**26


class DcspError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DcspError, ValueError):
    pass


class BudgetExceeded(DcspError):
    """Raised when an exhaustive search would exceed its evaluation budget."""


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    tuples: frozenset[tuple[int, ...]]

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise ValidationError(f"relation {self.name!r}: arity must be positive")
        object.__setattr__(self, "tuples", frozenset(tuple(t) for t in self.tuples))
        for t in self.tuples:
            if len(t) != self.arity:
                raise ValidationError(
                    f"relation {self.name!r}: tuple {t} does not have arity {self.arity}"
                )

    @classmethod
    def of(cls, name: str, tuples: Iterable[Sequence[int]]) -> "Relation":
        ts = [tuple(t) for t in tuples]
        if not ts:
            raise ValidationError("Relation.of needs at least one tuple to infer the arity")
        return cls(name, len(ts[0]), frozenset(ts))

    @property
    def sorted_tuples(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self.tuples))

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, t: object) -> bool:
        return t in self.tuples


@dataclass(frozen=True)
class ConstraintLanguage:
    domain_size: int
    relations: tuple[Relation, ...] = ()

    def __post_init__(self) -> None:
        if self.domain_size < 1:
            raise ValidationError("domain size must be at least 1")
        rels = tuple(sorted(self.relations, key=lambda r: r.name))
        seen: dict[str, Relation] = {}
        for r in rels:
            if r.name in seen:
                raise ValidationError(f"duplicate relation name {r.name!r}")
            seen[r.name] = r
            for t in r.tuples:
                if any(not 0 <= v < self.domain_size for v in t):
                    raise ValidationError(f"relation {r.name!r} uses values outside the domain")
        object.__setattr__(self, "relations", rels)

    def __iter__(self) -> Iterator[Relation]:
        return iter(self.relations)

    def __len__(self) -> int:
        return len(self.relations)

    def get(self, name: str) -> Relation:
        for r in self.relations:
            if r.name == name:
                return r
        raise KeyError(name)

    def index(self, name: str) -> int:
        for i, r in enumerate(self.relations):
            if r.name == name:
                return i
        raise KeyError(name)

    @property
    def domain(self) -> range:
        return range(self.domain_size)


@dataclass(frozen=True)
class Constraint:
    scope: tuple[int, ...]
    relation: Relation

    def __post_init__(self) -> None:
        object.__setattr__(self, "scope", tuple(self.scope))
        if len(self.scope) != self.relation.arity:
            raise ValidationError(
                f"scope {self.scope} does not match arity {self.relation.arity} "
                f"of {self.relation.name!r}"
            )


@dataclass(frozen=True)
class Instance:
    n: int
    domain_size: int
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.n < 0:
            raise ValidationError("variable count must be non-negative")
        if self.domain_size < 1:
            raise ValidationError("domain size must be at least 1")
        names: dict[str, Relation] = {}
        for c in self.constraints:
            for x in c.scope:
                if not 0 <= x < self.n:
                    raise ValidationError(f"variable {x} out of range for n={self.n}")
            prev = names.setdefault(c.relation.name, c.relation)
            if prev != c.relation:
                raise ValidationError(f"two different relations named {c.relation.name!r}")
            for t in c.relation.tuples:
                if any(not 0 <= v < self.domain_size for v in t):
                    raise ValidationError(
                        f"relation {c.relation.name!r} uses values outside the domain"
                    )

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def language(self) -> ConstraintLanguage:
        rels = {c.relation.name: c.relation for c in self.constraints}
        return ConstraintLanguage(self.domain_size, tuple(rels.values()))

    def constraints_of(self, x: int) -> list[int]:
        return [i for i, c in enumerate(self.constraints) if x in c.scope]


class _Label(NamedTuple):
    positions: tuple[int, ...]
    relation: str


class EdgeLabel(_Label):
    """Label of a factor-graph edge: occupied scope positions (1-based) and relation symbol.

    A tuple underneath, so hashing and ordering stay in C: labels key every inbox.
    """

    __slots__ = ()

    def __new__(cls, positions: tuple[int, ...], relation: str) -> "EdgeLabel":
        if not positions:
            raise ValidationError("edge label needs at least one position")
        return super().__new__(cls, tuple(positions), relation)


@dataclass(frozen=True)
class FactorGraph:
    """Bipartite graph on variables ``0..n-1`` and constraints ``n..n+m-1``."""

    n: int
    m: int
    edges: tuple[tuple[int, int, EdgeLabel], ...]
    adjacency: tuple[tuple[tuple[int, EdgeLabel], ...], ...] = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return self.n + self.m

    def is_variable(self, node: int) -> bool:
        return node < self.n

    def constraint_node(self, c: int) -> int:
        return self.n + c


def edge_label(constraint: Constraint, x: int) -> EdgeLabel:
    positions = tuple(i + 1 for i, y in enumerate(constraint.scope) if y == x)
    return EdgeLabel(positions, constraint.relation.name)


def build_factor_graph(instance: Instance) -> FactorGraph:
    n, m = instance.n, instance.m
    adj: list[list[tuple[int, EdgeLabel]]] = [[] for _ in range(n + m)]
    edges = []
    for ci, c in enumerate(instance.constraints):
        if len(c.scope) != c.relation.arity:
            raise ValidationError("arity mismatch")
        node = n + ci
        for x in dict.fromkeys(c.scope):
            label = edge_label(c, x)
            edges.append((x, node, label))
            adj[x].append((node, label))
            adj[node].append((x, label))
    return FactorGraph(n, m, tuple(edges), tuple(tuple(a) for a in adj))


def is_connected(g: FactorGraph) -> bool:
    total = g.num_nodes
    if total == 0:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w, _ in g.adjacency[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == total


def connected_components(g: FactorGraph) -> list[list[int]]:
    comp = [-1] * g.num_nodes
    out: list[list[int]] = []
    for s in range(g.num_nodes):
        if comp[s] >= 0:
            continue
        comp[s] = len(out)
        members = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w, _ in g.adjacency[v]:
                if comp[w] < 0:
                    comp[w] = comp[s]
                    members.append(w)
                    queue.append(w)
        out.append(sorted(members))
    return out


def _as_assignment(instance: Instance, a: Sequence[int] | Mapping[int, int]) -> Assignment:
    if isinstance(a, Mapping):
        missing = [x for x in range(instance.n) if x not in a]
        if missing:
            raise ValidationError(f"assignment is partial: no value for variables {missing}")
        values = tuple(a[x] for x in range(instance.n))
    else:
        values = tuple(a)
        if len(values) != instance.n:
            raise ValidationError(
                f"assignment has {len(values)} values but the instance has {instance.n} variables"
            )
    for v in values:
        if not 0 <= v < instance.domain_size:
            raise ValidationError(f"value {v} outside the domain")
    return values


def evaluate(instance: Instance, a: Sequence[int] | Mapping[int, int]) -> bool:
    values = _as_assignment(instance, a)
    return all(
        tuple(values[x] for x in c.scope) in c.relation.tuples for c in instance.constraints
    )


class _Backtracker:
    """Lexicographic backtracking with prefix-consistency pruning.

    Variables are assigned in index order and values in increasing order, so
    solutions come out in lexicographic order.  When variable ``x`` is
    assigned, every constraint containing ``x`` is checked for a tuple that
    agrees with the assigned part of its scope.
    """

    def __init__(self, instance: Instance, budget: int) -> None:
        self.instance = instance
        self.budget = budget
        self.nodes = 0
        checks: list[list[tuple[tuple[int, ...], frozenset]]] = [[] for _ in range(instance.n)]
        for c in instance.constraints:
            for x in sorted(set(c.scope)):
                pos = tuple(i for i, y in enumerate(c.scope) if y <= x)
                allowed = frozenset(tuple(t[i] for i in pos) for t in c.relation.tuples)
                checks[x].append((tuple(c.scope[i] for i in pos), allowed))
        self.checks = checks

    def solutions(self) -> Iterator[Assignment]:
        n = self.instance.n
        values = [0] * n
        if n == 0:
            if all(() in c.relation.tuples for c in self.instance.constraints):
                yield ()
            return
        dom = self.instance.domain_size
        x = 0
        nxt = [0] * n
        while x >= 0:
            if nxt[x] >= dom:
                nxt[x] = 0
                x -= 1
                continue
            values[x] = nxt[x]
            nxt[x] += 1
            self.nodes += 1
            if self.nodes > self.budget:
                raise BudgetExceeded(f"search exceeded budget of {self.budget} evaluations")
            if all(tuple(values[y] for y in sc) in allowed for sc, allowed in self.checks[x]):
                if x == n - 1:
                    yield tuple(values)
                else:
                    x += 1


def iter_solutions(instance: Instance, budget: int = DEFAULT_BUDGET) -> Iterator[Assignment]:
    """All satisfying assignments in lexicographic order."""
    return _Backtracker(instance, budget).solutions()


def brute_force_solve(instance: Instance, budget: int = DEFAULT_BUDGET) -> Assignment | None:
    """Lexicographically least solution, or ``None``.  Never guesses: raises on budget."""
    return next(iter_solutions(instance, budget), None)


def quotient_instance(instance: Instance, classes: Sequence[int]) -> tuple[Instance, list[int]]:
    """Merge variables with equal class keys into one variable each.

    Returns the quotient instance and, per original variable, its quotient index.
    Quotient variables are ordered by class key.
    """
    keys = sorted(set(classes))
    index = {k: i for i, k in enumerate(keys)}
    to_q = [index[classes[x]] for x in range(instance.n)]
    cons = tuple(
        Constraint(tuple(to_q[x] for x in c.scope), c.relation) for c in instance.constraints
    )
    return Instance(len(keys), instance.domain_size, cons), to_q


def brute_force_symmetric_solution(
    instance: Instance, partition, budget: int = DEFAULT_BUDGET
) -> Assignment | None:
    """Least solution that is constant on the variable classes of ``partition``."""
    q, to_q = quotient_instance(instance, partition.ranks[: instance.n])
    sol = brute_force_solve(q, budget)
    if sol is None:
        return None
    return tuple(sol[to_q[x]] for x in range(instance.n))


def relabel(instance: Instance, var_perm: Sequence[int], con_perm: Sequence[int]) -> Instance:
    """Rename variable ``x`` to ``var_perm[x]`` and move constraint ``i`` to slot ``con_perm[i]``."""
    cons: list[Constraint | None] = [None] * instance.m
    for i, c in enumerate(instance.constraints):
        cons[con_perm[i]] = Constraint(tuple(var_perm[x] for x in c.scope), c.relation)
    return Instance(instance.n, instance.domain_size, tuple(cons))  # type: ignore[arg-type]


def disjoint_union(a: Instance, b: Instance) -> Instance:
    if a.domain_size != b.domain_size:
        raise ValidationError("instances have different domains")
    shifted = tuple(Constraint(tuple(x + a.n for x in c.scope), c.relation) for c in b.constraints)
    return Instance(a.n + b.n, a.domain_size, a.constraints + shifted)
