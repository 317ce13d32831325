"""Polymorphisms, indicator problems and the languages derived from them."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from math import comb
from typing import Callable, Sequence

from .core import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    Constraint,
    ConstraintLanguage,
    Instance,
    Relation,
    ValidationError,
    brute_force_solve,
    iter_solutions,
)


@dataclass(frozen=True)
class Operation:
    """An operation ``D^arity -> D`` stored as a table in lexicographic argument order."""

    domain_size: int
    arity: int
    table: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise ValidationError("operation arity must be positive")
        if len(self.table) != self.domain_size**self.arity:
            raise ValidationError("operation table is not total")
        if any(not 0 <= v < self.domain_size for v in self.table):
            raise ValidationError("operation value outside the domain")

    @classmethod
    def from_function(cls, domain_size: int, arity: int, fn: Callable[..., int]) -> "Operation":
        return cls(domain_size, arity, tuple(fn(*args) for args in tuple_order(domain_size, arity)))

    def _index(self, args: Sequence[int]) -> int:
        i = 0
        for a in args:
            i = i * self.domain_size + a
        return i

    def __call__(self, *args: int) -> int:
        if len(args) != self.arity:
            raise ValidationError(f"expected {self.arity} arguments, got {len(args)}")
        return self.table[self._index(args)]

    def apply_counts(self, counts: Sequence[int]) -> int:
        """Value on the argument multiset with ``counts[d]`` copies of ``d``."""
        if sum(counts) != self.arity:
            raise ValidationError("multiset size does not match the arity")
        args = [d for d, k in enumerate(counts) for _ in range(k)]
        return self(*args)


@dataclass(frozen=True)
class MinOperation:
    """``min`` of any arity, kept symbolic so that huge arities stay cheap."""

    domain_size: int
    arity: int

    def __call__(self, *args: int) -> int:
        return min(args)

    def apply_counts(self, counts: Sequence[int]) -> int:
        return next(d for d, k in enumerate(counts) if k > 0)


@dataclass(frozen=True)
class URelation:
    relation: Relation
    tuple_order: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class MinimalImage:
    J: tuple[int, ...]
    witness: Operation


def tuple_order(domain_size: int, r: int) -> list[tuple[int, ...]]:
    return list(product(range(domain_size), repeat=r))


def projection(domain_size: int, arity: int, i: int = 0) -> Operation:
    return Operation.from_function(domain_size, arity, lambda *xs: xs[i])


def identity(domain_size: int) -> Operation:
    return Operation(domain_size, 1, tuple(range(domain_size)))


def _check_domain(f, gamma: ConstraintLanguage) -> None:
    if f.domain_size != gamma.domain_size:
        raise ValidationError(
            f"operation over |D|={f.domain_size} but language over |D|={gamma.domain_size}"
        )


def is_symmetric(f: Operation) -> bool:
    return all(f(*args) == f(*sorted(args)) for args in tuple_order(f.domain_size, f.arity))


def is_polymorphism(f: Operation, gamma: ConstraintLanguage, budget: int = DEFAULT_BUDGET) -> bool:
    _check_domain(f, gamma)
    # a symmetric f only sees multisets of tuples
    symmetric = is_symmetric(f)
    pick = combinations_with_replacement if symmetric else (lambda ts, r: product(ts, repeat=r))
    spent = 0
    for rel in gamma:
        ts = rel.sorted_tuples
        size = comb(len(ts) + f.arity - 1, f.arity) if symmetric else len(ts) ** f.arity
        spent += size
        if spent > budget:
            raise BudgetExceeded(f"polymorphism check needs more than {budget} evaluations")
        for chosen in pick(ts, f.arity):
            image = tuple(f(*(t[i] for t in chosen)) for i in range(rel.arity))
            if image not in rel.tuples:
                return False
    return True


def indicator_problem(gamma: ConstraintLanguage, r: int, budget: int = DEFAULT_BUDGET) -> Instance:
    """Instance over ``D^r`` whose solutions are exactly the ``r``-ary polymorphisms."""
    if r < 1:
        raise ValidationError("order must be positive")
    k = gamma.domain_size
    size = k**r + sum(len(rel) ** r for rel in gamma)
    if size > budget:
        raise BudgetExceeded(f"indicator problem of order {r} is too large ({size} > {budget})")

    def index(t: Sequence[int]) -> int:
        i = 0
        for a in t:
            i = i * k + a
        return i

    cons = []
    for rel in gamma:
        for chosen in product(rel.sorted_tuples, repeat=r):
            scope = tuple(index([t[i] for t in chosen]) for i in range(rel.arity))
            cons.append(Constraint(scope, rel))
    return Instance(k**r, k, tuple(cons))


def operation_from_solution(domain_size: int, r: int, solution: Sequence[int]) -> Operation:
    return Operation(domain_size, r, tuple(solution))


def find_symmetric_polymorphism(
    gamma: ConstraintLanguage, r: int, budget: int = DEFAULT_BUDGET
) -> Operation | None:
    """Search symmetric ``r``-ary polymorphisms on the multiset quotient of ``D^r``.

    One unknown per multiset of ``r`` domain values; one constraint per
    relation and multiset of ``r`` tuples.  The lexicographically least
    solution is returned (for ``r = 1`` the identity, which always works).
    """
    if r < 1:
        raise ValidationError("arity must be positive")
    k = gamma.domain_size
    if r == 1:
        return identity(k)
    multisets = list(combinations_with_replacement(range(k), r))
    if len(multisets) > budget or k**r > budget:
        raise BudgetExceeded(f"symmetric search of arity {r} exceeds budget {budget}")
    ms_index = {ms: i for i, ms in enumerate(multisets)}
    cons = set()
    spent = 0
    for rel in gamma:
        spent += comb(len(rel) + r - 1, r)
        if spent > budget:
            raise BudgetExceeded(f"symmetric search of arity {r} exceeds budget {budget}")
        for chosen in combinations_with_replacement(rel.sorted_tuples, r):
            scope = tuple(ms_index[tuple(sorted(t[i] for t in chosen))] for i in range(rel.arity))
            cons.add(Constraint(scope, rel))
    quotient = Instance(len(multisets), k, tuple(sorted(cons, key=lambda c: (c.relation.name, c.scope))))
    sol = brute_force_solve(quotient, budget)
    if sol is None:
        return None
    f = Operation.from_function(k, r, lambda *args: sol[ms_index[tuple(sorted(args))]])
    assert is_symmetric(f) and is_polymorphism(f, gamma, budget)
    return f


def has_symmetric_all_arities(
    gamma: ConstraintLanguage, max_r: int, budget: int = DEFAULT_BUDGET
) -> bool:
    """Symmetric polymorphisms exist for every arity ``1..max_r``.

    Only a finite prefix of the arities is examined; a ``True`` answer says
    nothing about arities above ``max_r``.
    """
    return all(find_symmetric_polymorphism(gamma, r, budget) is not None for r in range(1, max_r + 1))


def polymorphisms(gamma: ConstraintLanguage, r: int, budget: int = DEFAULT_BUDGET) -> list[Operation]:
    """All ``r``-ary polymorphisms, in lexicographic order of their tables."""
    inst = indicator_problem(gamma, r, budget)
    return [operation_from_solution(gamma.domain_size, r, s) for s in iter_solutions(inst, budget)]


def u_relation(gamma: ConstraintLanguage, r: int, budget: int = DEFAULT_BUDGET, name: str = "U") -> URelation:
    order = tuple(tuple_order(gamma.domain_size, r))
    tuples = frozenset(f.table for f in polymorphisms(gamma, r, budget))
    return URelation(Relation(name, len(order), tuples), order)


def minimal_unary_image(gamma: ConstraintLanguage, budget: int = DEFAULT_BUDGET) -> MinimalImage:
    best = None
    for f in polymorphisms(gamma, 1, budget):
        image = tuple(sorted(set(f.table)))
        key = (len(image), image, f.table)
        if best is None or key < best[0]:
            best = (key, MinimalImage(image, f))
    assert best is not None  # the identity is always a polymorphism
    return best[1]


def augmented_language(gamma: ConstraintLanguage, budget: int = DEFAULT_BUDGET) -> ConstraintLanguage:
    """Add the singletons ``{d}`` for ``d`` in the minimal unary image, and ``D`` itself."""
    J = minimal_unary_image(gamma, budget).J
    k = gamma.domain_size
    rels = list(gamma.relations)
    wanted = [(f"is{d}", frozenset({(d,)})) for d in J] + [("dom", frozenset((d,) for d in range(k)))]
    for name, ext in wanted:
        if any(r.arity == 1 and r.tuples == ext for r in rels):
            continue
        taken = {r.name for r in rels}
        while name in taken:
            name += "_"
        rels.append(Relation(name, 1, ext))
    return ConstraintLanguage(k, tuple(rels))


def singleton_values(gamma: ConstraintLanguage) -> tuple[int, ...]:
    """Values ``d`` such that ``{d}`` is a unary relation of ``gamma``."""
    return tuple(sorted({next(iter(r.tuples))[0] for r in gamma if r.arity == 1 and len(r) == 1}))
