"""Pairs of instances with equal iterated degrees but different satisfiability.

For a language without a symmetric polymorphism of arity ``r`` we build two
instances over the single relation ``U`` (all ``r``-ary polymorphisms written
out over ``D^r``).  Variables come in one group per class of ``D^r`` under
coordinate permutation; a class with ``k`` tuples gets ``k n`` variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations, product
from math import comb, lcm, prod

from .algebra import Operation, URelation, find_symmetric_polymorphism, is_polymorphism, u_relation
from .core import (
    DEFAULT_BUDGET,
    Assignment,
    Constraint,
    ConstraintLanguage,
    DcspError,
    Instance,
    ValidationError,
)


class ParameterError(DcspError, ValueError):
    """Construction parameters violate a required inequality."""


@dataclass(frozen=True)
class GoodSetFamily:
    k: int
    d: int
    n: int
    sets: tuple[tuple[int, ...], ...]

    @property
    def universe(self) -> int:
        return self.k * self.n


def _canonical_rotation(s: tuple[int, ...], size: int) -> tuple[int, ...] | None:
    """Smallest rotation of ``s`` modulo ``size``, or None when ``s`` is fixed by a nonzero rotation."""
    base = frozenset(s)
    best = None
    for i in range(size):
        rot = tuple(sorted((x + i) % size for x in s))
        if i and frozenset(rot) == base:
            return None
        if best is None or rot < best:
            best = rot
    return best


def _audit(family: GoodSetFamily) -> None:
    k, d, n = family.k, family.d, family.n
    sets = set(family.sets)
    if len(family.sets) != n**k or len(sets) != len(family.sets):
        raise ParameterError(f"family has {len(family.sets)} sets, expected n^k = {n**k}")
    missing = [s for s in combinations(range(d), k) if s not in sets]
    if missing:
        raise ParameterError(f"family misses the k-subsets {missing[:3]} of {{0..{d - 1}}}")
    occurrences = [0] * (k * n)
    for s in family.sets:
        for x in s:
            occurrences[x] += 1
    if len(set(occurrences)) != 1:
        raise ParameterError("elements do not occur equally often")


def good_sets(k: int, d: int, n: int) -> GoodSetFamily:
    """``n^k`` k-subsets of ``{0..kn-1}`` containing every k-subset of ``{0..d-1}``, each element equally often."""
    if not 0 < k < d:
        raise ParameterError(f"need 0 < k < d, got k={k}, d={d}")
    size = k * n
    if k == 1:
        if d > size:
            raise ParameterError(f"need kn >= d for the singletons to cover {{0..d-1}} (kn={size}, d={d})")
        family = GoodSetFamily(k, d, n, tuple((i,) for i in range(size)))
        _audit(family)
        return family
    failed = []
    if n % k:
        failed.append(f"n = {n} is not a multiple of k = {k}")
    if not n * k > 2 * (d - 1):
        failed.append(f"need n > 2(d-1)/k, got n={n}, 2(d-1)/k={2 * (d - 1) / k:g}")
    if comb(d, k) > n**k:
        failed.append(f"need C(d,k) <= n^k, got C({d},{k})={comb(d, k)} > {n**k}")
    if failed:
        raise ParameterError("; ".join(failed))
    target = n ** (k - 1) // k  # n^k / (kn) rotation classes
    required = sorted({_canonical_rotation(s, size) for s in combinations(range(d), k)})
    if None in required:
        raise ParameterError("some k-subset of {0..d-1} is fixed by a rotation")
    if len(required) > target:
        raise ParameterError(
            f"the k-subsets of {{0..d-1}} meet {len(required)} rotation classes, "
            f"more than n^k/(kn) = {target}"
        )
    chosen = list(required)
    taken = set(required)
    if len(chosen) < target:
        for s in combinations(range(size), k):
            rep = _canonical_rotation(s, size)
            if rep is None or rep != s or rep in taken:
                continue
            chosen.append(rep)
            taken.add(rep)
            if len(chosen) == target:
                break
    if len(chosen) < target:
        raise ParameterError(f"only {len(chosen)} rotation classes of good sets, need n^k/(kn) = {target}")
    members = sorted(
        tuple(sorted((x + i) % size for x in rep)) for rep in sorted(chosen) for i in range(size)
    )
    family = GoodSetFamily(k, d, n, tuple(members))
    _audit(family)
    return family


@dataclass(frozen=True)
class TupleClass:
    representative: tuple[int, ...]
    members: tuple[tuple[int, ...], ...]
    coordinates: tuple[int, ...]  # positions of the members in the order of D^r
    offset: int  # first variable of this class

    @property
    def k(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class HardPair:
    i1: Instance
    i2: Instance
    gamma: ConstraintLanguage
    r: int
    n: int
    u: URelation
    classes: tuple[TupleClass, ...]

    @property
    def language(self) -> ConstraintLanguage:
        return ConstraintLanguage(self.gamma.domain_size, (self.u.relation,))


def tuple_classes(domain_size: int, r: int, n: int) -> tuple[TupleClass, ...]:
    order = list(product(range(domain_size), repeat=r))
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, t in enumerate(order):
        groups.setdefault(tuple(sorted(t)), []).append(i)
    out = []
    offset = 0
    for coords in sorted(groups.values()):
        members = tuple(order[i] for i in coords)
        out.append(TupleClass(members[0], members, tuple(coords), offset))
        offset += len(coords) * n
    return tuple(out)


def _families(domain_size: int, ks: list[int], n: int) -> list[GoodSetFamily]:
    return [good_sets(k, k * domain_size, n) for k in ks]


def choose_n(domain_size: int, ks: list[int], n_hint: int = 1, limit: int = 256) -> tuple[int, list[GoodSetFamily]]:
    """Least multiple of every class size, at least ``n_hint``, for which all families exist."""
    step = lcm(*ks)
    n = max(step, -(-n_hint // step) * step)
    last = None
    while n <= limit:
        try:
            return n, _families(domain_size, ks, n)
        except ParameterError as exc:
            last = exc
            n += step
    raise ParameterError(f"no valid n up to {limit}: {last}")


def _permuted_coordinates(domain_size: int, r: int) -> list[list[int]]:
    """For every permutation sigma, the map i -> sigma'(i) on the coordinates of U."""
    order = list(product(range(domain_size), repeat=r))
    index = {t: i for i, t in enumerate(order)}
    return [[index[tuple(t[s] for s in sigma)] for t in order] for sigma in permutations(range(r))]


def _build(classes, choices_per_class, width: int, sigmas, rel) -> list[Constraint]:
    stage1 = []
    for choice in product(*choices_per_class):
        scope = [0] * width
        for cl, chosen in zip(classes, choice):
            for coord, element in zip(cl.coordinates, chosen):
                scope[coord] = cl.offset + element
        stage1.append(scope)
    return [Constraint(tuple(s[sp[i]] for i in range(width)), rel) for sp in sigmas for s in stage1]


def generate_hard_pair(
    gamma: ConstraintLanguage, r: int, n_hint: int = 1, budget: int = DEFAULT_BUDGET
) -> HardPair:
    if find_symmetric_polymorphism(gamma, r, budget) is not None:
        raise ParameterError(f"the language has a symmetric polymorphism of arity {r}")
    u = u_relation(gamma, r, budget)
    k_dom = gamma.domain_size
    width = k_dom**r
    probe = tuple_classes(k_dom, r, 1)
    ks = [c.k for c in probe]
    n, families = choose_n(k_dom, ks, n_hint)
    classes = tuple_classes(k_dom, r, n)
    m = prod(len(f.sets) for f in families) * len(list(permutations(range(r))))
    if m > budget:
        raise DcspError(f"the pair would have {m} constraints, over the budget {budget}")
    sigmas = _permuted_coordinates(k_dom, r)
    total_vars = sum(c.k * n for c in classes)
    rel = u.relation
    i1 = Instance(total_vars, k_dom, tuple(_build(classes, [f.sets for f in families], width, sigmas, rel)))
    blocks = [
        tuple(product(*(range(b * n, (b + 1) * n) for b in range(c.k)))) for c in classes
    ]
    i2 = Instance(total_vars, k_dom, tuple(_build(classes, blocks, width, sigmas, rel)))
    return HardPair(i1, i2, gamma, r, n, u, classes)


def witness_solution_i2(pair: HardPair, f: Operation) -> Assignment:
    """Every variable in block ``i`` of a class gets ``f`` of the tuple at that class's ``i``-th coordinate."""
    if f.arity != pair.r or f.domain_size != pair.gamma.domain_size:
        raise ValidationError(f"need an operation of arity {pair.r} over |D|={pair.gamma.domain_size}")
    if not is_polymorphism(f, pair.gamma):
        raise ValidationError("the operation is not a polymorphism of the language")
    values = [0] * pair.i2.n
    for cl in pair.classes:
        for b, t in enumerate(cl.members):
            for x in range(cl.offset + b * pair.n, cl.offset + (b + 1) * pair.n):
                values[x] = f(*t)
    return tuple(values)
