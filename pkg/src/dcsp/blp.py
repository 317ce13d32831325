"""Basic LP relaxation, multiplicative-weights feasibility and rounding.

The program is written as ``B v >= b`` over ``v in [0, 1]^V``.  Columns are
``("x", x, d)`` and ``("c", c, t)``; rows are ``("x", x, s)`` and
``("c", c, i, d, s)`` with ``s = +1`` or ``-1`` for the two halves of each
equality and ``i`` a 1-based scope position.

MWU runs in exact arithmetic.  Every weight update multiplies by
``1 - eta * j / rho`` for an integer loss ``j`` in ``[-rho, rho]``; all these
factors share the denominator ``q * rho`` (with ``eta = p / q``), so the
weights are stored as integers scaled by ``(q * rho)^t``.  Scaling by a common
positive factor changes neither the probability vector nor any sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, lcm, log
from typing import Callable, Hashable, Sequence

from .algebra import MinOperation, find_symmetric_polymorphism
from .core import (
    DEFAULT_BUDGET,
    Assignment,
    ConstraintLanguage,
    DcspError,
    Instance,
    ValidationError,
)
from .refinement import DegreePartition, refine_instance


class RepairError(DcspError):
    """No exactly feasible point was found near the MWU output."""


@dataclass(frozen=True)
class BlpProgram:
    instance: Instance
    columns: tuple[tuple, ...]
    rows: tuple[tuple, ...]
    entries: tuple[tuple[tuple[int, int], ...], ...]  # per row: (column, coefficient)
    b: tuple[int, ...]
    rho: int
    column_entries: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False)

    def dense(self) -> list[list[int]]:
        out = [[0] * len(self.columns) for _ in self.rows]
        for r, ents in enumerate(self.entries):
            for c, a in ents:
                out[r][c] += a
        return out

    def row_values(self, v: Sequence) -> list:
        """``B v`` row by row."""
        return [sum(a * v[c] for c, a in ents) for ents in self.entries]

    def slack(self, v: Sequence) -> list:
        return [bv - bw for bv, bw in zip(self.row_values(v), self.b)]

    def is_feasible(self, v: Sequence, epsilon=0) -> bool:
        return all(0 <= x <= 1 for x in v) and all(s >= -epsilon for s in self.slack(v))

    def column_index(self) -> dict[tuple, int]:
        return {c: i for i, c in enumerate(self.columns)}


def build_blp(instance: Instance) -> BlpProgram:
    k = instance.domain_size
    columns: list[tuple] = [("x", x, d) for x in range(instance.n) for d in range(k)]
    col = {c: i for i, c in enumerate(columns)}
    for ci, c in enumerate(instance.constraints):
        for t in c.relation.sorted_tuples:
            col[("c", ci, t)] = len(columns)
            columns.append(("c", ci, t))
    rows: list[tuple] = []
    entries: list[tuple] = []
    b: list[int] = []

    def equality(key: tuple, ents: list[tuple[int, int]], rhs: int) -> None:
        for s in (1, -1):
            rows.append(key + (s,))
            entries.append(tuple((c, s * a) for c, a in ents))
            b.append(s * rhs)

    for x in range(instance.n):
        equality(("x", x), [(col[("x", x, d)], 1) for d in range(k)], 1)
    for ci, c in enumerate(instance.constraints):
        for i, x in enumerate(c.scope):
            for d in range(k):
                ents = [(col[("c", ci, t)], 1) for t in c.relation.sorted_tuples if t[i] == d]
                ents.append((col[("x", x, d)], -1))
                equality(("c", ci, i + 1, d), ents, 0)
    rho = max([k] + [len(c.relation) for c in instance.constraints])
    by_col: list[list[tuple[int, int]]] = [[] for _ in columns]
    for r, ents in enumerate(entries):
        for c, a in ents:
            by_col[c].append((r, a))
    return BlpProgram(
        instance,
        tuple(columns),
        tuple(rows),
        tuple(entries),
        tuple(b),
        rho,
        tuple(tuple(e) for e in by_col),
    )


@dataclass(frozen=True)
class IndexPartitions:
    """Class keys for columns and rows induced by the refinement ranks."""

    column_keys: tuple[Hashable, ...]
    row_keys: tuple[Hashable, ...]

    @staticmethod
    def _classes(keys) -> list[list[int]]:
        out: dict = {}
        for i, k in enumerate(keys):
            out.setdefault(k, []).append(i)
        return list(out.values())

    def column_classes(self) -> list[list[int]]:
        return self._classes(self.column_keys)

    def row_classes(self) -> list[list[int]]:
        return self._classes(self.row_keys)


def index_partitions(prog: BlpProgram, partition: DegreePartition | None = None) -> IndexPartitions:
    partition = partition or refine_instance(prog.instance)
    n = prog.instance.n
    rank = partition.ranks

    def ckey(c):
        if c[0] == "x":
            return ("x", rank[c[1]], c[2])
        return ("c", rank[n + c[1]], c[2])

    def rkey(w):
        if w[0] == "x":
            return ("x", rank[w[1]], w[2])
        return ("c", rank[n + w[1]]) + w[2:]

    return IndexPartitions(tuple(ckey(c) for c in prog.columns), tuple(rkey(w) for w in prog.rows))


def check_equivalence_preserving(vec: Sequence, keys_or_parts, rows: bool = False) -> bool:
    """Entries with equal class keys are exactly equal.

    ``keys_or_parts`` is an :class:`IndexPartitions` (columns, or rows when
    ``rows`` is true) or a plain sequence of class keys.
    """
    if isinstance(keys_or_parts, IndexPartitions):
        keys = keys_or_parts.row_keys if rows else keys_or_parts.column_keys
    else:
        keys = keys_or_parts
    if len(keys) != len(vec):
        raise ValidationError("vector length does not match the index set")
    first: dict = {}
    return all(first.setdefault(k, x) == x for k, x in zip(keys, vec))


@dataclass(frozen=True)
class OracleAnswer:
    v: tuple[int, ...]
    feasible: bool
    margin: object  # p^T B v - p^T b at the maximiser


def sign_oracle(p: Sequence, prog: BlpProgram) -> OracleAnswer:
    """0/1 maximiser of ``p^T B v`` over the cube, and whether it meets ``p^T b``.

    ``p`` may be any nonnegative weights (a probability vector or a positive
    multiple of one); only signs and comparisons are used, so exact inputs give
    exact answers.
    """
    if len(p) != len(prog.rows):
        raise ValidationError("weight vector length does not match the rows")
    v = []
    gain = 0
    for ents in prog.column_entries:
        score = sum(a * p[r] for r, a in ents)
        if score > 0:
            v.append(1)
            gain += score
        else:
            v.append(0)
    margin = gain - sum(pw * bw for pw, bw in zip(p, prog.b))
    return OracleAnswer(tuple(v), margin >= 0, margin)


@dataclass(frozen=True)
class MwuState:
    t: int
    weights: tuple[int, ...]  # scaled by a common positive factor
    v: tuple[int, ...]
    losses: tuple[int, ...]  # rho times the loss vector: B v - b

    def probabilities(self) -> tuple[Fraction, ...]:
        total = sum(self.weights)
        return tuple(Fraction(w, total) for w in self.weights)


@dataclass(frozen=True)
class MwuResult:
    vector: tuple[Fraction, ...] | None
    feasible: bool
    rounds: int
    converged: bool
    eta: Fraction
    round_cap: int
    history: tuple[MwuState, ...] = ()
    certificate: tuple[int, ...] | None = None  # weights at which the oracle failed


def default_eta(epsilon: Fraction, rho: int) -> Fraction:
    return min(Fraction(1, 2), epsilon / (4 * rho))


def round_cap(epsilon: Fraction, rho: int, rows: int) -> int:
    return max(1, ceil(16 * rho * rho * log(max(rows, 2)) / float(epsilon) ** 2))


def mwu_solve(
    prog: BlpProgram,
    epsilon,
    max_rounds: int | None = None,
    record: bool = False,
    early_stop: bool = True,
) -> MwuResult:
    """Multiplicative weights with the sign oracle, in exact arithmetic.

    Stops as soon as the running average ``v̄`` satisfies ``B v̄ >= b - epsilon``
    (checked exactly), at the round cap, or when the oracle certifies that no
    point of the cube meets the weighted constraint, which proves infeasibility.
    """
    eps = Fraction(epsilon)
    if not 0 < eps <= 2:
        raise ValidationError("epsilon must lie in (0, 2]")
    rho = prog.rho
    eta = default_eta(eps, rho)
    cap = round_cap(eps, rho, len(prog.rows))
    if max_rounds is not None:
        cap = min(cap, max_rounds)
    scale = eta.denominator * rho
    factor = {j: scale - eta.numerator * j for j in range(-rho, rho + 1)}
    weights = [1] * len(prog.rows)
    counts = [0] * len(prog.columns)
    history: list[MwuState] = []
    entries, b = prog.entries, prog.b
    t = 0
    while t < cap:
        answer = sign_oracle(weights, prog)
        if not answer.feasible:
            return MwuResult(None, False, t, False, eta, cap, tuple(history), tuple(weights))
        v = answer.v
        t += 1
        losses = []
        for r, ents in enumerate(entries):
            j = sum(a for c, a in ents if v[c]) - b[r]
            losses.append(j)
        if record:
            history.append(MwuState(t, tuple(weights), v, tuple(losses)))
        weights = [w * factor[j] for w, j in zip(weights, losses)]
        for c, bit in enumerate(v):
            counts[c] += bit
        if early_stop and _within(prog, counts, t, eps):
            break
    vector = tuple(Fraction(c, t) for c in counts) if t else None
    converged = t > 0 and _within(prog, counts, t, eps)
    return MwuResult(vector, True, t, converged, eta, cap, tuple(history))


def _within(prog: BlpProgram, counts: Sequence[int], t: int, eps: Fraction) -> bool:
    # B (counts / t) >= b - eps   <=>   (B counts - t b) * den >= -num * t
    num, den = eps.numerator, eps.denominator
    for ents, bw in zip(prog.entries, prog.b):
        if (sum(a * counts[c] for c, a in ents) - t * bw) * den < -num * t:
            return False
    return True


# ---------------------------------------------------------------------------
# exact repair and rounding


def _rref_solve(A: list[list[Fraction]], rhs: list[Fraction]):
    """Reduced row echelon form of ``[A | rhs]``; returns (pivots, rows) or None if inconsistent."""
    M = [row[:] + [r] for row, r in zip(A, rhs)]
    ncols = len(A[0]) if A else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if pr is None:
            continue
        M[r], M[pr] = M[pr], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    if any(all(x == 0 for x in row[:-1]) and row[-1] != 0 for row in M[r:]):
        return None
    return pivots, M[:r]


REPAIR_THRESHOLDS = (0, Fraction(1, 4), Fraction(1, 2), 1, 2, 4, 8)


def repair(prog: BlpProgram, approx: Sequence[Fraction], parts: IndexPartitions, epsilon=Fraction(1, 100)) -> tuple[Fraction, ...]:
    """An exactly feasible, class-preserving point near ``approx``.

    Works on one unknown per column class.  Classes whose value is at most
    ``tau * epsilon`` are fixed to 0; the remaining equalities are solved by
    exact elimination with the largest entries as pivots and the other
    entries kept at their approximate values.  Thresholds are tried in
    increasing order until the solution is nonnegative.
    """
    eps = Fraction(epsilon)
    classes = parts.column_classes()
    rep_value = [Fraction(approx[cl[0]]) for cl in classes]
    # one equation per row class, using the "+" half of each equality
    seen_rows: set = set()
    eq_rows = []
    for w, key in enumerate(parts.row_keys):
        if prog.rows[w][-1] == 1 and key not in seen_rows:
            seen_rows.add(key)
            eq_rows.append(w)
    col_class = {}
    for k, cl in enumerate(classes):
        for c in cl:
            col_class[c] = k
    full_A = []
    for w in eq_rows:
        row = [Fraction(0)] * len(classes)
        for c, a in prog.entries[w]:
            row[col_class[c]] += a
        full_A.append(row)
    rhs = [Fraction(prog.b[w]) for w in eq_rows]
    for tau in REPAIR_THRESHOLDS:
        support = [k for k in range(len(classes)) if rep_value[k] > tau * eps]
        support.sort(key=lambda k: (-rep_value[k], k))
        if not support:
            continue
        A = [[row[k] for k in support] for row in full_A]
        solved = _rref_solve(A, rhs)
        if solved is None:
            continue
        pivots, R = solved
        free = [j for j in range(len(support)) if j not in set(pivots)]
        u = [Fraction(0)] * len(classes)
        for j in free:
            u[support[j]] = rep_value[support[j]]
        for row, pc in zip(R, pivots):
            u[support[pc]] = row[-1] - sum(row[j] * rep_value[support[j]] for j in free)
        if any(x < 0 or x > 1 for x in u):
            continue
        out = [Fraction(0)] * len(prog.columns)
        for k, cl in enumerate(classes):
            for c in cl:
                out[c] = u[k]
        if prog.is_feasible(out) and all(s == 0 for s in prog.slack(out)):
            return tuple(out)
    raise RepairError("could not repair the MWU point into an exactly feasible one")


SymmetricProvider = Callable[[int], object]


def min_provider(domain_size: int) -> SymmetricProvider:
    return lambda arity: MinOperation(domain_size, arity)


def search_provider(gamma: ConstraintLanguage, budget: int = DEFAULT_BUDGET) -> SymmetricProvider:
    def provide(arity: int):
        f = find_symmetric_polymorphism(gamma, arity, budget)
        if f is None:
            raise DcspError(f"no symmetric polymorphism of arity {arity}")
        return f

    return provide


def common_denominator(v: Sequence[Fraction]) -> int:
    return lcm(*(Fraction(x).denominator for x in v)) if v else 1


def round_to_assignment(instance: Instance, v: Sequence, f_provider: SymmetricProvider) -> Assignment:
    """``x`` gets ``f`` applied to the multiset holding ``N v(x, d)`` copies of each ``d``."""
    prog = build_blp(instance)
    v = [Fraction(x) for x in v]
    if len(v) != len(prog.columns):
        raise ValidationError("vector length does not match the program's columns")
    if not prog.is_feasible(v) or any(s != 0 for s in prog.slack(v)):
        raise ValidationError("rounding needs an exactly feasible point")
    N = common_denominator(v)
    f = f_provider(N)
    k = instance.domain_size
    out = []
    for x in range(instance.n):
        counts = [int(v[x * k + d] * N) for d in range(k)]
        out.append(f.apply_counts(counts))
    return tuple(out)


@dataclass(frozen=True)
class BlpOutcome:
    feasible: bool
    mwu: MwuResult
    exact: tuple[Fraction, ...] | None = None
    assignment: Assignment | None = None
    error: str | None = None


def solve_and_round(
    instance: Instance,
    epsilon=Fraction(1, 100),
    f_provider: SymmetricProvider | None = None,
    max_rounds: int | None = None,
) -> BlpOutcome:
    prog = build_blp(instance)
    res = mwu_solve(prog, epsilon, max_rounds=max_rounds)
    if not res.feasible or res.vector is None:
        return BlpOutcome(False, res)
    if f_provider is None:
        return BlpOutcome(True, res)
    try:
        exact = repair(prog, res.vector, index_partitions(prog), epsilon)
        nu = round_to_assignment(instance, exact, f_provider)
    except DcspError as exc:
        return BlpOutcome(True, res, error=str(exc))
    return BlpOutcome(True, res, exact, nu)
