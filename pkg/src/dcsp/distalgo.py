"""Walk propagation, supportedness, and the distributed refinement/consistency/search agents.

Set systems are tuples of frozensets, one per variable.  The centralized
functions are the reference for the agent program :class:`DcspProgram`,
which runs inside :func:`dcsp.netsim.run`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

from .codec import Reader, code_label, encode_ints, label_code, mask_of, mask_values, put_varint
from .core import (
    Constraint,
    ConstraintLanguage,
    Instance,
    Relation,
    ValidationError,
    build_factor_graph,
    connected_components,
)
from .netsim import LocalView, Network, Trace, build_network, run
from .refinement import CONSTRAINT, VARIABLE, DegreePartition, refine_instance
from .algebra import singleton_values

SetSystem = tuple[frozenset[int], ...]


def full_system(instance: Instance) -> SetSystem:
    return tuple(frozenset(range(instance.domain_size)) for _ in range(instance.n))


# ---------------------------------------------------------------------------
# centralized reference


@dataclass(frozen=True)
class Walk:
    """``variables[0] constraints[0] variables[1] ... variables[-1]``."""

    variables: tuple[int, ...]
    constraints: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.variables) != len(self.constraints) + 1:
            raise ValidationError("a walk alternates variables and constraints, starting and ending at variables")

    def __len__(self) -> int:
        return len(self.constraints)


def propagate_step(
    B: Iterable[int], c: Constraint, y: int, x: int, s: SetSystem
) -> frozenset[int]:
    """``B +_S (y, c, x)``: values ``e`` at ``x`` reachable from some ``d`` in ``B`` at ``y``."""
    B = set(B)
    out = set()
    for t in c.relation.tuples:
        if not all(t[i] in s[v] for i, v in enumerate(c.scope)):
            continue
        ys = {t[i] for i, v in enumerate(c.scope) if v == y}
        xs = {t[i] for i, v in enumerate(c.scope) if v == x}
        if len(ys) == 1 and len(xs) == 1 and ys <= B:
            out |= xs
    return frozenset(out)


def propagate(B: Iterable[int], p: Walk, s: SetSystem, instance: Instance) -> frozenset[int]:
    front = frozenset(B)
    if not front <= s[p.variables[0]]:
        raise ValidationError("the starting set must lie inside S at the first variable")
    for i, ci in enumerate(p.constraints):
        c = instance.constraints[ci]
        y, x = p.variables[i], p.variables[i + 1]
        if y not in c.scope or x not in c.scope:
            raise ValidationError(f"walk step {y} -> {x} does not pass through constraint {ci}")
        front = propagate_step(front, c, y, x, s)
    return front


def _moves(instance: Instance) -> list[list[tuple[int, int]]]:
    """For every variable, the (constraint, next variable) pairs a walk may take."""
    out: list[list[tuple[int, int]]] = [[] for _ in range(instance.n)]
    for ci, c in enumerate(instance.constraints):
        vs = sorted(set(c.scope))
        for y in vs:
            out[y].extend((ci, x) for x in vs)
    return out


def _violating_walk_exists(
    s: SetSystem,
    x: int,
    d: int,
    instance: Instance,
    targets: Callable[[int], bool],
    moves=None,
) -> bool:
    """BFS over (variable, front) states from ``(x, {d})``; the state space has at most ``n 2^|D|`` states."""
    moves = moves if moves is not None else _moves(instance)
    start = (x, frozenset({d}))
    seen = {start}
    queue = deque([start])
    while queue:
        y, B = queue.popleft()
        for ci, z in moves[y]:
            B2 = propagate_step(B, instance.constraints[ci], y, z, s)
            if targets(z) and d not in B2:
                return True
            state = (z, B2)
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return False


def is_supported(
    s: SetSystem, x: int, d: int, partition: DegreePartition, instance: Instance, moves=None
) -> bool:
    if d not in s[x]:
        raise ValidationError(f"({x}, {d}) is not in the set system")
    rank = partition.ranks[x]
    return not _violating_walk_exists(s, x, d, instance, lambda z: partition.ranks[z] == rank, moves)


@dataclass(frozen=True)
class ConsistencyResult:
    sets: SetSystem
    unsat: bool
    iterations: int
    history: tuple[SetSystem, ...]


def consistency_fixpoint(
    instance: Instance, initial: SetSystem, partition: DegreePartition
) -> ConsistencyResult:
    """Repeatedly drop unsupported pairs, independently in every connected component.

    A component stops at the first iteration that leaves some variable with an
    empty set (unsatisfiable) or changes nothing.  ``iterations`` is the
    largest number of pruning rounds any component ran, counting the last.
    """
    if len(initial) != instance.n:
        raise ValidationError("set system size does not match the instance")
    g = build_factor_graph(instance)
    moves = _moves(instance)
    sets = [frozenset(v) for v in initial]
    history = [tuple(sets)]
    unsat = False
    iterations = 0
    for comp in connected_components(g):
        xs = [v for v in comp if v < instance.n]
        if not xs:
            continue
        it = 0
        while True:
            it += 1
            cur = tuple(sets)
            new = {
                x: frozenset(d for d in cur[x] if is_supported(cur, x, d, partition, instance, moves))
                for x in xs
            }
            changed = any(new[x] != cur[x] for x in xs)
            for x in xs:
                sets[x] = new[x]
            if changed:
                history.append(tuple(sets))
            if any(not new[x] for x in xs):
                unsat = True
                break
            if not changed:
                break
        iterations = max(iterations, it)
    return ConsistencyResult(tuple(sets), unsat, iterations, tuple(history))


def verify_set_system(instance: Instance, s: SetSystem) -> bool:
    """Nonempty sets, and every closed walk at ``x`` keeps ``d`` for every ``d`` in ``S_x``."""
    if len(s) != instance.n or any(not sx for sx in s):
        return False
    moves = _moves(instance)
    return not any(
        _violating_walk_exists(s, x, d, instance, lambda z, x=x: z == x, moves)
        for x in range(instance.n)
        for d in s[x]
    )


def class_constant_system(partition: DegreePartition, rule: Callable[[int], Iterable[int]]) -> SetSystem:
    """The set system giving every variable ``rule(rank of its class)``."""
    return tuple(frozenset(rule(r)) for r in partition.variable_ranks)


# ---------------------------------------------------------------------------
# message formats

TAG_RANK, TAG_FLOOD, TAG_START, TAG_TRIPLETS, TAG_WAVE = 1, 2, 3, 4, 5
WAVE_UNSAT, WAVE_CHANGED = 1, 2

Triplet = tuple[int, int, int]  # (origin rank, origin value, front bitmask)


def _put_triplets(out: bytearray, triplets: frozenset) -> None:
    put_varint(out, len(triplets))
    for rank, d, B in sorted(triplets):
        put_varint(out, rank)
        put_varint(out, d)
        put_varint(out, B)


def _get_triplets(r: Reader) -> frozenset:
    return frozenset((r.varint(), r.varint(), r.varint()) for _ in range(r.varint()))


@lru_cache(maxsize=1 << 16)
def encode_triplets(triplets: frozenset) -> bytes:
    out = bytearray([TAG_TRIPLETS])
    _put_triplets(out, triplets)
    return bytes(out)


def encode_start(smask: int, triplets: frozenset) -> bytes:
    out = bytearray([TAG_START])
    put_varint(out, smask)
    _put_triplets(out, triplets)
    return bytes(out)


@lru_cache(maxsize=1 << 16)
def decode_consistency(msg: bytes) -> tuple[int, int, frozenset]:
    """``(tag, S mask or flags, triplets)``."""
    r = Reader(msg)
    tag = r.varint()
    if tag == TAG_START:
        return tag, r.varint(), _get_triplets(r)
    if tag == TAG_TRIPLETS:
        return tag, 0, _get_triplets(r)
    if tag == TAG_WAVE:
        return tag, r.varint(), frozenset()
    raise ValidationError(f"unexpected message tag {tag}")


@lru_cache(maxsize=1 << 16)
def encode_values(language: ConstraintLanguage, values: frozenset) -> bytes:
    out = bytearray([TAG_FLOOD])
    put_varint(out, len(values))
    for kind, pairs in sorted(values):
        put_varint(out, kind)
        put_varint(out, len(pairs))
        for lab, rank in pairs:
            rel, mask = label_code(language, lab)
            put_varint(out, rel)
            put_varint(out, mask)
            put_varint(out, rank)
    return bytes(out)


@lru_cache(maxsize=1 << 16)
def decode_values(language: ConstraintLanguage, msg: bytes) -> frozenset:
    r = Reader(msg)
    if r.varint() != TAG_FLOOD:
        raise ValidationError("expected a flood message")
    vals = []
    for _ in range(r.varint()):
        kind = r.varint()
        pairs = []
        for _ in range(r.varint()):
            rel, mask, rank = r.varint(), r.varint(), r.varint()
            pairs.append((code_label(language, rel, mask), rank))
        vals.append((kind, tuple(pairs)))
    return frozenset(vals)


def _decode_rank(msg: bytes) -> int:
    r = Reader(msg)
    if r.varint() != TAG_RANK:
        raise ValidationError("expected a rank message")
    return r.varint()


@lru_cache(maxsize=None)
def _transfer(
    relation: Relation,
    groups: tuple[tuple[int, ...], ...],
    smasks: tuple[int, ...],
    src: int,
    dst: int,
    domain_size: int,
) -> tuple[int, ...]:
    """For the walk step from neighbour ``src`` to neighbour ``dst``: front mask at src -> front mask at dst."""
    succ = [0] * domain_size
    for t in relation.tuples:
        if not all(smasks[g] >> t[p - 1] & 1 for g, ps in enumerate(groups) for p in ps):
            continue
        ds = {t[p - 1] for p in groups[src]}
        es = {t[p - 1] for p in groups[dst]}
        if len(ds) == 1 and len(es) == 1:
            d, e = ds.pop(), es.pop()
            succ[d] |= 1 << e
    table = [0] * (1 << domain_size)
    for B in range(1, len(table)):
        low = (B & -B).bit_length() - 1
        table[B] = table[B & (B - 1)] | succ[low]
    return tuple(table)


# ---------------------------------------------------------------------------
# the agent program


class AgentState(NamedTuple):
    phase: str  # "ref", "con" or "done"
    start: int  # round at which the current block or iteration began
    k: int  # refinement block
    rank: int
    count: int
    value: tuple | None
    seen: frozenset
    classes: int  # number of variable classes, known after refinement
    S: int  # variable agents: current set as a bitmask
    nbr: tuple  # constraint agents: S masks of the neighbours, in label order
    marks: int
    M: frozenset
    flags: int
    iteration: int
    run: int  # 0 for the decision run, then one per search step
    si: int  # search: outer index (class rank)
    sj: int  # search: inner index into the tried values
    F: int
    verdict: str
    ref_rounds: int


MODES = ("refine", "consistency", "decide", "search")


class DcspProgram:
    """Deterministic local algorithm for every agent.

    ``refine`` stops after colour refinement; ``consistency`` and
    ``decide`` then run the consistency iterations from the initial set
    system (all of ``D`` for ``decide``); ``search`` follows a successful
    decision with the class-by-class search over ``values``.
    """

    def __init__(
        self,
        mode: str,
        initial_rule: Callable[[int], Iterable[int]] | None = None,
        values: Sequence[int] | None = None,
        name: str | None = None,
    ) -> None:
        if mode not in MODES:
            raise ValidationError(f"unknown mode {mode!r}")
        if mode == "search" and not values:
            raise ValidationError("search needs a nonempty list of values to try")
        self.mode = mode
        self.initial_rule = initial_rule
        self.values = tuple(values or ())
        self.name = name or f"dcsp-{mode}"

    # -- helpers -----------------------------------------------------------

    @staticmethod
    def message_class(state: AgentState) -> str:
        return "refine" if state.phase == "ref" else "consistency"

    def is_terminal(self, state: AgentState) -> bool:
        return state.phase == "done"

    @staticmethod
    def _broadcast(view: LocalView, msg: bytes) -> dict:
        return {lab: msg for lab in view.distinct_labels}

    def initial_state(self, view: LocalView) -> AgentState:
        if view.is_variable:
            rank, count = VARIABLE, 2 if view.labels else 1
        else:
            rank, count = CONSTRAINT, 2
        return AgentState(
            "ref", 0, 1, rank, count, None, frozenset(), 0, 0, (), 0, frozenset(), 0, 0, 0, 0, 0, 0, "", 0
        )

    def step(self, view: LocalView, st: AgentState, t: int, inbox) -> tuple[AgentState, dict]:
        if st.phase == "ref":
            return self._refine_step(view, st, t, inbox)
        if st.phase == "con":
            return self._consistency_step(view, st, t, inbox)
        return st, {}

    # -- colour refinement -------------------------------------------------

    def _refine_step(self, view, st, t, inbox):
        o = t - st.start
        two_n = 2 * view.n
        if o == 0:
            return st, self._broadcast(view, encode_ints((TAG_RANK, st.rank)))
        if o == 1:
            pairs = tuple(sorted((lab, _decode_rank(msg)) for lab, msgs in inbox.items() for msg in msgs))
            value = (view.kind, pairs)
            seen = frozenset({value})
            st = st._replace(value=value, seen=seen)
            return st, self._broadcast(view, encode_values(view.language, seen))
        seen = st.seen.union(*(decode_values(view.language, m) for msgs in inbox.values() for m in msgs))
        if o <= two_n:
            st = st._replace(seen=seen)
            return st, self._broadcast(view, encode_values(view.language, seen))
        order = sorted(seen)
        rank = order.index(st.value)
        if len(seen) != st.count:
            st = st._replace(start=t, k=st.k + 1, rank=rank, count=len(seen), value=None, seen=frozenset())
            return st, self._broadcast(view, encode_ints((TAG_RANK, rank)))
        classes = sum(1 for kind, _ in order if kind == VARIABLE)
        st = st._replace(rank=rank, classes=classes, value=None, seen=frozenset(), ref_rounds=t)
        if self.mode == "refine":
            return st._replace(phase="done"), {}
        full = (1 << view.language.domain_size) - 1
        if self.initial_rule is not None and view.is_variable:
            s0 = mask_of(self.initial_rule(rank))
        else:
            s0 = full
        return self._begin_run(view, st, t, s0, run=0)

    # -- consistency iterations --------------------------------------------

    def _begin_run(self, view, st, t, s0, run):
        st = st._replace(run=run, iteration=0, S=s0 if view.is_variable else 0)
        return self._begin_iteration(view, st, t)

    def _begin_iteration(self, view, st, t):
        st = st._replace(phase="con", start=t, marks=0, flags=0, iteration=st.iteration + 1, nbr=(), M=frozenset())
        if not view.is_variable:
            return st, {}
        M = frozenset((st.rank, d, 1 << d) for d in mask_values(st.S))
        st = st._replace(M=M)
        return st, self._broadcast(view, encode_start(st.S, M))

    def _consistency_step(self, view, st, t, inbox):
        o = t - st.start
        k = view.language.domain_size
        walk_rounds = 2 * view.n * (1 << k)
        T = walk_rounds + 2 * view.n
        if o > walk_rounds:
            flags = st.flags
            for msgs in inbox.values():
                for m in msgs:
                    tag, f, _ = decode_consistency(m)
                    if tag == TAG_WAVE:
                        flags |= f
            st = st._replace(flags=flags)
            if o < T:
                return st, self._broadcast(view, encode_ints((TAG_WAVE, flags)))
            return self._decide(view, st, t)
        if view.is_variable:
            if o % 2:
                return st, {}
            M = frozenset().union(*(decode_consistency(m)[2] for msgs in inbox.values() for m in msgs))
            marks = st.marks
            for rank, d, B in M:
                if rank == st.rank and not B >> d & 1:
                    marks |= 1 << d
            if o < walk_rounds:
                return st._replace(M=M, marks=marks), self._broadcast(view, encode_triplets(M))
            S = st.S & ~marks
            flags = (WAVE_UNSAT if S == 0 else 0) | (WAVE_CHANGED if S != st.S else 0)
            st = st._replace(M=frozenset(), marks=marks, S=S, flags=flags)
            return st, self._broadcast(view, encode_ints((TAG_WAVE, flags)))
        # constraint agent: extend every front through this constraint
        if o % 2 == 0:
            return st, {}
        labels = view.distinct_labels
        decoded = {lab: decode_consistency(msgs[0]) for lab, msgs in inbox.items()}
        nbr = st.nbr
        if o == 1:
            nbr = tuple(decoded[lab][1] if lab in decoded else 0 for lab in labels)
            st = st._replace(nbr=nbr)
        relation = view.language.get(labels[0].relation)
        groups = tuple(lab.positions for lab in labels)
        out = {}
        for dst, lab_x in enumerate(labels):
            Mx = set()
            for src, lab_y in enumerate(labels):
                if lab_y not in decoded:
                    continue
                table = _transfer(relation, groups, nbr, src, dst, k)
                Mx.update((rank, d, table[B]) for rank, d, B in decoded[lab_y][2])
            out[lab_x] = encode_triplets(frozenset(Mx))
        return st, out

    def _decide(self, view, st, t):
        if st.flags & WAVE_CHANGED and not st.flags & WAVE_UNSAT:
            return self._begin_iteration(view, st, t)
        sat = not st.flags & WAVE_UNSAT
        if self.mode != "search":
            return st._replace(phase="done", verdict="sat" if sat else "unsat"), {}
        full = (1 << view.language.domain_size) - 1
        if st.run == 0:
            if not sat:
                return st._replace(phase="done", verdict="unsat"), {}
            st = st._replace(si=0, sj=0, F=full if view.is_variable else 0)
        elif sat:
            F = st.F
            if view.is_variable and st.rank == st.si:
                F = 1 << self.values[st.sj]
            st = st._replace(si=st.si + 1, sj=0, F=F)
        else:
            st = st._replace(sj=st.sj + 1)
            if st.sj == len(self.values):
                return st._replace(phase="done", verdict="fail"), {}
        if st.si >= st.classes:
            return st._replace(phase="done", verdict="sat"), {}
        s0 = 0
        if view.is_variable:
            s0 = 1 << self.values[st.sj] if st.rank == st.si else st.F
        return self._begin_run(view, st, t, s0, run=st.run + 1)


# ---------------------------------------------------------------------------
# constructors and result extraction


def local_colour_refinement() -> DcspProgram:
    return DcspProgram("refine", name="colour-refinement")


def local_consistency(initial_rule: Callable[[int], Iterable[int]] | None = None) -> DcspProgram:
    """Refinement followed by consistency from ``S_x = initial_rule(rank of x)``.

    The rule sees only the class rank, so the initial system is class-constant.
    """
    return DcspProgram("consistency", initial_rule=initial_rule, name="consistency")


def decision_algorithm() -> DcspProgram:
    return DcspProgram("decide", name="decision")


def search_algorithm(gamma_prime: ConstraintLanguage) -> DcspProgram:
    """Search trying the values ``d`` with ``{d}`` in ``gamma_prime``, in increasing order."""
    values = singleton_values(gamma_prime)
    if not values:
        raise ValidationError("the augmented language has no singleton relations")
    return DcspProgram("search", values=values, name="search")


def round_bound(n: int, domain_size: int, mode: str = "decide", values: int | None = None) -> int:
    """Worst-case rounds: refinement, then at most ``n|D| + 1`` iterations per consistency run."""
    refinement = (2 * n + 1) * (2 * n + 1) + 1
    if mode == "refine":
        return refinement
    T = 2 * n * ((1 << domain_size) + 1)
    per_run = (n * domain_size + 1) * T
    runs = 1
    if mode == "search":
        runs += n * (values if values is not None else domain_size)
    return refinement + runs * per_run


@dataclass(frozen=True)
class DistributedResult:
    verdict: str  # "sat", "unsat", "fail" or "timeout"
    ranks: tuple[int, ...]
    sets: SetSystem
    assignment: tuple[int, ...] | None
    rounds: int
    refinement_rounds: int
    max_refine_bytes: int
    max_consistency_bytes: int
    trace: Trace


def summarize(network: Network, trace: Trace) -> DistributedResult:
    states: tuple[AgentState, ...] = trace.final_states
    n = network.graph.n
    if trace.status != "terminated":
        verdict = "timeout"
    else:
        verdicts = {s.verdict for s in states}
        if "fail" in verdicts:
            verdict = "fail"
        elif "unsat" in verdicts:
            verdict = "unsat"
        else:
            verdict = "sat"
    sets = tuple(frozenset(mask_values(s.S)) for s in states[:n])
    assignment = None
    if verdict == "sat" and states and all(s.F and s.F & (s.F - 1) == 0 for s in states[:n]):
        assignment = tuple(s.F.bit_length() - 1 for s in states[:n])
    return DistributedResult(
        verdict=verdict,
        ranks=tuple(s.rank for s in states),
        sets=sets,
        assignment=assignment,
        rounds=trace.rounds,
        refinement_rounds=max((s.ref_rounds for s in states), default=0),
        max_refine_bytes=trace.max_bytes("refine"),
        max_consistency_bytes=trace.max_bytes("consistency"),
        trace=trace,
    )


def run_distributed(
    instance: Instance,
    program: DcspProgram,
    language: ConstraintLanguage | None = None,
    max_rounds: int | None = None,
    record_states: bool = False,
    record_messages: bool = False,
) -> DistributedResult:
    network = build_network(instance, language)
    if max_rounds is None:
        max_rounds = round_bound(instance.n, instance.domain_size, program.mode, len(program.values) or None)
    trace = run(network, program, max_rounds, record_states=record_states, record_messages=record_messages)
    return summarize(network, trace)


def distributed_decide(instance: Instance, **kw) -> DistributedResult:
    return run_distributed(instance, decision_algorithm(), **kw)


def distributed_search(instance: Instance, gamma_prime: ConstraintLanguage, **kw) -> DistributedResult:
    return run_distributed(instance, search_algorithm(gamma_prime), language=gamma_prime, **kw)
