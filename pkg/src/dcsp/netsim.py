"""Synchronous anonymous message passing over the factor graph.

One agent per factor-graph node.  An agent sees only its kind, the multiset
of labels on its channels, the public constants ``n`` and ``m`` and the
language.  Outgoing messages are keyed by channel label, so channels with
the same label always carry the same message.  Incoming messages are grouped
by label as sorted tuples, so same-labelled channels are indistinguishable
on receipt as well.
"""

from __future__ import annotations

import gc
import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Mapping, Protocol

from .core import (
    ConstraintLanguage,
    EdgeLabel,
    FactorGraph,
    Instance,
    ValidationError,
    build_factor_graph,
)
from .refinement import CONSTRAINT, VARIABLE, DegreePartition

Inbox = Mapping[EdgeLabel, tuple[bytes, ...]]
Outbox = Mapping[EdgeLabel, bytes]


@dataclass(frozen=True)
class LocalView:
    """Everything an agent knows about itself at start-up."""

    kind: int
    labels: tuple[EdgeLabel, ...]
    n: int
    m: int
    language: ConstraintLanguage = field(compare=False)

    @property
    def is_variable(self) -> bool:
        return self.kind == VARIABLE

    @cached_property
    def distinct_labels(self) -> tuple[EdgeLabel, ...]:
        return tuple(sorted(set(self.labels)))


class LocalAlgorithm(Protocol):
    name: str

    def initial_state(self, view: LocalView) -> Hashable: ...

    def step(self, view: LocalView, state: Any, round: int, inbox: Inbox) -> tuple[Any, Outbox]: ...

    def is_terminal(self, state: Any) -> bool: ...


@dataclass(frozen=True)
class Network:
    instance: Instance
    graph: FactorGraph
    language: ConstraintLanguage
    views: tuple[LocalView, ...]
    view_ids: tuple[int, ...] = field(repr=False)

    @property
    def num_agents(self) -> int:
        return len(self.views)

    @property
    def num_channels(self) -> int:
        return len(self.graph.edges)


def build_network(instance: Instance, language: ConstraintLanguage | None = None) -> Network:
    """``language`` must contain every relation used by ``instance``; it is public knowledge."""
    language = language or instance.language
    for c in instance.constraints:
        try:
            rel = language.get(c.relation.name)
        except KeyError:
            raise ValidationError(f"relation {c.relation.name!r} missing from the language") from None
        if rel != c.relation:
            raise ValidationError(f"relation {c.relation.name!r} differs from the language's")
    g = build_factor_graph(instance)
    interned: dict[LocalView, int] = {}
    views, ids = [], []
    for v in range(g.num_nodes):
        view = LocalView(
            VARIABLE if v < g.n else CONSTRAINT,
            tuple(sorted(lab for _, lab in g.adjacency[v])),
            g.n,
            g.m,
            language,
        )
        vid = interned.setdefault(view, len(interned))
        views.append(view)
        ids.append(vid)
    return Network(instance, g, language, tuple(views), tuple(ids))


@dataclass
class Trace:
    algorithm: str
    rounds: int
    status: str
    final_states: tuple
    terminated_at: tuple[int | None, ...]
    states: list[tuple] | None
    message_bytes: list[dict[str, int]]
    total_bytes: int
    messages: list[list[tuple[int, EdgeLabel, bytes]]] | None = None

    @property
    def max_message_bytes(self) -> int:
        return max((b for per in self.message_bytes for b in per.values()), default=0)

    def max_bytes(self, kind: str) -> int:
        return max((per.get(kind, 0) for per in self.message_bytes), default=0)

    def state_sequence(self, node: int) -> list:
        if self.states is None:
            raise ValidationError("trace was recorded without states")
        return [s[node] for s in self.states]

    def to_json_obj(self) -> dict:
        obj = {
            "algorithm": self.algorithm,
            "rounds": self.rounds,
            "status": self.status,
            "terminated_at": list(self.terminated_at),
            "final_states": canonical(self.final_states),
            "message_bytes": self.message_bytes,
            "total_bytes": self.total_bytes,
        }
        if self.states is not None:
            obj["states"] = canonical(self.states)
        if self.messages is not None:
            obj["messages"] = [
                [[v, canonical(lab), msg.hex()] for v, lab, msg in per] for per in self.messages
            ]
        return obj

    def digest(self) -> str:
        text = json.dumps(self.to_json_obj(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def canonical(obj: Any) -> Any:
    """JSON-ready form with sets sorted, so output does not depend on hash order."""
    if isinstance(obj, EdgeLabel):
        return {"positions": list(obj.positions), "relation": obj.relation}
    if isinstance(obj, (frozenset, set)):
        items = [canonical(x) for x in obj]
        return sorted(items, key=lambda x: json.dumps(x, sort_keys=True))
    if hasattr(obj, "_asdict"):
        return {k: canonical(v) for k, v in obj._asdict().items()}
    if isinstance(obj, Mapping):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (tuple, list)):
        return [canonical(x) for x in obj]
    if isinstance(obj, bytes):
        return obj.hex()
    return obj


def run(
    network: Network,
    alg: LocalAlgorithm,
    max_rounds: int,
    record_states: bool = True,
    record_messages: bool = False,
    memoize: bool = True,
) -> Trace:
    """Run synchronous rounds until every agent is terminal or ``max_rounds`` have passed.

    In round ``t`` every active agent steps on the messages sent to it in
    round ``t - 1``.  Messages to agents that are already terminal are
    dropped.  Steps are memoised within a round on (view, state, inbox),
    which is sound because step functions are deterministic.
    """
    with _paused_gc():
        return _run(network, alg, max_rounds, record_states, record_messages, memoize)


@contextmanager
def _paused_gc():
    # rounds allocate millions of short-lived acyclic tuples; cyclic collection only slows them down
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def _run(
    network: Network,
    alg: LocalAlgorithm,
    max_rounds: int,
    record_states: bool = True,
    record_messages: bool = False,
    memoize: bool = True,
) -> Trace:
    if max_rounds < 0:
        raise ValidationError("max_rounds must be non-negative")
    views = network.views
    adjacency = network.graph.adjacency
    num = len(views)
    classify = getattr(alg, "message_class", None)
    states = [alg.initial_state(v) for v in views]
    terminated_at: list[int | None] = [0 if alg.is_terminal(s) else None for s in states]
    active = [v for v in range(num) if terminated_at[v] is None]
    history = [tuple(states)] if record_states else None
    message_bytes: list[dict[str, int]] = []
    all_messages: list | None = [] if record_messages else None
    total = 0
    inboxes: list[dict[EdgeLabel, list[bytes]]] = [{} for _ in range(num)]
    t = 0
    while active and t < max_rounds:
        memo: dict = {}
        outboxes: list[tuple[int, Outbox]] = []
        for v in active:
            raw = inboxes[v]
            inbox = {lab: tuple(sorted(msgs)) for lab, msgs in raw.items()}
            if memoize:
                key = (network.view_ids[v], states[v], frozenset(inbox.items()))
                hit = memo.get(key)
                if hit is None:
                    hit = memo[key] = alg.step(views[v], states[v], t, inbox)
                new_state, outbox = hit
            else:
                new_state, outbox = alg.step(views[v], states[v], t, inbox)
            states[v] = new_state
            if outbox:
                outboxes.append((v, outbox))
        inboxes = [{} for _ in range(num)]
        per_class: dict[str, int] = {}
        sent: list = []
        for v, outbox in outboxes:
            cls = classify(states[v]) if classify else "all"
            for lab, msg in outbox.items():
                size = len(msg)
                if size > per_class.get(cls, -1):
                    per_class[cls] = size
                if record_messages:
                    sent.append((v, lab, msg))
            for w, lab in adjacency[v]:
                msg = outbox.get(lab)
                if msg is not None:
                    total += len(msg)
                    inboxes[w].setdefault(lab, []).append(msg)
        message_bytes.append(per_class)
        if all_messages is not None:
            all_messages.append(sent)
        t += 1
        still = []
        for v in active:
            if alg.is_terminal(states[v]):
                terminated_at[v] = t
            else:
                still.append(v)
        active = still  # inboxes of terminal agents are never read again
        if history is not None:
            history.append(tuple(states))
    return Trace(
        algorithm=alg.name,
        rounds=t,
        status="timeout" if active else "terminated",
        final_states=tuple(states),
        terminated_at=tuple(terminated_at),
        states=history,
        message_bytes=message_bytes,
        total_bytes=total,
        messages=all_messages,
    )


def anonymity_audit(trace: Trace, partition: DegreePartition) -> bool:
    """Equivalent agents went through identical state sequences."""
    if trace.states is None:
        raise ValidationError("anonymity audit needs a trace with recorded states")
    for members in partition.classes():
        first = members[0]
        for snapshot in trace.states:
            s = snapshot[first]
            if any(snapshot[v] != s for v in members[1:]):
                return False
    return True


@dataclass(frozen=True)
class Echo:
    """Terminates immediately; the trivial local algorithm."""

    name: str = "echo"

    def initial_state(self, view: LocalView):
        return ("done", view.kind)

    def step(self, view, state, round, inbox):
        return state, {}

    def is_terminal(self, state) -> bool:
        return True
