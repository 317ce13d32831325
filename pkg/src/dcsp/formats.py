"""Reading and writing instance, language and assignment files.

Text format::

    domain 2
    variables 3
    relation NEQ 2
    0 1
    1 0
    end
    constraint NEQ 0 1
    constraint NEQ 1 2

``variables`` is optional on input (defaults to one past the largest
variable used).  Files ending in ``.json`` use the same schema as an object
with keys ``domain``, ``variables``, ``relations`` and ``constraints``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

from .core import (
    Assignment,
    Constraint,
    ConstraintLanguage,
    DcspError,
    Instance,
    Relation,
    ValidationError,
)


class ParseError(DcspError):
    pass


def _ints(tokens: Sequence[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"line {lineno}: expected integers, got {' '.join(tokens)!r}") from None


def parse_text(text: str) -> tuple[ConstraintLanguage, Instance]:
    domain = None
    n = None
    relations: dict[str, Relation] = {}
    raw_constraints: list[tuple[str, list[int], int]] = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = lines[i].split("#", 1)[0].strip()
        i += 1
        if not line:
            continue
        head, *rest = line.split()
        if head == "domain":
            if len(rest) != 1:
                raise ParseError(f"line {lineno}: usage 'domain <k>'")
            domain = _ints(rest, lineno)[0]
        elif head == "variables":
            if len(rest) != 1:
                raise ParseError(f"line {lineno}: usage 'variables <n>'")
            n = _ints(rest, lineno)[0]
        elif head == "relation":
            if len(rest) != 2:
                raise ParseError(f"line {lineno}: usage 'relation <name> <arity>'")
            name = rest[0]
            arity = _ints(rest[1:], lineno)[0]
            tuples = []
            while True:
                if i >= len(lines):
                    raise ParseError(f"relation {name!r} is not terminated by 'end'")
                body = lines[i].split("#", 1)[0].strip()
                i += 1
                if not body:
                    continue
                if body == "end":
                    break
                t = tuple(_ints(body.split(), i))
                if len(t) != arity:
                    raise ParseError(f"line {i}: tuple {t} does not have arity {arity}")
                tuples.append(t)
            if name in relations:
                raise ParseError(f"relation {name!r} declared twice")
            try:
                relations[name] = Relation(name, arity, frozenset(tuples))
            except ValidationError as exc:
                raise ParseError(str(exc)) from None
        elif head == "constraint":
            if not rest:
                raise ParseError(f"line {lineno}: usage 'constraint <name> <v1> ...'")
            raw_constraints.append((rest[0], _ints(rest[1:], lineno), lineno))
        else:
            raise ParseError(f"line {lineno}: unknown directive {head!r}")
    if domain is None:
        raise ParseError("missing 'domain' line")
    return _assemble(domain, n, relations, raw_constraints)


def _assemble(domain, n, relations, raw_constraints) -> tuple[ConstraintLanguage, Instance]:
    try:
        language = ConstraintLanguage(domain, tuple(relations.values()))
        cons = []
        for name, scope, where in raw_constraints:
            if name not in relations:
                raise ParseError(f"{where}: unknown relation {name!r}")
            cons.append(Constraint(tuple(scope), relations[name]))
        if n is None:
            n = 1 + max((x for c in cons for x in c.scope), default=-1)
        return language, Instance(n, domain, tuple(cons))
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def parse_json(text: str) -> tuple[ConstraintLanguage, Instance]:
    try:
        obj = json.loads(text)
        domain = int(obj["domain"])
        n = obj.get("variables")
        relations: dict[str, Relation] = {}
        for r in obj.get("relations", []):
            rel = Relation(r["name"], int(r["arity"]), frozenset(tuple(t) for t in r["tuples"]))
            relations[rel.name] = rel
        raw = [(c["relation"], list(c["scope"]), f"constraint {k}") for k, c in enumerate(obj.get("constraints", []))]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed JSON instance: {exc}") from None
    return _assemble(domain, n, relations, raw)


def format_text(instance: Instance, language: ConstraintLanguage | None = None) -> str:
    language = language or instance.language
    out = [f"domain {instance.domain_size}", f"variables {instance.n}"]
    for r in language:
        out.append(f"relation {r.name} {r.arity}")
        out.extend(" ".join(map(str, t)) for t in r.sorted_tuples)
        out.append("end")
    for c in instance.constraints:
        out.append(" ".join(["constraint", c.relation.name, *map(str, c.scope)]))
    return "\n".join(out) + "\n"


def to_json_obj(instance: Instance, language: ConstraintLanguage | None = None) -> dict[str, Any]:
    language = language or instance.language
    return {
        "domain": instance.domain_size,
        "variables": instance.n,
        "relations": [
            {"name": r.name, "arity": r.arity, "tuples": [list(t) for t in r.sorted_tuples]}
            for r in language
        ],
        "constraints": [
            {"relation": c.relation.name, "scope": list(c.scope)} for c in instance.constraints
        ],
    }


def format_json(instance: Instance, language: ConstraintLanguage | None = None) -> str:
    return json.dumps(to_json_obj(instance, language), indent=1) + "\n"


def read_file(path: str | Path) -> tuple[ConstraintLanguage, Instance]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if path.suffix == ".json":
        return parse_json(text)
    return parse_text(text)


def read_instance(path: str | Path) -> Instance:
    return read_file(path)[1]


def read_language(path: str | Path) -> ConstraintLanguage:
    return read_file(path)[0]


def write_instance(path: str | Path, instance: Instance, language: ConstraintLanguage | None = None) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(format_json(instance, language))
    else:
        path.write_text(format_text(instance, language))


def read_assignment(path: str | Path, n: int) -> Assignment:
    """Whitespace-separated values in variable order, or a JSON list."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            obj = json.loads(text)
            if isinstance(obj, dict):
                obj = obj["assignment"]
            values = [int(v) for v in obj]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed JSON assignment: {exc}") from None
    else:
        tokens = [tok for line in text.splitlines() for tok in line.split("#", 1)[0].split()]
        values = _ints(tokens, 1)
    if len(values) != n:
        raise ParseError(f"assignment has {len(values)} values, expected {n}")
    return tuple(values)


def format_assignment(a: Assignment) -> str:
    return " ".join(map(str, a)) + "\n"
