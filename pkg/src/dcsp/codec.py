"""Byte encoding of the messages exchanged by the distributed algorithms.

Everything is a sequence of LEB128 varints.  Edge labels travel as the
relation's index in the public language plus a bitmask of scope positions.
"""

from __future__ import annotations

from functools import lru_cache

from .core import ConstraintLanguage, EdgeLabel, ValidationError


def put_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValidationError("varints encode non-negative integers only")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


class Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def varint(self) -> int:
        result = shift = 0
        while True:
            if self.pos >= len(self.data):
                raise ValidationError("truncated message")
            byte = self.data[self.pos]
            self.pos += 1
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7

    def done(self) -> bool:
        return self.pos == len(self.data)


def encode_ints(values) -> bytes:
    out = bytearray()
    for v in values:
        put_varint(out, v)
    return bytes(out)


def decode_ints(data: bytes) -> list[int]:
    r = Reader(data)
    out = []
    while not r.done():
        out.append(r.varint())
    return out


def positions_mask(positions) -> int:
    return sum(1 << (p - 1) for p in positions)


def mask_positions(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


@lru_cache(maxsize=None)
def label_code(language: ConstraintLanguage, label: EdgeLabel) -> tuple[int, int]:
    return language.index(label.relation), positions_mask(label.positions)


@lru_cache(maxsize=None)
def code_label(language: ConstraintLanguage, rel: int, mask: int) -> EdgeLabel:
    return EdgeLabel(mask_positions(mask), language.relations[rel].name)


def mask_of(values) -> int:
    return sum(1 << d for d in set(values))


@lru_cache(maxsize=1 << 12)
def mask_values(mask: int) -> tuple[int, ...]:
    return tuple(d for d in range(mask.bit_length()) if mask >> d & 1)
