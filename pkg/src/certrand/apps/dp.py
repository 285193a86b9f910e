"""Laplace mechanism for counting queries, driven by explicit random bits.

Fixed-point convention: the first 64 bits, read big-endian as ``v``, give
``u = v / 2^64``, clamped into ``[2^-63, 1 - 2^-63]``. The noise is
``-b * sign(u - 1/2) * ln(1 - 2|u - 1/2|)``, clamped to ``|x| <= 50 b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .. import bits as bitops
from ..errors import ShapeMismatch

UNIFORM_BITS = 64
CLAMP_SCALES = 50.0


def laplace_sample(random_bits, scale: float) -> float:
    if scale <= 0:
        raise ValueError("scale must be positive")
    b = bitops.as_bits(random_bits)
    if b.size < UNIFORM_BITS:
        raise ShapeMismatch(f"need {UNIFORM_BITS} random bits, got {b.size}")
    v = bitops.to_int(b[:UNIFORM_BITS])
    half = 1 << 63
    v = min(max(v, 2), (1 << 64) - 2)  # u in [2^-63, 1 - 2^-63]
    offset = v - half
    if offset == 0:
        return 0.0
    # 1 - 2|u - 1/2| = (2^63 - |v - 2^63|) / 2^63, formed exactly in integers
    tail = (half - abs(offset)) / half
    x = -scale * math.copysign(1.0, offset) * math.log(tail)
    return max(-CLAMP_SCALES * scale, min(CLAMP_SCALES * scale, x))


@dataclass(frozen=True)
class DpQuery:
    dataset: Sequence
    predicate: Callable[[object], bool]
    epsilon: float
    sensitivity: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def true_count(self) -> int:
        return sum(1 for record in self.dataset if self.predicate(record))


def dp_count_query(query: DpQuery, randomness) -> float:
    return query.true_count() + laplace_sample(randomness, query.sensitivity / query.epsilon)
