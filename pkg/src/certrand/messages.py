"""Payload encodings for CHALLENGE and SAMPLES frames.

CHALLENGE: ``u64 round_index, u32 seed_width, blob seed, u32 n_qubits,
u32 depth, u32 samples_requested``.

SAMPLES: ``u64 round_index, i64 sent_at_ns, u32 M, u32 n, bits outcomes``
where ``outcomes`` is the row-major ``M x n`` outcome matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import ChallengeSpec
from .codec import Reader, Writer
from .errors import DecodeError, ShapeMismatch


@dataclass(frozen=True)
class SampleBatch:
    round_index: int
    outcomes: np.ndarray  # (M, n) uint8
    sent_at: int = 0

    def __post_init__(self):
        arr = np.asarray(self.outcomes, dtype=np.uint8)
        if arr.ndim != 2:
            raise ShapeMismatch("outcomes must be an (M, n) bit matrix")
        arr.setflags(write=False)
        object.__setattr__(self, "outcomes", arr)

    @property
    def size(self) -> int:
        return self.outcomes.shape[0]

    @property
    def width(self) -> int:
        return self.outcomes.shape[1]

    def strings(self) -> list[str]:
        return ["".join(map(str, row)) for row in self.outcomes]

    def __eq__(self, other):
        if not isinstance(other, SampleBatch):
            return NotImplemented
        return (
            self.round_index == other.round_index
            and self.sent_at == other.sent_at
            and np.array_equal(self.outcomes, other.outcomes)
        )

    __hash__ = None


def write_challenge(w: Writer, c: ChallengeSpec) -> Writer:
    return w.u64(c.round_index).u32(c.seed_width).blob(c.seed).u32(c.n_qubits).u32(c.depth).u32(c.samples_requested)


def read_challenge(r: Reader) -> ChallengeSpec:
    round_index, width, seed = r.u64(), r.u32(), r.blob()
    n, d, m = r.u32(), r.u32(), r.u32()
    try:
        return ChallengeSpec(round_index, seed, n, d, m, seed_width=width)
    except ShapeMismatch as exc:
        raise DecodeError(str(exc)) from exc


def write_batch(w: Writer, b: SampleBatch) -> Writer:
    m, n = b.outcomes.shape
    return w.u64(b.round_index).i64(b.sent_at).u32(m).u32(n).bits(b.outcomes.reshape(-1))


def read_batch(r: Reader) -> SampleBatch:
    round_index, sent_at, m, n = r.u64(), r.i64(), r.u32(), r.u32()
    flat = r.bits()
    if flat.size != m * n:
        raise DecodeError(f"outcome matrix holds {flat.size} bits, header says {m}x{n}")
    return SampleBatch(round_index, flat.reshape(m, n), sent_at)


def encode_challenge(c: ChallengeSpec) -> bytes:
    return write_challenge(Writer(), c).getvalue()


def decode_challenge(data: bytes) -> ChallengeSpec:
    r = Reader(data)
    c = read_challenge(r)
    r.done()
    return c


def encode_batch(b: SampleBatch) -> bytes:
    return write_batch(Writer(), b).getvalue()


def decode_batch(data: bytes) -> SampleBatch:
    r = Reader(data)
    b = read_batch(r)
    r.done()
    return b
