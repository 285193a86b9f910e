"""Replayable lottery: a seeded Fisher-Yates shuffle keyed by a beacon output.

Indices are drawn by rejection sampling (take ``bit_length(bound - 1)``
bits, retry while the value is ``>= bound``), so there is no modulo bias.
The bit stream is ``expand("certrand/lottery", ..., pulse_output)``,
consumed MSB-first.

Result file (canonical codec, magic ``CRLT``): ``u64 pulse_index, blob
pulse_output_hash, u32 k, u32 n_bids, n x text bid, u32 n_winners,
n x text winner``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .. import bits as bitops
from ..codec import Reader, Writer
from ..digest import digest
from ..errors import DuplicateBid

LOTTERY_MAGIC = b"CRLT"


class BitSource:
    """Endless MSB-first bit stream from counter-mode hashing of a key."""

    def __init__(self, key: bytes):
        self._key = key
        self._bits: Iterator[int] = self._gen()

    def _gen(self):
        block = 0
        while True:
            for byte in digest("certrand/lottery", self._key, block):
                for shift in range(7, -1, -1):
                    yield (byte >> shift) & 1
            block += 1

    def take(self, n: int) -> int:
        v = 0
        for _ in range(n):
            v = (v << 1) | next(self._bits)
        return v


def uniform_below(source, bound: int) -> int:
    """Uniform integer in ``[0, bound)`` by rejection; ``source.take(n)`` gives n bits."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    width = (bound - 1).bit_length()
    while True:
        v = source.take(width)
        if v < bound:
            return v


def seeded_shuffle(items: Sequence, key: bytes) -> list:
    out = list(items)
    source = BitSource(key)
    for i in range(len(out) - 1, 0, -1):
        j = uniform_below(source, i + 1)
        out[i], out[j] = out[j], out[i]
    return out


@dataclass(frozen=True)
class LotteryDraw:
    pulse_index: int
    pulse_output_hash: bytes
    bids: tuple[str, ...]
    k: int
    winners: tuple[str, ...]


def lottery_draw(pulse_output, bids: Sequence[str], k: int, pulse_index: int = 0) -> LotteryDraw:
    if k < 0:
        raise ValueError("k must be non-negative")
    bids = tuple(bids)
    if len(set(bids)) != len(bids):
        raise DuplicateBid("bid ids must be distinct")
    key = bitops.pack(pulse_output) if not isinstance(pulse_output, bytes) else pulse_output
    order = seeded_shuffle(bids, key)
    return LotteryDraw(pulse_index, digest("certrand/lottery-ref", key), bids, k, tuple(order[: min(k, len(bids))]))


def verify_draw(draw: LotteryDraw, pulse_output) -> bool:
    try:
        again = lottery_draw(pulse_output, draw.bids, draw.k, draw.pulse_index)
    except DuplicateBid:
        return False
    return again == draw


def encode_draw(d: LotteryDraw) -> bytes:
    w = Writer(LOTTERY_MAGIC, 1).u64(d.pulse_index).blob(d.pulse_output_hash).u32(d.k)
    w.u32(len(d.bids))
    for b in d.bids:
        w.text(b)
    w.u32(len(d.winners))
    for b in d.winners:
        w.text(b)
    return w.getvalue()


def decode_draw(data: bytes) -> LotteryDraw:
    r = Reader(data, LOTTERY_MAGIC)
    index, ref, k = r.u64(), r.blob(), r.u32()
    bids = tuple(r.text() for _ in range(r.u32()))
    winners = tuple(r.text() for _ in range(r.u32()))
    r.done()
    return LotteryDraw(index, ref, bids, k, winners)


def render_draw(d: LotteryDraw) -> str:
    lines = [f"pulse_index: {d.pulse_index}", f"pulse_output_ref: {d.pulse_output_hash.hex()}", f"k: {d.k}"]
    lines += [f"bid: {b}" for b in d.bids]
    lines += [f"winner: {w}" for w in d.winners]
    return "\n".join(lines) + "\n"
