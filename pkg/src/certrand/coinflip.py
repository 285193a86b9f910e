"""Commit-reveal coin flipping among mutually distrustful parties.

A coordinator drives two phases over framed channels:

1. COMMIT: each party is asked for ``digest(party_id, r, nonce)``. Parties
   are asked in order and the request carries the commitments gathered so
   far, which models a rushing adversary who sees honest commitments (but
   never honest values) before committing.
2. REVEAL: each party returns ``(r, nonce)``; every reveal is checked
   against its commitment. The joint value is the XOR of all ``r``.

A missing, late or mismatching reveal aborts the flip with no output,
naming the party. That abort is the accepted weakening of commit-reveal: a
last revealer can refuse, but cannot steer the output.

Payloads (canonical codec):

* COMMIT request:  ``blob tag, u32 width, u32 count, count x (text id, blob digest)``
* COMMIT response: ``text id, blob digest``
* REVEAL request:  same layout as the COMMIT request, carrying all commitments
* REVEAL response: ``text id, bits r, blob nonce``
* ABORT:           ``text id, text reason``
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import bits as bitops
from .codec import Reader, Writer
from .digest import digest
from .errors import Abort, DecodeError, ShapeMismatch, Timeout, TransportError
from .transport import Channel, Frame, MsgType, error_frame

NONCE_BYTES = 32


@dataclass(frozen=True)
class Contribution:
    party_id: str
    r: np.ndarray
    nonce: bytes

    def __post_init__(self):
        object.__setattr__(self, "r", bitops.as_bits(self.r))
        if len(self.nonce) != NONCE_BYTES:
            raise ShapeMismatch(f"nonce must be {NONCE_BYTES} bytes")


@dataclass(frozen=True)
class Commitment:
    party_id: str
    digest: bytes


def commit(contribution: Contribution, session_tag: bytes = b"") -> Commitment:
    d = digest("certrand/commit", session_tag, contribution.party_id, bitops.to_hex(contribution.r), contribution.nonce)
    return Commitment(contribution.party_id, d)


def opens(commitment: Commitment, contribution: Contribution, session_tag: bytes = b"") -> bool:
    return commitment.party_id == contribution.party_id and commit(contribution, session_tag).digest == commitment.digest


# ---------------------------------------------------------------- wire payloads


def _write_commitments(w: Writer, tag: bytes, width: int, commitments: Sequence[Commitment]) -> bytes:
    w.blob(tag).u32(width).u32(len(commitments))
    for c in commitments:
        w.text(c.party_id).blob(c.digest)
    return w.getvalue()


def _read_commitments(data: bytes) -> tuple[bytes, int, list[Commitment]]:
    r = Reader(data)
    tag, width = r.blob(), r.u32()
    out = [Commitment(r.text(), r.blob()) for _ in range(r.u32())]
    r.done()
    return tag, width, out


def encode_request(tag: bytes, width: int, commitments: Sequence[Commitment]) -> bytes:
    return _write_commitments(Writer(), tag, width, commitments)


def decode_request(data: bytes) -> tuple[bytes, int, list[Commitment]]:
    return _read_commitments(data)


def encode_commitment(c: Commitment) -> bytes:
    return Writer().text(c.party_id).blob(c.digest).getvalue()


def decode_commitment(data: bytes) -> Commitment:
    r = Reader(data)
    c = Commitment(r.text(), r.blob())
    r.done()
    return c


def encode_reveal(c: Contribution) -> bytes:
    return Writer().text(c.party_id).bits(c.r).blob(c.nonce).getvalue()


def decode_reveal(data: bytes) -> Contribution:
    r = Reader(data)
    party_id, value, nonce = r.text(), r.bits(), r.blob()
    r.done()
    try:
        return Contribution(party_id, value, nonce)
    except ShapeMismatch as exc:
        raise DecodeError(str(exc)) from exc


def encode_abort(party_id: str, reason: str) -> bytes:
    return Writer().text(party_id).text(reason).getvalue()


# ---------------------------------------------------------------- parties


class Party:
    """A coin-flip participant as a frame handler.

    ``choose(width, seen)`` picks the contribution value after seeing the
    commitments made so far. The default draws uniformly from ``rng``.
    """

    def __init__(self, party_id: str, rng: np.random.Generator | None = None):
        self.party_id = party_id
        self.rng = rng if rng is not None else np.random.default_rng()
        self._pending: dict[bytes, Contribution] = {}

    def choose(self, width: int, seen: Sequence[Commitment]) -> np.ndarray:
        return bitops.random_bits(width, self.rng)

    def reveal_value(self, contribution: Contribution) -> Contribution | None:
        return contribution

    def __call__(self, frame: Frame) -> Frame:
        try:
            tag, width, seen = decode_request(frame.payload)
        except DecodeError as exc:
            return error_frame(str(exc))
        if frame.msg_type == MsgType.COMMIT:
            contribution = Contribution(self.party_id, self.choose(width, seen), self.rng.bytes(NONCE_BYTES))
            self._pending[tag] = contribution
            return Frame(MsgType.COMMIT, encode_commitment(commit(contribution, tag)))
        if frame.msg_type == MsgType.REVEAL:
            contribution = self._pending.pop(tag, None)
            opened = self.reveal_value(contribution) if contribution is not None else None
            if opened is None:
                return Frame(MsgType.ABORT, encode_abort(self.party_id, "missing"))
            return Frame(MsgType.REVEAL, encode_reveal(opened))
        return error_frame(f"party cannot handle {frame.msg_type.name}")


class FixedParty(Party):
    """Contributes a value fixed in advance (adversarially chosen).

    Flips of any other width get a uniform contribution.
    """

    def __init__(self, party_id: str, value, rng=None):
        super().__init__(party_id, rng)
        self.value = bitops.as_bits(value)

    def choose(self, width, seen):
        if width != self.value.size:
            return super().choose(width, seen)
        return self.value.copy()


class AdaptiveParty(Party):
    """Chooses its value from the commitments seen so far (rushing adversary)."""

    def __init__(self, party_id: str, strategy: Callable[[int, Sequence[Commitment]], np.ndarray], rng=None):
        super().__init__(party_id, rng)
        self.strategy = strategy

    def choose(self, width, seen):
        return bitops.as_bits(self.strategy(width, seen))


class EquivocatingParty(Party):
    """Commits to one value, then reveals a different one."""

    def reveal_value(self, contribution):
        flipped = contribution.r.copy()
        flipped[0] ^= 1
        return Contribution(contribution.party_id, flipped, contribution.nonce)


class WithholdingParty(Party):
    """Commits, then refuses to reveal."""

    def reveal_value(self, contribution):
        return None


@dataclass(frozen=True)
class PartyHandle:
    party_id: str
    channel: Channel


def _ask(handle: PartyHandle, msg_type: MsgType, payload: bytes) -> Frame:
    try:
        return handle.channel.request(Frame(msg_type, payload))
    except Timeout as exc:
        raise Abort(handle.party_id, "timeout") from exc
    except TransportError as exc:
        raise Abort(handle.party_id, "missing") from exc


def run_coinflip(parties: Sequence[PartyHandle], width: int, session_tag: bytes | None = None) -> np.ndarray:
    """Joint ``width``-bit string, or :class:`Abort` naming the offender."""
    if len(parties) < 2:
        raise ValueError("coin flipping needs at least two parties")
    if len({p.party_id for p in parties}) != len(parties):
        raise ValueError("party ids must be distinct")
    tag = session_tag if session_tag is not None else os.urandom(16)

    commitments: list[Commitment] = []
    for handle in parties:
        reply = _ask(handle, MsgType.COMMIT, encode_request(tag, width, commitments))
        if reply.msg_type != MsgType.COMMIT:
            raise Abort(handle.party_id, "missing")
        try:
            c = decode_commitment(reply.payload)
        except DecodeError:
            raise Abort(handle.party_id, "mismatch") from None
        if c.party_id != handle.party_id:
            raise Abort(handle.party_id, "mismatch")
        commitments.append(c)

    joint = bitops.zeros(width)
    for handle, c in zip(parties, commitments):
        reply = _ask(handle, MsgType.REVEAL, encode_request(tag, width, commitments))
        if reply.msg_type != MsgType.REVEAL:
            raise Abort(handle.party_id, "missing")
        try:
            contribution = decode_reveal(reply.payload)
        except DecodeError:
            raise Abort(handle.party_id, "mismatch") from None
        if contribution.r.size != width or not opens(c, contribution, tag):
            raise Abort(handle.party_id, "mismatch")
        joint ^= contribution.r
    return joint
