"""Hash-chained, quorum-signed randomness beacon fed by certified sessions.

Each pulse's extractor seed is the VDF output on the previous pulse's
certified output, so any auditor can re-derive it and nobody, the prover
included, learns it before the delay has elapsed.

Pulse body (canonical codec, magic ``CRPL`` version 1), in order::

    u64 index, i64 issued_at_ns, blob prev_output_hash, bits certified_output,
    blob transcript_hash, blob seed_digest, blob vdf_x, blob vdf_y, u64 vdf_t,
    u64 seed_bits

``vdf_x``/``vdf_y`` are big-endian integers. Signatures cover the body
bytes. A full pulse appends ``u32 count, count x (text verifier_id, blob
signature)`` and ``blob output_hash`` where
``output_hash = digest("certrand/pulse", body, signature block)``.
"""

from __future__ import annotations

import hashlib
import hmac
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from . import bits as bitops
from .codec import Reader, Writer
from .digest import ZERO_DIGEST, digest
from .errors import DecodeError, QuorumFailure, SeedChainViolation
from .protocol import (
    InputRandomness,
    ProtocolConfig,
    SessionResult,
    build_transcript,
    collect_rounds,
    finish,
    generate_challenges,
    seed_digest,
    verify_transcript,
)
from .transport import Channel, Clock, Frame, MonotonicClock, MsgType, error_frame
from .vdf import VdfParams, seed_from_vdf, vdf_eval, vdf_input, vdf_verify

PULSE_MAGIC = b"CRPL"


# ---------------------------------------------------------------- signatures


class Signer(Protocol):
    verifier_id: str

    def sign(self, message: bytes) -> bytes: ...


class VerifyKey(Protocol):
    def verify(self, message: bytes, signature: bytes) -> bool: ...


@dataclass(frozen=True)
class MacKey:
    """Keyed-MAC test double: the same secret signs and verifies."""

    verifier_id: str
    secret: bytes

    def sign(self, message: bytes) -> bytes:
        return hmac.new(self.secret, message, hashlib.sha256).digest()

    def verify(self, message: bytes, signature: bytes) -> bool:
        return hmac.compare_digest(self.sign(message), signature)


class Ed25519Signer:
    """Asymmetric signer slot backed by ``cryptography``.

    Not quantum-safe; stands in where a post-quantum scheme would plug in.
    """

    def __init__(self, verifier_id: str, private_key=None):
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

        self.verifier_id = verifier_id
        self._key = private_key if private_key is not None else Ed25519PrivateKey.generate()

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)

    def public(self) -> "Ed25519VerifyKey":
        return Ed25519VerifyKey(self._key.public_key())


@dataclass(frozen=True)
class Ed25519VerifyKey:
    key: object

    def verify(self, message: bytes, signature: bytes) -> bool:
        from cryptography.exceptions import InvalidSignature

        try:
            self.key.verify(signature, message)
            return True
        except InvalidSignature:
            return False


def majority(n_verifiers: int) -> int:
    return math.ceil((n_verifiers + 1) / 2)


# ---------------------------------------------------------------- pulses


@dataclass(frozen=True)
class VdfProof:
    x: int
    y: int
    t: int
    seed_bits: int


@dataclass(frozen=True)
class Pulse:
    index: int
    issued_at: int
    prev_output_hash: bytes
    certified_output: np.ndarray
    transcript_hash: bytes
    seed_digest: bytes
    vdf: VdfProof
    signatures: tuple[tuple[str, bytes], ...] = ()
    output_hash: bytes = ZERO_DIGEST

    def body(self) -> bytes:
        return encode_body(self)

    def signature_block(self) -> bytes:
        w = Writer().u32(len(self.signatures))
        for vid, sig in self.signatures:
            w.text(vid).blob(sig)
        return w.getvalue()

    def computed_hash(self) -> bytes:
        return digest("certrand/pulse", self.body(), self.signature_block())

    def to_bytes(self) -> bytes:
        return self.body() + self.signature_block() + Writer().blob(self.output_hash).getvalue()

    def output_bytes(self) -> bytes:
        return bitops.pack(self.certified_output)


def _int_bytes(v: int) -> bytes:
    return v.to_bytes(max(1, (v.bit_length() + 7) // 8), "big")


def encode_body(p: Pulse) -> bytes:
    w = Writer(PULSE_MAGIC, 1)
    w.u64(p.index).i64(p.issued_at).blob(p.prev_output_hash).bits(p.certified_output)
    w.blob(p.transcript_hash).blob(p.seed_digest)
    w.blob(_int_bytes(p.vdf.x)).blob(_int_bytes(p.vdf.y)).u64(p.vdf.t).u64(p.vdf.seed_bits)
    return w.getvalue()


def decode_pulse(data: bytes) -> Pulse:
    r = Reader(data, PULSE_MAGIC)
    index, issued, prev = r.u64(), r.i64(), r.blob()
    out, th, sd = r.bits(), r.blob(), r.blob()
    xb, yb = r.blob(), r.blob()
    for b in (xb, yb):
        if len(b) > 1 and b[0] == 0:
            raise DecodeError("non-canonical integer encoding")
    vdf = VdfProof(int.from_bytes(xb, "big"), int.from_bytes(yb, "big"), r.u64(), r.u64())
    sigs = tuple((r.text(), r.blob()) for _ in range(r.u32()))
    out_hash = r.blob()
    r.done()
    return Pulse(index, issued, prev, out, th, sd, vdf, sigs, out_hash)


def render_pulse(p: Pulse) -> str:
    lines = [
        f"index: {p.index}",
        f"issued_at_ns: {p.issued_at}",
        f"prev_output_hash: {p.prev_output_hash.hex()}",
        f"certified_output: {bitops.to_hex(p.certified_output)}",
        f"transcript_hash: {p.transcript_hash.hex()}",
        f"seed_digest: {p.seed_digest.hex()}",
        f"vdf_x: {p.vdf.x:x}",
        f"vdf_y: {p.vdf.y:x}",
        f"vdf_t: {p.vdf.t}",
        f"seed_bits: {p.vdf.seed_bits}",
    ]
    lines += [f"signature: {vid} {sig.hex()}" for vid, sig in p.signatures]
    lines.append(f"output_hash: {p.output_hash.hex()}")
    return "\n".join(lines) + "\n"


def previous_output(prev: Pulse | None) -> bytes:
    return b"" if prev is None else prev.output_bytes()


def derive_seed(prev: Pulse | None, n_bits: int, params: VdfParams) -> tuple[VdfProof, np.ndarray]:
    """Extractor seed for the pulse after ``prev``: VDF of its public output."""
    x = vdf_input(previous_output(prev), params)
    y = vdf_eval(x, params)
    seed = bitops.unpack(seed_from_vdf(y, n_bits, params), n_bits)
    return VdfProof(x, y, params.t, n_bits), seed


def build_pulse(
    prev: Pulse | None,
    session: SessionResult,
    signers: Sequence[Signer],
    vdf: VdfProof,
    params: VdfParams,
    quorum: int,
    issued_at: int,
) -> Pulse:
    if not session.transcript.accepted or session.output is None:
        raise ValueError("only accepted sessions can feed the beacon")
    if len({s.verifier_id for s in signers}) < quorum:
        raise QuorumFailure(f"{len(signers)} signers, quorum is {quorum}")
    if vdf.x != vdf_input(previous_output(prev), params) or vdf.t != params.t:
        raise SeedChainViolation("VDF input does not come from the previous pulse")
    if not vdf_verify(vdf.x, vdf.y, params):
        raise SeedChainViolation("VDF proof does not verify")
    seed = bitops.unpack(seed_from_vdf(vdf.y, vdf.seed_bits, params), vdf.seed_bits)
    if seed_digest(seed) != session.output.seed_digest:
        raise SeedChainViolation("session extractor seed was not derived from the VDF output")

    unsigned = Pulse(
        index=0 if prev is None else prev.index + 1,
        issued_at=issued_at,
        prev_output_hash=ZERO_DIGEST if prev is None else prev.output_hash,
        certified_output=session.output.bits,
        transcript_hash=session.output.transcript_hash,
        seed_digest=session.output.seed_digest,
        vdf=vdf,
    )
    body = unsigned.body()
    signed = replace(unsigned, signatures=tuple((s.verifier_id, s.sign(body)) for s in signers))
    return replace(signed, output_hash=signed.computed_hash())


@dataclass(frozen=True)
class ChainVerdict:
    ok: bool
    reason: str = "ok"
    index: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_pulse(pulse: Pulse, prev: Pulse | None, keys: Mapping[str, VerifyKey], params: VdfParams, quorum: int) -> ChainVerdict:
    i = pulse.index
    expected_index = 0 if prev is None else prev.index + 1
    if pulse.index != expected_index:
        return ChainVerdict(False, "index", i)
    expected_link = ZERO_DIGEST if prev is None else prev.output_hash
    if pulse.prev_output_hash != expected_link:
        return ChainVerdict(False, "link", i)
    if pulse.computed_hash() != pulse.output_hash:
        return ChainVerdict(False, "hash", i)
    body = pulse.body()
    valid = set()
    for vid, sig in pulse.signatures:
        key = keys.get(vid)
        if key is None or not key.verify(body, sig):
            return ChainVerdict(False, "signature", i)
        valid.add(vid)
    if len(valid) < quorum:
        return ChainVerdict(False, "quorum", i)
    if pulse.vdf.t != params.t or pulse.vdf.x != vdf_input(previous_output(prev), params):
        return ChainVerdict(False, "vdf-input", i)
    if not (0 <= pulse.vdf.x < params.p and 0 <= pulse.vdf.y < params.p) or not vdf_verify(pulse.vdf.x, pulse.vdf.y, params):
        return ChainVerdict(False, "vdf", i)
    seed = bitops.unpack(seed_from_vdf(pulse.vdf.y, pulse.vdf.seed_bits, params), pulse.vdf.seed_bits)
    if seed_digest(seed) != pulse.seed_digest:
        return ChainVerdict(False, "seed", i)
    return ChainVerdict(True)


def verify_chain(
    pulses: Sequence[Pulse],
    keys: Mapping[str, VerifyKey],
    params: VdfParams,
    quorum: int | None = None,
    start_after: Pulse | None = None,
    expect_head: bytes | None = None,
) -> ChainVerdict:
    """Check indices, hash links, signatures with quorum and every VDF seed link.

    ``start_after`` anchors a chain segment that does not begin at genesis.
    ``expect_head`` is the output hash of the latest published pulse; without
    it a chain truncated at the end still verifies.
    """
    if not pulses:
        return ChainVerdict(False, "empty")
    quorum = quorum if quorum is not None else majority(len(keys))
    prev = start_after
    for pulse in pulses:
        verdict = verify_pulse(pulse, prev, keys, params, quorum)
        if not verdict:
            return verdict
        prev = pulse
    if expect_head is not None and prev.output_hash != expect_head:
        return ChainVerdict(False, "head", prev.index)
    return ChainVerdict(True)


# ---------------------------------------------------------------- sequencer


@dataclass
class Beacon:
    """Single-writer pulse sequencer: one certified session per pulse."""

    config: ProtocolConfig
    params: VdfParams
    signers: Sequence[Signer]
    quorum: int
    clock: Clock = field(default_factory=MonotonicClock)
    chain: list[Pulse] = field(default_factory=list)

    @property
    def latest(self) -> Pulse | None:
        return self.chain[-1] if self.chain else None

    def run_certified_session(self, prover: Channel, rng: np.random.Generator) -> tuple[SessionResult, VdfProof]:
        """Challenges first; the VDF seed is derived only after all responses are in."""
        cfg = self.config
        c = bitops.random_bits(cfg.challenge_bits, rng)
        cp = bitops.random_bits(cfg.test_bits, rng)
        challenges = generate_challenges(cfg, c)
        batches, timings = collect_rounds(cfg, challenges, prover)
        proof, seed = derive_seed(self.latest, cfg.seed_bits, self.params)
        verification = verify_transcript(cp, challenges, batches, timings, cfg)
        transcript = build_transcript(cfg, cp, challenges, batches, timings, verification)
        InputRandomness(c, cp, seed).check(cfg)
        return SessionResult(transcript, finish(cfg, transcript, seed)), proof

    def emit(self, prover: Channel, rng: np.random.Generator, max_attempts: int = 3) -> Pulse:
        for _ in range(max_attempts):
            session, proof = self.run_certified_session(prover, rng)
            if session.transcript.accepted:
                pulse = build_pulse(self.latest, session, self.signers, proof, self.params, self.quorum, self.clock.wall())
                self.chain.append(pulse)
                return pulse
        raise RuntimeError(f"no accepted session in {max_attempts} attempts")


# ---------------------------------------------------------------- storage & serving


class PulseStore:
    """Append-only directory: ``pulse_NNNNNN.bin`` plus a ``.txt`` rendering."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, index: int) -> Path:
        return self.root / f"pulse_{index:06d}.bin"

    def append(self, pulse: Pulse) -> Path:
        path = self.path(pulse.index)
        if path.exists():
            raise FileExistsError(f"pulse {pulse.index} already stored")
        path.write_bytes(pulse.to_bytes())
        path.with_suffix(".txt").write_text(render_pulse(pulse))
        return path

    def files(self) -> list[Path]:
        return sorted(self.root.glob("pulse_*.bin"))

    def load(self) -> list[Pulse]:
        return [decode_pulse(p.read_bytes()) for p in self.files()]


def encode_pulses(pulses: Iterable[Pulse]) -> bytes:
    items = list(pulses)
    w = Writer().u32(len(items))
    for p in items:
        w.blob(p.to_bytes())
    return w.getvalue()


def decode_pulses(data: bytes) -> list[Pulse]:
    r = Reader(data)
    out = [decode_pulse(r.blob()) for _ in range(r.u32())]
    r.done()
    return out


class BeaconEndpoint:
    """Frame handler answering GET_PULSE(u64 index), GET_LATEST, GET_RANGE(u64 start, u64 count)."""

    MAX_RANGE = 1000

    def __init__(self, chain: Sequence[Pulse]):
        self.chain = chain

    def __call__(self, frame: Frame) -> Frame:
        try:
            r = Reader(frame.payload)
            if frame.msg_type == MsgType.GET_LATEST:
                r.done()
                if not self.chain:
                    return error_frame("beacon has no pulses")
                return Frame(MsgType.PULSE, self.chain[-1].to_bytes())
            if frame.msg_type == MsgType.GET_PULSE:
                index = r.u64()
                r.done()
                if index >= len(self.chain):
                    return error_frame(f"no pulse {index}")
                return Frame(MsgType.PULSE, self.chain[index].to_bytes())
            if frame.msg_type == MsgType.GET_RANGE:
                start, count = r.u64(), r.u64()
                r.done()
                count = min(count, self.MAX_RANGE)
                return Frame(MsgType.PULSES, encode_pulses(self.chain[start : start + count]))
        except DecodeError as exc:
            return error_frame(str(exc))
        return error_frame(f"beacon cannot handle {frame.msg_type.name}")


def get_pulse(channel: Channel, index: int) -> Pulse:
    return _expect_pulse(channel.request(Frame(MsgType.GET_PULSE, Writer().u64(index).getvalue())))


def get_latest(channel: Channel) -> Pulse:
    return _expect_pulse(channel.request(Frame(MsgType.GET_LATEST)))


def get_range(channel: Channel, start: int, count: int) -> list[Pulse]:
    reply = channel.request(Frame(MsgType.GET_RANGE, Writer().u64(start).u64(count).getvalue()))
    if reply.msg_type != MsgType.PULSES:
        raise LookupError(reply.payload.decode("utf-8", "replace"))
    return decode_pulses(reply.payload)


def _expect_pulse(reply: Frame) -> Pulse:
    if reply.msg_type != MsgType.PULSE:
        raise LookupError(reply.payload.decode("utf-8", "replace"))
    return decode_pulse(reply.payload)
