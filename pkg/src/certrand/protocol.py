"""The classical verifier: challenges, latency, test rounds, Ver, Ext.

Input randomness layout for an ``L``-round session:

* ``C``   -- ``L * seed_width`` challenge bits; round ``i`` takes bits
  ``[i * seed_width, (i + 1) * seed_width)``.
* ``C_p`` -- private bits choosing the tested rounds. Their integer value
  (big-endian) modulo ``comb(L, K)`` is unranked into a K-subset in
  lexicographic order; ``test_bits_margin`` extra bits keep the modulo bias
  below ``2**-margin``.
* ``S``   -- Toeplitz seed, ``raw_len + n_out - 1`` bits, where ``raw_len``
  is the number of outcome bits in untested rounds.

Entropy model: an accepted session is credited ``k = c * M * U`` bits of
min-entropy, ``U`` the number of untested rounds and ``c`` the per-outcome
rate (default ``0.05 * n``). Only untested rounds feed the extractor.

Transcript file layout (canonical codec, magic ``CRTX`` version 1), in order:
config block; ``C_p`` bits; ``u32 L`` round records, each ``challenge,
batch, i64 dispatch_ns, i64 arrival_ns, u8 tested, u8 has_score [f64 value,
u32 count, f64 stderr]``; ``u8 accepted, text reason, f64 k, f64 mean_xeb,
f64 threshold``. The transcript hash is ``digest("certrand/transcript",
bytes)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import bits as bitops
from .circuit import SEED_WIDTH, SIM_CAP, ChallengeSpec, XebScore, derive_circuit, simulate_probabilities, xeb_score
from .codec import Reader, Writer
from .digest import ZERO_DIGEST, digest
from .errors import (
    ClockViolation,
    DecodeError,
    IncompleteTranscript,
    InsufficientEntropy,
    SessionAborted,
    ShapeMismatch,
    TransportError,
)
from .extractors import ToeplitzSpec, lhl_output_len, toeplitz_extract
from .messages import SampleBatch, decode_batch, encode_challenge, read_batch, read_challenge, write_batch, write_challenge
from .transport import Channel, Frame, MsgType, timed_request

DEFAULT_EPSILON = 2.0**-32


@dataclass(frozen=True)
class ProtocolConfig:
    rounds: int = 20
    n_qubits: int = 10
    depth: int = 8
    samples_per_round: int = 100
    # None: calibrate to half the exact mean ideal XEB of the tested circuits
    xeb_threshold: float | None = None
    test_fraction: float = 0.5
    latency_threshold_ns: int = 10**9
    # None: 0.05 * n_qubits bits per outcome
    entropy_rate: float | None = None
    extractor_epsilon: float = DEFAULT_EPSILON
    seed_width: int = SEED_WIDTH
    test_bits_margin: int = 64
    acceptance: str = "mean"
    sim_cap: int = SIM_CAP

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 1 <= self.n_qubits <= self.sim_cap:
            raise ValueError(f"n_qubits must lie in [1, {self.sim_cap}]")
        if self.depth < 1 or self.samples_per_round < 1 or self.seed_width < 1:
            raise ValueError("depth, samples_per_round and seed_width must be >= 1")
        if not 0 < self.test_fraction <= 1:
            raise ValueError("test_fraction must lie in (0, 1]")
        if self.rounds * self.test_fraction < 1:
            raise ValueError("rounds * test_fraction must be >= 1")
        if self.latency_threshold_ns < 0:
            raise ValueError("latency threshold must be non-negative")
        if self.entropy_rate is not None and self.entropy_rate <= 0:
            raise ValueError("entropy_rate must be positive")
        if not 0 < self.extractor_epsilon < 1:
            raise ValueError("extractor_epsilon must lie in (0, 1)")
        if self.acceptance not in ("mean", "per_round"):
            raise ValueError("acceptance must be 'mean' or 'per_round'")
        if self.test_bits_margin < 0:
            raise ValueError("test_bits_margin must be >= 0")

    @property
    def rate(self) -> float:
        return self.entropy_rate if self.entropy_rate is not None else 0.05 * self.n_qubits

    @property
    def n_tested(self) -> int:
        return math.ceil(round(self.test_fraction * self.rounds, 9))

    @property
    def n_untested(self) -> int:
        return self.rounds - self.n_tested

    @property
    def challenge_bits(self) -> int:
        return self.rounds * self.seed_width

    @property
    def test_bits(self) -> int:
        combos = math.comb(self.rounds, self.n_tested)
        return (combos - 1).bit_length() + self.test_bits_margin

    @property
    def raw_len(self) -> int:
        return self.n_untested * self.samples_per_round * self.n_qubits

    @property
    def accepted_entropy(self) -> float:
        return self.rate * self.samples_per_round * self.n_untested

    @property
    def output_len(self) -> int:
        return lhl_output_len(self.accepted_entropy, self.extractor_epsilon)

    @property
    def seed_bits(self) -> int:
        if self.raw_len == 0:
            return 0
        return ToeplitzSpec.seed_len(self.raw_len, max(self.output_len, 1))

    @property
    def input_bits(self) -> int:
        """``n_C + n_p + n_S``: all random input one session consumes."""
        return self.challenge_bits + self.test_bits + self.seed_bits


@dataclass(frozen=True)
class InputRandomness:
    challenge_bits: np.ndarray
    private_test_bits: np.ndarray
    extractor_seed: np.ndarray

    def check(self, config: ProtocolConfig) -> None:
        for name, have, want in (
            ("C", self.challenge_bits.size, config.challenge_bits),
            ("C_p", self.private_test_bits.size, config.test_bits),
            ("S", self.extractor_seed.size, config.seed_bits),
        ):
            if have != want:
                raise ShapeMismatch(f"{name} has {have} bits, config requires {want}")

    @classmethod
    def from_stream(cls, config: ProtocolConfig, stream) -> "InputRandomness":
        """Slice one bitstring as ``C || C_p || S``."""
        b = bitops.as_bits(stream)
        if b.size != config.input_bits:
            raise ShapeMismatch(f"need {config.input_bits} input bits, got {b.size}")
        i, j = config.challenge_bits, config.challenge_bits + config.test_bits
        return cls(b[:i], b[i:j], b[j:])

    @classmethod
    def generate(cls, config: ProtocolConfig, rng: np.random.Generator) -> "InputRandomness":
        return cls.from_stream(config, bitops.random_bits(config.input_bits, rng))


@dataclass(frozen=True)
class RoundRecord:
    challenge: ChallengeSpec
    batch: SampleBatch
    dispatch_ns: int
    arrival_ns: int
    tested: bool = False
    score: XebScore | None = None


@dataclass(frozen=True)
class Verification:
    accepted: bool
    reason: str
    k: float
    tested: frozenset[int]
    scores: dict[int, XebScore] = field(default_factory=dict)
    mean_xeb: float = float("nan")
    threshold: float = float("nan")


@dataclass(frozen=True)
class Transcript:
    config: ProtocolConfig
    private_test_bits: np.ndarray
    rounds: tuple[RoundRecord, ...]
    accepted: bool
    reason: str
    k: float
    mean_xeb: float
    threshold: float

    @property
    def challenges(self) -> list[ChallengeSpec]:
        return [r.challenge for r in self.rounds]

    @property
    def batches(self) -> list[SampleBatch]:
        return [r.batch for r in self.rounds]

    @property
    def timings(self) -> list[tuple[int, int]]:
        return [(r.dispatch_ns, r.arrival_ns) for r in self.rounds]

    def to_bytes(self) -> bytes:
        return encode_transcript(self)

    def hash(self) -> bytes:
        return digest("certrand/transcript", self.to_bytes())


@dataclass(frozen=True)
class CertifiedOutput:
    bits: np.ndarray
    transcript_hash: bytes
    n_out: int
    n_input: int
    seed_digest: bytes

    @property
    def expansion(self) -> bool:
        return self.n_out > self.n_input


# ---------------------------------------------------------------- operations


def generate_challenges(config: ProtocolConfig, challenge_bits) -> list[ChallengeSpec]:
    c = bitops.as_bits(challenge_bits)
    if c.size != config.challenge_bits:
        raise ShapeMismatch(f"C has {c.size} bits, need {config.rounds} x {config.seed_width}")
    w = config.seed_width
    return [
        ChallengeSpec.from_bits(i, c[i * w : (i + 1) * w], config.n_qubits, config.depth, config.samples_per_round)
        for i in range(config.rounds)
    ]


def unrank_subset(rank: int, n: int, k: int) -> frozenset[int]:
    """The ``rank``-th k-subset of ``range(n)`` in lexicographic order."""
    chosen = []
    for i in range(n):
        if k == 0:
            break
        with_i = math.comb(n - i - 1, k - 1)
        if rank < with_i:
            chosen.append(i)
            k -= 1
        else:
            rank -= with_i
    return frozenset(chosen)


def select_test_rounds(config: ProtocolConfig, private_test_bits) -> frozenset[int]:
    cp = bitops.as_bits(private_test_bits)
    if cp.size != config.test_bits:
        raise ShapeMismatch(f"C_p has {cp.size} bits, need {config.test_bits}")
    combos = math.comb(config.rounds, config.n_tested)
    return unrank_subset(bitops.to_int(cp) % combos, config.rounds, config.n_tested)


def check_latency(dispatch_ns: int, arrival_ns: int, threshold_ns: int) -> bool:
    """Inclusive bound: a response exactly at the threshold passes."""
    if arrival_ns < dispatch_ns:
        raise ClockViolation(f"arrival {arrival_ns} precedes dispatch {dispatch_ns}")
    return arrival_ns - dispatch_ns <= threshold_ns


def _well_formed(batch: SampleBatch, challenge: ChallengeSpec) -> bool:
    return batch.round_index == challenge.round_index and batch.outcomes.shape == (
        challenge.samples_requested,
        challenge.n_qubits,
    )


def verify_transcript(
    private_test_bits,
    challenges: Sequence[ChallengeSpec],
    batches: Sequence[SampleBatch | None],
    timings: Sequence[tuple[int, int] | None],
    config: ProtocolConfig,
) -> Verification:
    """Ver: a pure function of ``(C_p, C, R, timings, config)``."""
    L = config.rounds
    if len(challenges) != L or len(batches) != L or len(timings) != L:
        raise IncompleteTranscript(f"expected {L} rounds of challenges, batches and timings")
    if any(b is None for b in batches) or any(t is None for t in timings):
        raise IncompleteTranscript("missing batch or timing data")
    tested = select_test_rounds(config, private_test_bits)

    def reject(reason: str, **kw) -> Verification:
        return Verification(False, reason, 0.0, tested, **kw)

    for dispatch, arrival in timings:
        if not check_latency(dispatch, arrival, config.latency_threshold_ns):
            return reject("latency")
    for challenge, batch in zip(challenges, batches):
        if not _well_formed(batch, challenge):
            return reject("shape")

    scores: dict[int, XebScore] = {}
    ideals: dict[int, float] = {}
    for i in sorted(tested):
        table = simulate_probabilities(derive_circuit(challenges[i], config.sim_cap), config.sim_cap)
        scores[i] = xeb_score(table, batches[i].outcomes)
        ideals[i] = table.ideal_xeb()

    total = sum(s.sample_count for s in scores.values())
    mean_xeb = sum(s.value * s.sample_count for s in scores.values()) / total
    if config.xeb_threshold is None:
        threshold = 0.5 * float(np.mean(list(ideals.values())))
    else:
        threshold = config.xeb_threshold

    if config.acceptance == "mean":
        passed = mean_xeb >= threshold
    elif config.xeb_threshold is None:
        passed = all(scores[i].value >= 0.5 * ideals[i] for i in scores)
    else:
        passed = all(s.value >= threshold for s in scores.values())
    if not passed:
        return reject("xeb", scores=scores, mean_xeb=mean_xeb, threshold=threshold)
    return Verification(True, "ok", config.accepted_entropy, tested, scores, mean_xeb, threshold)


def raw_untested(batches: Sequence[SampleBatch], tested) -> np.ndarray:
    parts = [b.outcomes.reshape(-1) for i, b in enumerate(batches) if i not in tested]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def extract_output(
    extractor_seed,
    batches: Sequence[SampleBatch],
    k: float,
    epsilon: float,
    *,
    n_input: int | None = None,
    transcript_hash: bytes = ZERO_DIGEST,
) -> CertifiedOutput:
    """Ext: Toeplitz-hash the concatenated outcomes of ``batches``.

    ``batches`` are the untested rounds only, in round order.
    """
    if k <= 2 * math.log2(1 / epsilon):
        raise InsufficientEntropy(f"k={k} bits does not exceed 2 log2(1/eps)={2 * math.log2(1 / epsilon):g}")
    m = lhl_output_len(k, epsilon)
    if m == 0:
        raise InsufficientEntropy("leftover hash lemma leaves no output bits")
    raw = raw_untested(batches, ())
    if raw.size == 0:
        raise InsufficientEntropy("no untested outcomes to extract from")
    seed = bitops.as_bits(extractor_seed)
    out = toeplitz_extract(ToeplitzSpec(seed, raw.size, m), raw)
    return CertifiedOutput(
        bits=out,
        transcript_hash=transcript_hash,
        n_out=m,
        n_input=n_input if n_input is not None else seed.size,
        seed_digest=seed_digest(seed),
    )


def seed_digest(seed) -> bytes:
    return digest("certrand/extractor-seed", bitops.to_hex(seed))


def build_transcript(config, private_test_bits, challenges, batches, timings, verification) -> Transcript:
    records = tuple(
        RoundRecord(
            challenge=c,
            batch=b,
            dispatch_ns=t[0],
            arrival_ns=t[1],
            tested=i in verification.tested,
            score=verification.scores.get(i),
        )
        for i, (c, b, t) in enumerate(zip(challenges, batches, timings))
    )
    return Transcript(
        config=config,
        private_test_bits=bitops.as_bits(private_test_bits),
        rounds=records,
        accepted=verification.accepted,
        reason=verification.reason,
        k=verification.k,
        mean_xeb=verification.mean_xeb,
        threshold=verification.threshold,
    )


def reverify(transcript: Transcript) -> Verification:
    return verify_transcript(
        transcript.private_test_bits,
        transcript.challenges,
        transcript.batches,
        transcript.timings,
        transcript.config,
    )


def finish(config: ProtocolConfig, transcript: Transcript, extractor_seed) -> CertifiedOutput | None:
    """Run Ext on an accepted transcript; ``None`` for a rejected one."""
    if not transcript.accepted:
        return None
    tested = {i for i, r in enumerate(transcript.rounds) if r.tested}
    untested = [r.batch for i, r in enumerate(transcript.rounds) if i not in tested]
    return extract_output(
        extractor_seed,
        untested,
        transcript.k,
        config.extractor_epsilon,
        n_input=config.input_bits,
        transcript_hash=transcript.hash(),
    )


@dataclass(frozen=True)
class SessionResult:
    transcript: Transcript
    output: CertifiedOutput | None


def collect_rounds(config: ProtocolConfig, challenges, channel: Channel):
    """Dispatch challenges in order, one outstanding request at a time."""
    batches, timings = [], []
    for challenge in challenges:
        try:
            reply, dispatch, arrival = timed_request(channel, Frame(MsgType.CHALLENGE, encode_challenge(challenge)))
        except TransportError as exc:
            raise SessionAborted(challenge.round_index, f"{type(exc).__name__}: {exc}") from exc
        if reply.msg_type != MsgType.SAMPLES:
            batch = SampleBatch(challenge.round_index, np.zeros((0, challenge.n_qubits), dtype=np.uint8))
        else:
            try:
                batch = decode_batch(reply.payload)
            except (DecodeError, ShapeMismatch):
                batch = SampleBatch(challenge.round_index, np.zeros((0, challenge.n_qubits), dtype=np.uint8))
        batches.append(batch)
        timings.append((dispatch, arrival))
    return batches, timings


def run_session(config: ProtocolConfig, inputs: InputRandomness, channel: Channel) -> SessionResult:
    """One full verifier session against the prover behind ``channel``.

    Only CHALLENGE frames leave the verifier; ``C_p`` and ``S`` stay local.
    """
    inputs.check(config)
    challenges = generate_challenges(config, inputs.challenge_bits)
    batches, timings = collect_rounds(config, challenges, channel)
    verification = verify_transcript(inputs.private_test_bits, challenges, batches, timings, config)
    transcript = build_transcript(config, inputs.private_test_bits, challenges, batches, timings, verification)
    return SessionResult(transcript, finish(config, transcript, inputs.extractor_seed))


# ---------------------------------------------------------------- serialization

TRANSCRIPT_MAGIC = b"CRTX"
OUTPUT_MAGIC = b"CROU"
_NONE = -1.0  # encodes an unset optional float config field


def write_config(w: Writer, c: ProtocolConfig) -> Writer:
    w.u32(c.rounds).u32(c.n_qubits).u32(c.depth).u32(c.samples_per_round)
    w.f64(_NONE if c.xeb_threshold is None else c.xeb_threshold)
    w.f64(c.test_fraction).i64(c.latency_threshold_ns)
    w.f64(_NONE if c.entropy_rate is None else c.entropy_rate)
    w.f64(c.extractor_epsilon).u32(c.seed_width).u32(c.test_bits_margin)
    return w.text(c.acceptance).u32(c.sim_cap)


def read_config(r: Reader) -> ProtocolConfig:
    rounds, n, d, m = r.u32(), r.u32(), r.u32(), r.u32()
    chi = r.f64()
    f, latency = r.f64(), r.i64()
    rate = r.f64()
    eps, width, margin = r.f64(), r.u32(), r.u32()
    acceptance, cap = r.text(), r.u32()
    try:
        return ProtocolConfig(
            rounds=rounds, n_qubits=n, depth=d, samples_per_round=m,
            xeb_threshold=None if chi == _NONE else chi, test_fraction=f,
            latency_threshold_ns=latency, entropy_rate=None if rate == _NONE else rate,
            extractor_epsilon=eps, seed_width=width, test_bits_margin=margin,
            acceptance=acceptance, sim_cap=cap,
        )
    except ValueError as exc:
        raise DecodeError(f"invalid config: {exc}") from exc


def encode_transcript(t: Transcript) -> bytes:
    w = Writer(TRANSCRIPT_MAGIC, 1)
    write_config(w, t.config)
    w.bits(t.private_test_bits)
    w.u32(len(t.rounds))
    for rec in t.rounds:
        write_challenge(w, rec.challenge)
        write_batch(w, rec.batch)
        w.i64(rec.dispatch_ns).i64(rec.arrival_ns).u8(int(rec.tested))
        if rec.score is None:
            w.u8(0)
        else:
            w.u8(1).f64(rec.score.value).u32(rec.score.sample_count).f64(rec.score.standard_error)
    w.u8(int(t.accepted)).text(t.reason).f64(t.k).f64(t.mean_xeb).f64(t.threshold)
    return w.getvalue()


def decode_transcript(data: bytes) -> Transcript:
    r = Reader(data, TRANSCRIPT_MAGIC)
    config = read_config(r)
    cp = r.bits()
    records = []
    for _ in range(r.u32()):
        challenge = read_challenge(r)
        batch = read_batch(r)
        dispatch, arrival, tested = r.i64(), r.i64(), bool(r.u8())
        score = XebScore(r.f64(), r.u32(), r.f64()) if r.u8() else None
        records.append(RoundRecord(challenge, batch, dispatch, arrival, tested, score))
    accepted, reason, k, mean_xeb, threshold = bool(r.u8()), r.text(), r.f64(), r.f64(), r.f64()
    r.done()
    return Transcript(config, cp, tuple(records), accepted, reason, k, mean_xeb, threshold)


def encode_output(o: CertifiedOutput) -> bytes:
    w = Writer(OUTPUT_MAGIC, 1)
    w.bits(o.bits).blob(o.transcript_hash).u64(o.n_out).u64(o.n_input).blob(o.seed_digest)
    return w.getvalue()


def decode_output(data: bytes) -> CertifiedOutput:
    r = Reader(data, OUTPUT_MAGIC)
    o = CertifiedOutput(r.bits(), r.blob(), r.u64(), r.u64(), r.blob())
    r.done()
    return o


def config_replace(config: ProtocolConfig, **changes) -> ProtocolConfig:
    return replace(config, **changes)


CONFIG_FIELDS = tuple(f.name for f in fields(ProtocolConfig))
