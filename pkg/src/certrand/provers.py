"""Honest and adversarial provers answering circuit-sampling challenges."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .circuit import ChallengeSpec, derive_circuit, indices_to_bits, simulate_probabilities
from .digest import digest
from .errors import DecodeError, ShapeMismatch
from .messages import SampleBatch, decode_challenge, encode_batch
from .transport import Clock, Frame, MonotonicClock, MsgType, error_frame


@dataclass(frozen=True)
class Honest:
    """Ideal sampler mixed with global depolarizing noise of strength ``epsilon``."""

    epsilon: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("depolarization must lie in [0, 1]")


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class Replay:
    """Memory-stick attack: the same stored batch for every challenge."""

    batch: SampleBatch


@dataclass(frozen=True)
class Colluding:
    """Answers from a table precomputed for chosen seeds, uniform elsewhere."""

    table: Mapping[bytes, SampleBatch] = field(default_factory=dict)


@dataclass(frozen=True)
class Slow:
    """Honest(0) answers, but only after ``delay_ns`` of compute time."""

    delay_ns: int


ProverKind = Union[Honest, Uniform, Replay, Colluding, Slow]


def sample_stream(key: bytes, challenge: ChallengeSpec) -> np.random.Generator:
    seed = digest("certrand/prover-stream", key, challenge.seed, challenge.round_index)
    return np.random.default_rng(int.from_bytes(seed, "big"))


def sample_ideal(table_probs: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws of basis-state indices."""
    cdf = np.cumsum(table_probs)
    idx = np.searchsorted(cdf, rng.random(count) * cdf[-1], side="right")
    return np.minimum(idx, table_probs.size - 1)


def _honest(challenge: ChallengeSpec, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    m, n = challenge.samples_requested, challenge.n_qubits
    table = simulate_probabilities(derive_circuit(challenge))
    idx = sample_ideal(table.probs, m, rng)
    noisy = rng.random(m) < epsilon
    idx[noisy] = rng.integers(0, 1 << n, size=int(noisy.sum()))
    return idx


def respond(
    kind: ProverKind,
    challenge: ChallengeSpec,
    key: bytes = b"",
    clock: Clock | None = None,
) -> SampleBatch:
    """Answer one challenge. ``key`` seeds the prover's private sampling stream."""
    clock = clock if clock is not None else MonotonicClock()
    rng = sample_stream(key, challenge)
    m, n = challenge.samples_requested, challenge.n_qubits

    if isinstance(kind, Honest):
        idx = _honest(challenge, kind.epsilon, rng)
    elif isinstance(kind, Slow):
        clock.sleep(kind.delay_ns)
        idx = _honest(challenge, 0.0, rng)
    elif isinstance(kind, Replay):
        return SampleBatch(challenge.round_index, kind.batch.outcomes, clock.now())
    elif isinstance(kind, Colluding):
        stored = kind.table.get(challenge.seed)
        if stored is not None:
            return SampleBatch(challenge.round_index, stored.outcomes, clock.now())
        idx = rng.integers(0, 1 << n, size=m)
    elif isinstance(kind, Uniform):
        idx = rng.integers(0, 1 << n, size=m)
    else:
        raise TypeError(f"unknown prover kind {kind!r}")
    return SampleBatch(challenge.round_index, indices_to_bits(idx, n), clock.now())


class ProverEndpoint:
    """Frame handler exposing a prover on a channel. Serves one challenge at a time."""

    def __init__(self, kind: ProverKind, key: bytes = b"", clock: Clock | None = None):
        self.kind = kind
        self.key = key
        self.clock = clock if clock is not None else MonotonicClock()

    def __call__(self, frame: Frame) -> Frame:
        if frame.msg_type != MsgType.CHALLENGE:
            return error_frame(f"prover cannot handle {frame.msg_type.name}")
        try:
            challenge = decode_challenge(frame.payload)
        except (DecodeError, ShapeMismatch) as exc:
            return error_frame(f"bad challenge: {exc}")
        batch = respond(self.kind, challenge, self.key, self.clock)
        return Frame(MsgType.SAMPLES, encode_batch(batch))
