"""Jointly certified randomness: verifiers coin-flip the protocol inputs.

Convention for splitting the joint randomness among verifiers:

* phase 1, before any challenge is sent: a coin flip yields ``C``;
* phase 2, after the last prover response has arrived: a second coin flip
  yields ``C_p || S``.

Because ``C_p`` and ``S`` are fixed only after the prover has committed to
every response, every verifier may learn them, and all honest verifiers
compute the same verdict and the same certified output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coinflip import PartyHandle, run_coinflip
from .protocol import (
    InputRandomness,
    ProtocolConfig,
    SessionResult,
    build_transcript,
    collect_rounds,
    finish,
    generate_challenges,
    verify_transcript,
)
from .transport import Channel


@dataclass(frozen=True)
class JointResult(SessionResult):
    inputs: InputRandomness = None


def run_joint_session(
    config: ProtocolConfig,
    verifiers: Sequence[PartyHandle],
    prover: Channel,
    session_id: bytes = b"",
) -> JointResult:
    challenge_bits = run_coinflip(verifiers, config.challenge_bits, b"challenges:" + session_id)
    challenges = generate_challenges(config, challenge_bits)
    batches, timings = collect_rounds(config, challenges, prover)
    tail = run_coinflip(verifiers, config.test_bits + config.seed_bits, b"post-response:" + session_id)
    inputs = InputRandomness(challenge_bits, tail[: config.test_bits], tail[config.test_bits :])
    verification = verify_transcript(inputs.private_test_bits, challenges, batches, timings, config)
    transcript = build_transcript(config, inputs.private_test_bits, challenges, batches, timings, verification)
    return JointResult(transcript, finish(config, transcript, inputs.extractor_seed), inputs)
