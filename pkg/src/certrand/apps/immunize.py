"""Certified randomness as an immunizer for a backdoored PRNG.

The verifier's whole input ``C || C_p || S`` comes from the backdoored
generator. The trapdoor holder sees every generator output, so it predicts
the generator perfectly and knows every challenge, the tested subset and
the extractor seed. What it cannot know is the prover's sampling
randomness; its best guess at the certified output is to sample the ideal
circuit distributions itself and extract with the known seed.

Side information is modelled as the classical output history only; shared
entanglement between adversary and prover is not representable here.

Report line columns (space separated, ``key=value``)::

    session raw_trials raw_correct output_bits output_correct first_bit_correct
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import bits as bitops
from ..circuit import derive_circuit, indices_to_bits, simulate_probabilities
from ..errors import ImmunizationInconclusive
from ..messages import SampleBatch
from ..protocol import CertifiedOutput, InputRandomness, ProtocolConfig, extract_output, generate_challenges, run_session, select_test_rounds
from ..provers import Honest, ProverEndpoint, sample_ideal
from ..transport import InProcessChannel, SimClock
from .prng import BackdooredPrng, Trapdoor, backdoor_predict, output_bits, prng_bits, prng_next

REPORT_COLUMNS = ("session", "raw_trials", "raw_correct", "output_bits", "output_correct", "first_bit_correct")


@dataclass(frozen=True)
class AdversaryReport:
    session: int
    raw_trials: int
    raw_correct: int
    output_bits: int
    output_correct: int
    first_bit_correct: bool

    @property
    def raw_rate(self) -> float:
        return self.raw_correct / self.raw_trials

    @property
    def output_rate(self) -> float:
        return self.output_correct / self.output_bits

    def render(self) -> str:
        values = (self.session, self.raw_trials, self.raw_correct, self.output_bits, self.output_correct, int(self.first_bit_correct))
        return " ".join(f"{k}={v}" for k, v in zip(REPORT_COLUMNS, values))


def _adversary_inputs(first_output: int, count: int, trapdoor: Trapdoor, prng: BackdooredPrng, n_bits: int):
    """Rebuild the generator's output from its first word via the trapdoor."""
    outputs = [first_output]
    while len(outputs) < count:
        outputs.append(backdoor_predict(trapdoor, outputs[-1], prng.params))
    return np.concatenate([output_bits(o, prng.params) for o in outputs])[:n_bits], outputs


def _guess_output(config: ProtocolConfig, inputs: InputRandomness, rng: np.random.Generator) -> np.ndarray:
    tested = select_test_rounds(config, inputs.private_test_bits)
    guesses = []
    for challenge in generate_challenges(config, inputs.challenge_bits):
        if challenge.round_index in tested:
            continue
        table = simulate_probabilities(derive_circuit(challenge))
        idx = sample_ideal(table.probs, challenge.samples_requested, rng)
        guesses.append(SampleBatch(challenge.round_index, indices_to_bits(idx, challenge.n_qubits)))
    out = extract_output(inputs.extractor_seed, guesses, config.accepted_entropy, config.extractor_epsilon)
    return out.bits


def immunized_run(
    prng: BackdooredPrng,
    trapdoor: Trapdoor,
    config: ProtocolConfig,
    prover_key: bytes,
    adversary_rng: np.random.Generator,
    session: int = 0,
) -> tuple[CertifiedOutput, AdversaryReport]:
    stream, outputs, after = prng_bits(prng, config.input_bits)
    inputs = InputRandomness.from_stream(config, stream)
    clock = SimClock()
    channel = InProcessChannel(ProverEndpoint(Honest(0.0), prover_key, clock), clock=clock)
    result = run_session(config, inputs, channel)
    if not result.transcript.accepted or result.output is None:
        raise ImmunizationInconclusive(f"session rejected ({result.transcript.reason}); nothing to attack")

    # the adversary sees the first word, then predicts the rest and the word after
    seen_bits, predicted = _adversary_inputs(outputs[0], len(outputs), trapdoor, prng, config.input_bits)
    actual_next, _ = prng_next(after)
    truth = outputs + [actual_next]
    guesses = predicted + [backdoor_predict(trapdoor, predicted[-1], prng.params)]
    raw_correct = sum(int(g == t) for g, t in zip(guesses[1:], truth[1:]))

    known = InputRandomness.from_stream(config, seen_bits)
    guess = _guess_output(config, known, adversary_rng)
    hits = guess == result.output.bits
    report = AdversaryReport(session, len(truth) - 1, raw_correct, int(hits.size), int(hits.sum()), bool(hits[0]))
    return result.output, report
