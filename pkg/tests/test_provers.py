import numpy as np
import pytest

from certrand.circuit import ChallengeSpec, derive_circuit, outcome_indices, simulate_probabilities, xeb_score
from certrand.messages import decode_batch
from certrand.provers import Colluding, Honest, ProverEndpoint, Replay, Slow, Uniform, respond
from certrand.statcheck import chi_square_uniform
from certrand.transport import Frame, MsgType, SimClock
from certrand.messages import encode_challenge


def challenge(n=4, d=6, m=100, seed=b"\x21" * 16, r=0):
    return ChallengeSpec(r, seed, n, d, m)


@pytest.mark.parametrize("kind", [Honest(0.0), Honest(0.4), Uniform(), Slow(5)])
def test_batch_shape(kind):
    b = respond(kind, challenge(n=5, m=33), b"k", SimClock())
    assert b.outcomes.shape == (33, 5)
    assert b.round_index == 0


def test_fully_depolarized_is_uniform():
    c = challenge(n=4, m=10**4)
    idx = outcome_indices(respond(Honest(1.0), c, b"depolarized").outcomes, 4)
    assert chi_square_uniform(np.bincount(idx, minlength=16)).passed


def test_honest_frequencies_match_table():
    c = challenge(n=3, d=8, m=10**5)
    probs = simulate_probabilities(derive_circuit(c)).probs
    idx = outcome_indices(respond(Honest(0.0), c, b"multinomial").outcomes, 3)
    freq = np.bincount(idx, minlength=8)
    sd = np.sqrt(10**5 * probs * (1 - probs))
    assert np.all(np.abs(freq - 10**5 * probs) <= 5 * sd + 1e-9)


def test_replay_returns_same_outcomes():
    stale = respond(Honest(0.0), challenge(), b"x")
    a = respond(Replay(stale), challenge(seed=b"\x01" * 16), b"y")
    b = respond(Replay(stale), challenge(seed=b"\x02" * 16, r=3), b"y")
    assert np.array_equal(a.outcomes, b.outcomes)
    assert b.round_index == 3


def test_colluding_uses_table_only_on_hits():
    target = challenge(seed=b"\x0a" * 16)
    stored = respond(Honest(0.0), target, b"pre")
    kind = Colluding({target.seed: stored})
    assert np.array_equal(respond(kind, target).outcomes, stored.outcomes)
    miss = respond(kind, challenge(seed=b"\x0b" * 16), b"z")
    assert miss.outcomes.shape == stored.outcomes.shape


def test_uniform_expected_xeb_is_zero():
    c = challenge(n=6, d=8, m=10**4)
    s = xeb_score(simulate_probabilities(derive_circuit(c)), respond(Uniform(), c, b"u").outcomes)
    assert abs(s.value) <= 5 * s.standard_error


def test_slow_prover_advances_clock():
    clock = SimClock()
    respond(Slow(7_000), challenge(), b"", clock)
    assert clock.now() == 7_000


def test_endpoint_answers_frames():
    ep = ProverEndpoint(Honest(0.0), b"k", SimClock())
    reply = ep(Frame(MsgType.CHALLENGE, encode_challenge(challenge(m=12))))
    assert reply.msg_type == MsgType.SAMPLES
    assert decode_batch(reply.payload).size == 12
    assert ep(Frame(MsgType.CHALLENGE, b"junk")).msg_type == MsgType.ERROR
    assert ep(Frame(MsgType.PULSE, b"")).msg_type == MsgType.ERROR
