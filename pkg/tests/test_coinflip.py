import numpy as np
import pytest

from certrand import bits as bitops
from certrand.coinflip import (
    NONCE_BYTES,
    AdaptiveParty,
    Contribution,
    EquivocatingParty,
    FixedParty,
    Party,
    PartyHandle,
    WithholdingParty,
    commit,
    opens,
    run_coinflip,
)
from certrand.errors import Abort
from certrand.statcheck import chi_square_homogeneity, monobit
from certrand.transport import InProcessChannel, SimClock


def handle(party, **kw):
    return PartyHandle(party.party_id, InProcessChannel(party, clock=SimClock(), **kw))


def contribution(r, nonce=bytes(NONCE_BYTES), pid="a"):
    return Contribution(pid, np.asarray(r, np.uint8), nonce)


def test_commit_is_deterministic():
    c = contribution([1, 0, 1])
    assert commit(c, b"t") == commit(c, b"t")


def test_binding_to_value():
    c = contribution([1, 0, 1, 1])
    com = commit(c)
    assert opens(com, c)
    assert not opens(com, contribution([0, 0, 1, 1]))


def test_nonces_separate_digests(rng):
    r = np.array([1, 1, 0], np.uint8)
    seen = {commit(contribution(r, rng.bytes(32))).digest for _ in range(10**4)}
    assert len(seen) == 10**4


def test_hiding_digest_distribution(rng):
    zeros = [commit(contribution(np.zeros(16, np.uint8), rng.bytes(32))).digest[0] for _ in range(10**4)]
    uniform = [commit(contribution(bitops.random_bits(16, rng), rng.bytes(32))).digest[0] for _ in range(10**4)]
    # coarse 16-bucket histogram of the first digest byte
    a = np.bincount(np.array(zeros) >> 4, minlength=16)
    b = np.bincount(np.array(uniform) >> 4, minlength=16)
    assert chi_square_homogeneity(a, b).passed


def test_binding_harness_finds_no_collision(rng):
    seen = {}
    for _ in range(10**4):
        c = contribution(bitops.random_bits(8, rng), rng.bytes(32))
        key = (bitops.to_hex(c.r), c.nonce)
        d = commit(c).digest
        assert seen.setdefault(d, key) == key


def test_xor_of_two_parties():
    a = FixedParty("a", [0, 1, 0, 1], np.random.default_rng(1))
    b = FixedParty("b", [0, 0, 1, 1], np.random.default_rng(2))
    assert run_coinflip([handle(a), handle(b)], 4, b"s").tolist() == [0, 1, 1, 0]


def test_equivocation_aborts_with_mismatch():
    with pytest.raises(Abort) as err:
        run_coinflip([handle(Party("a")), handle(EquivocatingParty("b"))], 8)
    assert (err.value.party, err.value.reason) == ("b", "mismatch")


def test_withholding_aborts_missing():
    with pytest.raises(Abort) as err:
        run_coinflip([handle(WithholdingParty("w")), handle(Party("b"))], 8)
    assert (err.value.party, err.value.reason) == ("w", "missing")


def test_timeout_aborts():
    late = handle(Party("slow"), timeout_ns=10, partitions=[(0, 10**12)])
    with pytest.raises(Abort) as err:
        run_coinflip([handle(Party("a")), late], 8)
    assert (err.value.party, err.value.reason) == ("slow", "timeout")


def test_party_id_rules():
    with pytest.raises(ValueError):
        run_coinflip([handle(Party("a"))], 4)
    with pytest.raises(ValueError):
        run_coinflip([handle(Party("a")), handle(Party("a"))], 4)


def test_one_honest_party_makes_output_uniform():
    honest_rng = np.random.default_rng(7)
    outputs = []
    for s in range(10**4):
        parties = [
            Party("honest", honest_rng),
            AdaptiveParty("m1", lambda w, seen: np.ones(w, np.uint8), np.random.default_rng(s)),
            FixedParty("m2", [1, 1, 1, 1, 0, 0, 0, 0], np.random.default_rng(s + 1)),
        ]
        outputs.append(run_coinflip([handle(p) for p in parties], 8, str(s).encode()))
    assert monobit(np.concatenate(outputs)).passed


def test_rushing_colluder_cannot_hit_target_set():
    # target: any 32-bit value whose top 16 bits are zero, 2^16 of 2^32 values
    width = 32
    honest_rng = np.random.default_rng(99)

    def steer(w, seen):
        # sees the honest commitment digest only; best it can do is a fixed guess
        return np.r_[np.zeros(16, np.uint8), bitops.from_bytes(seen[0].digest[:2])]

    hits = 0
    sessions = 10**4
    for s in range(sessions):
        parties = [Party("honest", honest_rng), AdaptiveParty("colluder", steer, np.random.default_rng(s))]
        z = run_coinflip([handle(p) for p in parties], width, str(s).encode())
        hits += not z[:16].any()
    # mean sessions * 2^-16 ~ 0.15; P(hits >= 4) under chance is ~2e-5
    assert hits <= 3
