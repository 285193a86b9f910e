import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from certrand import bits as bitops
from certrand.errors import CorruptFrame, Disconnected, NeedMoreBytes, Oversize, ProtocolError, Timeout
from certrand.protocol import InputRandomness, ProtocolConfig, run_session
from certrand.provers import Honest, ProverEndpoint
from certrand.transport import (
    HEADER,
    MAX_PAYLOAD,
    CapturedFrame,
    FixedLatency,
    Frame,
    InProcessChannel,
    MonotonicClock,
    MsgType,
    SimClock,
    StreamChannel,
    StreamServer,
    UniformJitter,
    decode_frame,
    encode_frame,
    timed_request,
)

echo = lambda f: Frame(f.msg_type, f.payload)
MSG_TYPES = list(MsgType)


def random_frame(rng, max_len=300):
    return Frame(MSG_TYPES[int(rng.integers(len(MSG_TYPES)))], rng.bytes(int(rng.integers(0, max_len))))


def test_roundtrip_ten_thousand_frames(rng):
    for _ in range(10**4):
        f = random_frame(rng)
        wire = encode_frame(f)
        assert decode_frame(wire) == (f, len(wire))


@settings(max_examples=200)
@given(st.sampled_from(MSG_TYPES), st.binary(max_size=200), st.sampled_from(MSG_TYPES), st.binary(max_size=200))
def test_distinct_frames_encode_distinctly(t1, p1, t2, p2):
    a, b = Frame(t1, p1), Frame(t2, p2)
    assert (encode_frame(a) == encode_frame(b)) == (a == b)


def test_truncation_needs_more_bytes(rng):
    for _ in range(500):
        wire = encode_frame(random_frame(rng))
        with pytest.raises(NeedMoreBytes):
            decode_frame(wire[:-1])


def test_single_bit_flip_is_corrupt(rng):
    for _ in range(500):
        f = random_frame(rng)
        wire = bytearray(encode_frame(f))
        span = (HEADER.size, len(wire)) if f.payload else (len(wire) - 4, len(wire))
        pos = int(rng.integers(*span))
        wire[pos] ^= 1 << int(rng.integers(8))
        with pytest.raises(CorruptFrame):
            decode_frame(bytes(wire))


def test_header_errors():
    wire = bytearray(encode_frame(Frame(MsgType.PULSE, b"x")))
    with pytest.raises(ProtocolError):
        decode_frame(b"XXXX" + bytes(wire[4:]))
    bad_version = bytearray(wire)
    bad_version[4] = 9
    with pytest.raises(ProtocolError):
        decode_frame(bytes(bad_version))
    with pytest.raises(Oversize):
        encode_frame(Frame(MsgType.PULSE, bytes(MAX_PAYLOAD + 1)))
    huge = HEADER.pack(b"CRNF", 1, 7, MAX_PAYLOAD + 1)
    with pytest.raises(Oversize):
        decode_frame(huge)


def test_concatenated_frames_decode_in_sequence(rng):
    frames = [random_frame(rng) for _ in range(5)]
    buf = b"".join(encode_frame(f) for f in frames)
    out = []
    while buf:
        f, used = decode_frame(buf)
        out.append(f)
        buf = buf[used:]
    assert out == frames


def test_simulated_fixed_latency_is_exact():
    ch = InProcessChannel(echo, clock=SimClock(), latency=FixedLatency(10_000_000))
    _, dispatch, arrival = timed_request(ch, Frame(MsgType.PULSE, b"hi"))
    assert arrival - dispatch == 10_000_000


def test_real_clock_fixed_latency_within_slack():
    ch = InProcessChannel(echo, clock=MonotonicClock(), latency=FixedLatency(10_000_000))
    _, dispatch, arrival = timed_request(ch, Frame(MsgType.PULSE, b"hi"))
    assert 10_000_000 <= arrival - dispatch < 10_000_000 + 50_000_000


def test_jitter_stays_in_range():
    j = UniformJitter(5, 9, seed=3)
    draws = [j.sample() for _ in range(1000)]
    assert min(draws) >= 5 and max(draws) <= 9 and len(set(draws)) == 5


def test_arrival_never_precedes_dispatch(rng):
    ch = InProcessChannel(echo, clock=SimClock(), latency=UniformJitter(0, 1000, seed=1))
    for _ in range(200):
        _, d, a = timed_request(ch, random_frame(rng, 20))
        assert a >= d


def test_partition_times_out():
    clock = SimClock()
    ch = InProcessChannel(echo, clock=clock, timeout_ns=500, partitions=[(0, 1000)])
    with pytest.raises(Timeout):
        ch.request(Frame(MsgType.PULSE))
    clock.sleep(1000)
    assert ch.request(Frame(MsgType.PULSE, b"ok")).payload == b"ok"


def test_slow_handler_times_out():
    clock = SimClock()

    def slow(f):
        clock.sleep(2000)
        return f

    with pytest.raises(Timeout):
        InProcessChannel(slow, clock=clock, timeout_ns=1000).request(Frame(MsgType.PULSE))


def test_closed_channel():
    ch = InProcessChannel(echo)
    ch.close()
    with pytest.raises(Disconnected):
        ch.request(Frame(MsgType.PULSE))


def test_stream_loopback():
    with StreamServer(echo) as server:
        ch = StreamChannel(*server.address)
        try:
            reply, dispatch, arrival = timed_request(ch, Frame(MsgType.PULSE, b"loop" * 1000))
        finally:
            ch.close()
    assert reply.payload == b"loop" * 1000 and arrival - dispatch > 0


def test_stream_handler_failure_becomes_error_frame():
    def boom(f):
        raise RuntimeError("nope")

    with StreamServer(boom) as server:
        ch = StreamChannel(*server.address)
        try:
            assert ch.request(Frame(MsgType.PULSE)).msg_type == MsgType.ERROR
        finally:
            ch.close()


def test_stream_connect_refused():
    with StreamServer(echo) as server:
        host, port = server.address
    with pytest.raises(Disconnected):
        StreamChannel(host, port, timeout_ns=10**9)


def private_values_absent(frames: list[CapturedFrame], inputs: InputRandomness) -> bool:
    wire = b"".join(f.data for f in frames)
    secrets = []
    for bits in (inputs.private_test_bits, inputs.extractor_seed):
        secrets += [bitops.pack(bits), bitops.to_hex(bits).encode(), bitops.to_str(bits).encode()]
        packed = bitops.pack(bits)
        secrets += [packed[i : i + 8] for i in range(0, len(packed) - 8, 4)]
    return not any(s in wire for s in secrets)


@pytest.mark.parametrize("mode", ["inprocess", "stream"])
def test_private_values_never_on_the_wire(mode, rng):
    cfg = ProtocolConfig()
    inputs = InputRandomness.generate(cfg, rng)
    capture: list[CapturedFrame] = []
    if mode == "inprocess":
        clock = SimClock()
        run_session(cfg, inputs, InProcessChannel(ProverEndpoint(Honest(0.0), b"k", clock), clock=clock, capture=capture))
    else:
        with StreamServer(ProverEndpoint(Honest(0.0), b"k")) as server:
            ch = StreamChannel(*server.address, capture=capture)
            run_session(cfg, inputs, ch)
            ch.close()
    assert len(capture) == 2 * cfg.rounds
    assert {decode_frame(f.data)[0].msg_type for f in capture if f.direction == "out"} == {MsgType.CHALLENGE}
    assert private_values_absent(capture, inputs)
