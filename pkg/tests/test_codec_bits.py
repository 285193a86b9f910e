import numpy as np
import pytest
from hypothesis import given, strategies as st

from certrand import bits as bitops
from certrand.codec import Reader, Writer
from certrand.digest import digest, expand
from certrand.errors import DecodeError, ShapeMismatch
from certrand.messages import SampleBatch, decode_batch, decode_challenge, encode_batch, encode_challenge
from certrand.circuit import ChallengeSpec

bitlists = st.lists(st.integers(0, 1), max_size=200)


@given(bitlists)
def test_pack_unpack(bits):
    b = np.array(bits, np.uint8)
    assert np.array_equal(bitops.unpack(bitops.pack(b), b.size), b)


@given(bitlists)
def test_hex_roundtrip(bits):
    b = np.array(bits, np.uint8)
    assert np.array_equal(bitops.from_hex(bitops.to_hex(b)), b)


@given(st.integers(0, 2**70))
def test_int_roundtrip(v):
    assert bitops.to_int(bitops.from_int(v, 72)) == v


def test_bit_conventions():
    assert bitops.pack([1, 0, 0, 0, 0, 0, 0, 1, 1]) == b"\x81\x80"
    assert bitops.to_int([1, 1, 0]) == 6
    with pytest.raises(ShapeMismatch):
        bitops.as_bits([0, 2])
    with pytest.raises(ShapeMismatch):
        bitops.xor([1], [1, 0])


def test_digest_framing_is_unambiguous():
    assert digest("t", b"ab", b"c") != digest("t", b"a", b"bc")
    assert digest("t", b"x") != digest("u", b"x")
    assert digest("t", 1) != digest("t", "1")
    assert len(expand("t", 100, b"x")) == 100 and expand("t", 100, b"x")[:32] == expand("t", 32, b"x")


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**64 - 1), st.integers(-(2**63), 2**63 - 1),
       st.floats(allow_nan=False), st.binary(max_size=100), st.text(max_size=30), bitlists)
def test_writer_reader_roundtrip(a, b, c, d, blob, text, bits):
    w = Writer(b"TEST", 2).u32(a).u64(b).i64(c).f64(d).blob(blob).text(text).bits(np.array(bits, np.uint8))
    r = Reader(w.getvalue(), b"TEST", (2,))
    assert (r.u32(), r.u64(), r.i64(), r.f64(), r.blob(), r.text()) == (a, b, c, d, blob, text)
    assert r.bits().tolist() == bits
    r.done()


def test_reader_strictness():
    data = Writer(b"TEST", 1).u32(5).getvalue()
    with pytest.raises(DecodeError):
        Reader(data[:-1], b"TEST").u32()
    trailing = Reader(data + b"\x00", b"TEST")
    trailing.u32()
    with pytest.raises(DecodeError):
        trailing.done()
    with pytest.raises(DecodeError):
        Reader(data, b"NOPE")
    with pytest.raises(DecodeError):
        Reader(data, b"TEST", (2,))
    padded = bytearray(Writer().bits(np.array([1, 0, 1], np.uint8)).getvalue())
    padded[-1] |= 1
    with pytest.raises(DecodeError):
        Reader(bytes(padded)).bits()


def test_message_roundtrips(rng):
    c = ChallengeSpec(3, rng.bytes(16), 5, 7, 11)
    assert decode_challenge(encode_challenge(c)) == c
    b = SampleBatch(3, rng.integers(0, 2, (11, 5)).astype(np.uint8), 12345)
    assert decode_batch(encode_batch(b)) == b
