"""Bitstrings as 1-D ``uint8`` numpy arrays holding 0/1.

Packing to bytes is MSB-first: bit 0 of the array is the high bit of byte 0.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch


def as_bits(value) -> np.ndarray:
    """Coerce a '0101' string, sequence of ints or array into a bit array."""
    if isinstance(value, str):
        if value and set(value) - {"0", "1"}:
            raise ShapeMismatch(f"not a bitstring: {value!r}")
        return np.frombuffer(value.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(value, dtype=np.uint8).reshape(-1)
    if arr.size and arr.max() > 1:
        raise ShapeMismatch("bit arrays may only hold 0 and 1")
    return arr


def zeros(n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.uint8)


def random_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def to_str(bits) -> str:
    return "".join("1" if b else "0" for b in as_bits(bits))


def pack(bits) -> bytes:
    return np.packbits(as_bits(bits)).tobytes()


def unpack(data: bytes, n: int) -> np.ndarray:
    if n > 8 * len(data):
        raise ShapeMismatch(f"{len(data)} bytes cannot hold {n} bits")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n].copy()


def from_bytes(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def to_int(bits) -> int:
    """Big-endian integer value of a bitstring (first bit most significant)."""
    b = as_bits(bits)
    return int.from_bytes(pack(b), "big") >> ((-len(b)) % 8) if len(b) else 0


def from_int(value: int, n: int) -> np.ndarray:
    if value < 0 or value >> n:
        raise ShapeMismatch(f"{value} does not fit in {n} bits")
    nbytes = (n + 7) // 8
    raw = (value << ((-n) % 8)).to_bytes(nbytes, "big")
    return unpack(raw, n)


def xor(a, b) -> np.ndarray:
    a, b = as_bits(a), as_bits(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"xor of {a.size} and {b.size} bits")
    return a ^ b


def to_hex(bits) -> str:
    """Hex of the packed bytes prefixed by the bit length, e.g. ``12:a5f0``."""
    b = as_bits(bits)
    return f"{b.size}:{pack(b).hex()}"


def from_hex(text: str) -> np.ndarray:
    n, _, hexdigits = text.strip().partition(":")
    return unpack(bytes.fromhex(hexdigits), int(n))
