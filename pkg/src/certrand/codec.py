"""Canonical length-prefixed binary encoding.

Shared by transcripts, pulses, lottery results and wire payloads. All
integers are big-endian. Field primitives:

====================  =========================================
``u8`` / ``u32``      1 / 4 bytes unsigned
``u64`` / ``i64``     8 bytes unsigned / two's complement
``f64``               IEEE-754 double, big-endian
``blob``              u32 length, then raw bytes
``text``              blob of UTF-8
``bits``              u32 bit count, then MSB-first packed bytes
====================  =========================================

A document starts with a 4-byte magic and a 1-byte version. Decoding is
strict: truncation, trailing bytes, or a non-canonical bit padding all raise
:class:`DecodeError`, so every value has exactly one encoding.
"""

from __future__ import annotations

import struct

import numpy as np

from . import bits as bitops
from .errors import DecodeError


class Writer:
    def __init__(self, magic: bytes | None = None, version: int | None = None):
        self._buf = bytearray()
        if magic is not None:
            if len(magic) != 4:
                raise ValueError("magic must be 4 bytes")
            self._buf += magic
            self.u8(version if version is not None else 1)

    def u8(self, v: int) -> "Writer":
        self._buf += struct.pack(">B", v)
        return self

    def u32(self, v: int) -> "Writer":
        self._buf += struct.pack(">I", v)
        return self

    def u64(self, v: int) -> "Writer":
        self._buf += struct.pack(">Q", v)
        return self

    def i64(self, v: int) -> "Writer":
        self._buf += struct.pack(">q", v)
        return self

    def f64(self, v: float) -> "Writer":
        self._buf += struct.pack(">d", v)
        return self

    def blob(self, data: bytes) -> "Writer":
        self.u32(len(data))
        self._buf += data
        return self

    def text(self, s: str) -> "Writer":
        return self.blob(s.encode("utf-8"))

    def bits(self, b) -> "Writer":
        arr = bitops.as_bits(b)
        self.u32(arr.size)
        self._buf += bitops.pack(arr)
        return self

    def getvalue(self) -> bytes:
        return bytes(self._buf)


class Reader:
    def __init__(self, data: bytes, magic: bytes | None = None, versions=(1,)):
        self._data = memoryview(data)
        self._pos = 0
        self.version = None
        if magic is not None:
            if bytes(self._take(4)) != magic:
                raise DecodeError(f"bad magic, expected {magic!r}")
            self.version = self.u8()
            if self.version not in versions:
                raise DecodeError(f"unsupported version {self.version}")

    def _take(self, n: int) -> memoryview:
        if self._pos + n > len(self._data):
            raise DecodeError("truncated input")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def i64(self) -> int:
        return struct.unpack(">q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack(">d", self._take(8))[0]

    def blob(self) -> bytes:
        return bytes(self._take(self.u32()))

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("invalid utf-8") from exc

    def bits(self) -> np.ndarray:
        n = self.u32()
        raw = bytes(self._take((n + 7) // 8))
        pad = (-n) % 8
        if pad and raw[-1] & ((1 << pad) - 1):
            raise DecodeError("non-zero bit padding")
        return bitops.unpack(raw, n)

    def done(self) -> None:
        if self._pos != len(self._data):
            raise DecodeError(f"{len(self._data) - self._pos} trailing bytes")
