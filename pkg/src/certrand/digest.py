"""The repo-wide digest primitive: domain-separated SHA-256.

Every hash in the package (commitments, transcript hashes, pulse links,
circuit derivation, seed expansion) goes through :func:`digest` or
:func:`expand` with a distinct ASCII tag, so outputs of one use can never be
confused with another.
"""

from __future__ import annotations

import hashlib
import struct

DIGEST_SIZE = 32
ZERO_DIGEST = bytes(DIGEST_SIZE)


def _framed(tag: str, parts) -> bytes:
    out = bytearray()
    for item in (tag.encode("ascii"), *parts):
        if isinstance(item, int):
            item = struct.pack(">q", item)
        elif isinstance(item, str):
            item = item.encode("utf-8")
        out += struct.pack(">I", len(item))
        out += item
    return bytes(out)


def digest(tag: str, *parts: bytes | int | str) -> bytes:
    """SHA-256 over the length-prefixed encoding of ``(tag, *parts)``."""
    return hashlib.sha256(_framed(tag, parts)).digest()


def expand(tag: str, nbytes: int, *parts: bytes | int | str) -> bytes:
    """Counter-mode expansion: ``digest(tag, *parts, 0) || digest(..., 1) || ...``."""
    out = bytearray()
    block = 0
    while len(out) < nbytes:
        out += digest(tag, *parts, block)
        block += 1
    return bytes(out[:nbytes])
