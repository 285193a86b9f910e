"""Sloth-style verifiable delay function: iterated modular square roots.

For a prime ``p = 3 (mod 4)`` exactly one of ``x`` and ``-x`` is a square
for ``x != 0``. One root step maps ``x`` to

* the even square root of ``x`` when ``x`` is a quadratic residue,
* the odd square root of ``-x`` otherwise,

which is a permutation of ``Z_p`` (inverse: square, negate if odd). Before
every step after the first, the bijection ``x -> x ^ 1`` (kept in range by
fixing ``p - 1``) is applied so that consecutive steps do not commute.

Evaluating costs one ``(p+1)/4`` exponentiation per step; verifying costs
one squaring per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import sympy

from .digest import digest, expand
from .errors import RangeError

# largest 256-bit prime with p = 3 (mod 4): 2^256 - 189
DEFAULT_PRIME = 2**256 - 189


@dataclass(frozen=True)
class VdfParams:
    p: int = DEFAULT_PRIME
    t: int = 1 << 10
    min_bits: int = 256

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("iteration count must be non-negative")
        if self.p % 4 != 3:
            raise ValueError("p must be 3 mod 4")
        if self.p.bit_length() < self.min_bits:
            raise ValueError(f"p has {self.p.bit_length()} bits, need at least {self.min_bits}")
        if not sympy.isprime(self.p):
            raise ValueError("p is not prime")


def _flip(x: int, p: int) -> int:
    y = x ^ 1
    return y if y < p else x


def root_step(x: int, p: int) -> int:
    r = pow(x, (p + 1) // 4, p)
    if r * r % p == x:
        return r if r % 2 == 0 else p - r
    # x is a non-residue, so r is a root of -x
    return r if r % 2 == 1 else p - r


def square_step(y: int, p: int) -> int:
    s = y * y % p
    return s if y % 2 == 0 else (p - s) % p


def _check_range(x: int, p: int) -> None:
    if not 0 <= x < p:
        raise RangeError(f"operand must lie in [0, p)")


def vdf_eval(x: int, params: VdfParams) -> int:
    _check_range(x, params.p)
    p = params.p
    for i in range(params.t):
        if i:
            x = _flip(x, p)
        x = root_step(x, p)
    return x


def vdf_verify(x: int, y: int, params: VdfParams) -> bool:
    _check_range(x, params.p)
    _check_range(y, params.p)
    p = params.p
    for i in range(params.t):
        y = square_step(y, p)
        if i < params.t - 1:
            y = _flip(y, p)
    return y == x


def vdf_input(previous_output: bytes, params: VdfParams) -> int:
    """Map the previous public output into ``Z_p``."""
    nbytes = (params.p.bit_length() + 7) // 8 + 16
    return int.from_bytes(expand("certrand/vdf-input", nbytes, previous_output), "big") % params.p


def seed_from_vdf(y: int, n_bits: int, params: VdfParams) -> bytes:
    """Expand a VDF output into ``n_bits`` of extractor seed (packed, MSB-first)."""
    raw = expand("certrand/vdf-seed", (n_bits + 7) // 8, y.to_bytes((params.p.bit_length() + 7) // 8, "big"))
    pad = (-n_bits) % 8
    if pad:
        raw = raw[:-1] + bytes([raw[-1] & (0xFF << pad) & 0xFF])
    return raw


def proof_digest(x: int, y: int, t: int) -> bytes:
    return digest("certrand/vdf-proof", str(x), str(y), t)
