"""Seeded Toeplitz extraction, two-source inner-product extraction, LHL sizing.

Toeplitz seed layout: for an ``output_len x input_len`` matrix ``T``,
``T[i, j] = S[i - j + input_len - 1]``. The first row therefore reads
``S[input_len-1], S[input_len-2], ..., S[0]`` and the first column reads
``S[input_len-1], S[input_len], ..., S[input_len+output_len-2]``.

Two-source blocks: a ``w``-bit block is the GF(2^w) element whose bit ``b``
(little-endian within the block, block bit 0 first in the string) is the
coefficient of ``x^b``.

Operational assumption: the two-source extractor is only meaningful when its
inputs are independent (the Markov source condition). Nothing here can check
that; callers own it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from . import bits as bitops
from .errors import ShapeMismatch

# x^w + (low terms): low-weight irreducible polynomials, low terms as a bitmask
IRREDUCIBLE_LOW = {
    1: 0b1,
    2: 0b11,
    4: 0b11,
    8: 0b11011,
    16: 0b101011,
    32: 0b10001101,
    64: 0b11011,
}
DEFAULT_BLOCK_WIDTH = 64


@dataclass(frozen=True)
class ToeplitzSpec:
    seed: np.ndarray
    input_len: int
    output_len: int

    def __post_init__(self):
        if self.input_len < 1 or self.output_len < 1:
            raise ShapeMismatch("Toeplitz dimensions must be >= 1")
        seed = bitops.as_bits(self.seed)
        if seed.size != self.input_len + self.output_len - 1:
            raise ShapeMismatch(
                f"seed has {seed.size} bits, need input_len + output_len - 1 = "
                f"{self.input_len + self.output_len - 1}"
            )
        object.__setattr__(self, "seed", seed)

    @staticmethod
    def seed_len(input_len: int, output_len: int) -> int:
        return input_len + output_len - 1


def toeplitz_extract(spec: ToeplitzSpec, data) -> np.ndarray:
    """``T @ data`` over GF(2), computed as a full convolution with the seed."""
    x = bitops.as_bits(data)
    if x.size != spec.input_len:
        raise ShapeMismatch(f"input has {x.size} bits, spec expects {spec.input_len}")
    n = spec.input_len
    # y_i = sum_j S[i - j + n - 1] x_j  =  (S * x)[i + n - 1]
    conv = fftconvolve(spec.seed.astype(np.float64), x.astype(np.float64))
    window = np.rint(conv[n - 1 : n - 1 + spec.output_len]).astype(np.int64)
    return (window & 1).astype(np.uint8)


@lru_cache(maxsize=None)
def _parity_form(w: int) -> np.ndarray:
    """Matrix ``M`` with ``parity(a * b) = a^T M b`` in GF(2^w)."""
    low = IRREDUCIBLE_LOW[w]
    m = np.zeros((w, w), dtype=np.uint8)
    for i in range(w):
        for k in range(w):
            m[i, k] = bin(gf_mul(1 << i, 1 << k, w, low)).count("1") & 1
    return m


def gf_mul(a: int, b: int, w: int, low: int | None = None) -> int:
    """Carry-less multiply then reduce modulo ``x^w + low``."""
    if low is None:
        low = IRREDUCIBLE_LOW[w]
    prod = 0
    while b:
        if b & 1:
            prod ^= a
        a <<= 1
        b >>= 1
    for bit in range(prod.bit_length() - 1, w - 1, -1):
        if prod >> bit & 1:
            prod ^= (1 << bit) | (low << (bit - w))
    return prod


def _blocks(bits: np.ndarray, w: int) -> np.ndarray:
    return bits.reshape(-1, w)


def two_source_extract(x, y, m: int, w: int = DEFAULT_BLOCK_WIDTH) -> np.ndarray:
    """``Z_j = parity(sum_i X_i * Y_{(i+j) mod B})`` for ``j < m``, over GF(2^w) blocks."""
    xb, yb = bitops.as_bits(x), bitops.as_bits(y)
    if w not in IRREDUCIBLE_LOW:
        raise ShapeMismatch(f"unsupported block width {w}; choose from {sorted(IRREDUCIBLE_LOW)}")
    if xb.size != yb.size or xb.size % w:
        raise ShapeMismatch("X and Y must have equal length divisible by the block width")
    n_blocks = xb.size // w
    if not 0 <= m <= n_blocks:
        raise ShapeMismatch(f"m={m} exceeds the {n_blocks} available blocks")
    xm = (_blocks(xb, w).astype(np.int64) @ _parity_form(w)) & 1
    yv = _blocks(yb, w).astype(np.int64)
    out = np.empty(m, dtype=np.uint8)
    for j in range(m):
        out[j] = int(np.sum(xm * np.roll(yv, -j, axis=0))) & 1
    return out


def lhl_output_len(k: float, eps: float) -> int:
    """Leftover-hash-lemma output length ``max(0, floor(k - 2 log2(1/eps)))``."""
    if k < 0 or not 0 < eps < 1:
        raise ValueError("need k >= 0 and 0 < eps < 1")
    return max(0, math.floor(k - 2 * math.log2(1 / eps)))
