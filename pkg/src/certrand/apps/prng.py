"""A toy Dual_EC-style backdoored PRNG over a prime-order multiplicative group.

Public parameters are a safe prime ``p = 2q + 1`` and two generators ``P``
and ``Q`` of the order-``q`` subgroup. With ``phi(x) = (x mod (q-1)) + 1``:

    r      = phi(P^s)
    output = Q^r mod p            (written as ``width`` bits)
    s'     = phi(P^r)

Whoever knows ``e`` with ``Q^e = P`` turns one output into the next state:
``output^e = P^r``, so ``s' = phi(output^e)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import bits as bitops
from ..errors import TrapdoorMismatch

SAFE_PRIME = 2**64 - 1469  # (p - 1) / 2 is prime
GENERATOR = 4  # a square, hence of order q


@dataclass(frozen=True)
class PrngParams:
    p: int
    q: int
    P: int
    Q: int
    width: int = 64


@dataclass(frozen=True)
class Trapdoor:
    params: PrngParams
    e: int


@dataclass(frozen=True)
class BackdooredPrng:
    params: PrngParams
    state: int


def _phi(x: int, q: int) -> int:
    return x % (q - 1) + 1


def make_backdoored(rng: np.random.Generator, p: int = SAFE_PRIME) -> tuple[PrngParams, Trapdoor]:
    """Public parameters with a planted trapdoor, and that trapdoor."""
    q = (p - 1) // 2
    d = int(rng.integers(2, q - 1, dtype=np.uint64))
    P = GENERATOR
    Q = pow(P, d, p)
    params = PrngParams(p, q, P, Q, width=p.bit_length())
    return params, Trapdoor(params, pow(d, -1, q))


def seed_prng(params: PrngParams, state: int) -> BackdooredPrng:
    return BackdooredPrng(params, _phi(state, params.q))


def prng_next(prng: BackdooredPrng) -> tuple[int, BackdooredPrng]:
    pr = prng.params
    r = _phi(pow(pr.P, prng.state, pr.p), pr.q)
    output = pow(pr.Q, r, pr.p)
    return output, BackdooredPrng(pr, _phi(pow(pr.P, r, pr.p), pr.q))


def output_bits(output: int, params: PrngParams) -> np.ndarray:
    return bitops.from_int(output, params.width)


def prng_bits(prng: BackdooredPrng, n_bits: int) -> tuple[np.ndarray, list[int], BackdooredPrng]:
    """``n_bits`` of generator output plus the raw outputs that produced them."""
    outputs, chunks = [], []
    total = 0
    while total < n_bits:
        out, prng = prng_next(prng)
        outputs.append(out)
        chunks.append(output_bits(out, prng.params))
        total += prng.params.width
    return np.concatenate(chunks)[:n_bits], outputs, prng


def backdoor_predict(trapdoor: Trapdoor, observed: int, params: PrngParams) -> int:
    """Next output of a generator whose last output was ``observed``."""
    if trapdoor.params != params:
        raise TrapdoorMismatch("trapdoor belongs to different public parameters")
    next_state = _phi(pow(observed, trapdoor.e, params.p), params.q)
    predicted, _ = prng_next(BackdooredPrng(params, next_state))
    return predicted
