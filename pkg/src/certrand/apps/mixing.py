"""On-chain mixing of certified output with a RANDAO-style accumulator.

``mix_onchain`` is only sound when the certified output ``X`` and the
on-chain value ``Y`` are independent (the Markov source condition for the
two-source extractor). The certified output is fixed before ``Y`` is
accumulated in the intended deployment; the code cannot check it.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import bits as bitops
from ..extractors import DEFAULT_BLOCK_WIDTH, two_source_extract


def mix_onchain(x, y, m: int, w: int = DEFAULT_BLOCK_WIDTH) -> np.ndarray:
    return two_source_extract(x, y, m, w)


def randao_accumulate(reveals: Sequence, width: int) -> np.ndarray:
    acc = bitops.zeros(width)
    for r in reveals:
        acc ^= bitops.as_bits(r)
    return acc


def randao_with_last_revealer(honest_reveals: Sequence, last_reveal, prefer) -> tuple[np.ndarray, bool]:
    """Accumulator where the last participant may withhold its reveal.

    ``prefer(acc)`` scores an outcome; the last revealer publishes only if
    revealing scores at least as high as withholding. Returns the final
    accumulator and whether the reveal was published.
    """
    width = bitops.as_bits(last_reveal).size
    without = randao_accumulate(honest_reveals, width)
    with_reveal = without ^ bitops.as_bits(last_reveal)
    if prefer(with_reveal) >= prefer(without):
        return with_reveal, True
    return without, False
