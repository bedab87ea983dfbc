"""Counter-based random streams.

Every Monte Carlo sample i of a run with master seed S draws from a
Philox generator keyed by the pair (S, i).  Streams are independent of
how samples are partitioned across workers, so a run aggregates to the
same result for any worker count.

Dilation angles need more resolution than one float64 when the
sequence elements are huge: a 53-bit alpha multiplied by an element
above 2**53 has no fractional bits left.  ``draw_alpha`` therefore
assembles ceil((element_bits + 64) / 53) words of 53 bits into an
exact dyadic rational alpha = num / 2**bits.
"""

from __future__ import annotations

import math

import numpy as np

_WORD_BITS = 53


def sample_stream(master_seed: int, index: int) -> np.random.Generator:
    """Generator for sample `index` of the run seeded by `master_seed`."""
    key = np.array(
        [np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def alpha_bits_for(max_element: int) -> int:
    """Resolution (in bits) needed to dilate elements up to max_element."""
    need = max(1, int(max_element).bit_length()) + 64
    words = max(1, math.ceil(need / _WORD_BITS))
    return words * _WORD_BITS


def draw_alpha(gen: np.random.Generator, bits: int):
    """Uniform dyadic rational (num, bits) with num < 2**bits.

    Consumes bits/53 draws of 53 bits each, low word first.
    """
    words = bits // _WORD_BITS
    num = 0
    for w in range(words):
        num |= int(gen.integers(0, 1 << _WORD_BITS)) << (w * _WORD_BITS)
    return num, bits


def alpha_to_float(num: int, bits: int) -> float:
    return num / (1 << bits)
