"""Seeded random streams.

Two generators are used, both named so that replays are portable:

* ``split_rng`` is MT19937 (``random.Random``) seeded with the run seed.
  Draws go through ``randbelow``, which uses only ``getrandbits`` with
  rejection, so the sequence does not depend on CPython's sampling helpers.
* ``keyed_generator`` is Philox-4x64 (counter-based).  Its 128-bit key is the
  first 16 bytes of SHA-256 over the key parts joined by ``0x1f``.  A draw for
  one sample therefore never depends on which other samples were drawn, or in
  which order.
"""
from __future__ import annotations

import hashlib
import random

import numpy as np

_SEP = "\x1f"


def key_material(*parts: object) -> int:
    text = _SEP.join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def keyed_generator(*parts: object) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key_material(*parts)))


def split_rng(seed: int) -> random.Random:
    return random.Random(seed)


def randbelow(rng: random.Random, n: int) -> int:
    """Uniform integer in ``[0, n)`` by rejection on ``n.bit_length()`` bits."""
    if n <= 0:
        raise ValueError("n must be positive")
    k = n.bit_length()
    r = rng.getrandbits(k)
    while r >= n:
        r = rng.getrandbits(k)
    return r
