"""Deterministic RNG stream derivation.

Streams are derived from a master seed and a path of labels through a
keyed hash, so any subtree of work can be reproduced independently and
sibling streams are statistically unrelated.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["seed_derive", "derive_seed_int"]

_SEP = b"\x1f"


def derive_seed_int(master_seed: int, *labels) -> int:
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for label in labels:
        h.update(_SEP)
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "big")


def seed_derive(master_seed: int, *labels) -> np.random.Generator:
    """Independent, reproducible RNG stream for a labelled unit of work."""
    return np.random.default_rng(derive_seed_int(master_seed, *labels))
