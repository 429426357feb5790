"""Deterministic sub-seed derivation.

All randomness in a run flows from one integer seed. Independent streams are
keyed by a purpose label (and optional indices) through a stable hash, so the
stream a consumer sees never depends on call order or worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *labels) -> int:
    """Return a 64-bit integer seed derived from ``seed`` and ``labels``."""
    key = ":".join([str(int(seed))] + [str(x) for x in labels])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, *labels) -> np.random.Generator:
    """Counter-based (Philox) generator for the given purpose label."""
    return np.random.Generator(np.random.Philox(derive_seed(seed, *labels)))
