"""Deterministic random-stream derivation.

All randomness in the toolkit flows through counter-based Philox generators
keyed by (seed, *subkeys) via numpy's SeedSequence, so identical seeds give
identical streams on every platform and derived streams (per tree, per room,
per feature subset) never overlap.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_generator", "stable_key"]


def stable_key(text: str) -> int:
    """Map a string to a stable 64-bit subkey (process-independent)."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_generator(seed: int, *subkeys: int) -> np.random.Generator:
    """Philox generator for the stream identified by (seed, *subkeys)."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in subkeys))
    return np.random.Generator(np.random.Philox(seq))
