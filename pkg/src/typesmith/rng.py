"""Deterministic RNG derivation shared by all synthesis stages.

Every randomized stage receives its own stream derived from the campaign
seed plus a stable discriminator (definition id, pass index, purpose tag),
so campaigns replay bit-for-bit and workers never share RNG state.
"""

from __future__ import annotations

import hashlib
import random


def derive_rng(*parts: object) -> random.Random:
    """Return a Random seeded from a stable hash of the given parts."""
    key = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))
