"""Stable sub-seed derivation"""

import hashlib

import numpy as np


def derive_seed(seed: int, *labels) -> int:
    """Derive a 64-bit seed from a base seed and purpose labels.

    Uses SHA-256 over the textual labels, so the result does not depend on
    Python's hash randomisation and a new label never shifts another stream.
    """
    key = ":".join([str(int(seed))] + [str(label) for label in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels))
