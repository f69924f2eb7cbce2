"""Deterministic RNG stream derivation.

Every generated object (area, fiber, stimulus set, trial) owns an
independent numpy Generator derived from (master seed, label path), so
adding new objects or trials never perturbs the draws of existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _token(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")
    raise TypeError(f"stream label must be int or str, got {type(part).__name__}")


def stream_rng(seed, *path) -> np.random.Generator:
    """Generator for the stream (seed, *path); identical arguments, identical draws."""
    entropy = [_token(seed)] + [_token(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def child_seed(seed, *path) -> int:
    """Stable 64-bit seed derived from (seed, *path), for spawning sub-objects."""
    h = hashlib.sha256()
    h.update(str(_token(seed)).encode("ascii"))
    for p in path:
        h.update(b"/")
        h.update(str(_token(p)).encode("ascii"))
    return int.from_bytes(h.digest()[:8], "big")
