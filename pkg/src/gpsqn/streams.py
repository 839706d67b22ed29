"""Deterministic random-stream management.

One master seed fans out into independent named child streams (gradient
noise, cost noise, particle filter, per-replicate data, ...) so that every
stochastic component draws from its own generator and results never depend
on the evaluation order of unrelated components.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key(part) -> int:
    """Map a path element (int or str) to a stable 32-bit spawn key."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream path integers must be non-negative")
        return int(part)
    digest = hashlib.blake2s(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def seed_sequence(master: int, *path) -> np.random.SeedSequence:
    """SeedSequence for the child stream identified by ``path``.

    ``path`` elements may be strings (component names) or non-negative
    integers (replicate indices). The same (master, path) always yields the
    same sequence, on any platform.
    """
    return np.random.SeedSequence(
        entropy=int(master), spawn_key=tuple(_key(p) for p in path)
    )


def stream(master: int, *path) -> np.random.Generator:
    """A fresh PCG64 generator for the named child stream."""
    return np.random.default_rng(seed_sequence(master, *path))


def derive_seed(master: int, *path) -> int:
    """A plain integer seed derived from a child stream (for nested configs)."""
    return int(seed_sequence(master, *path).generate_state(1, np.uint64)[0])
