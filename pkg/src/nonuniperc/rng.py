"""Counter-based random streams keyed by (master seed, purpose, replica)."""

from __future__ import annotations

import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def purpose_id(name: str) -> int:
    """Stable integer id for a named purpose (estimator, label set, ...)."""
    return zlib.crc32(name.encode())


def stream(seed: int, purpose: str | int, *index: int) -> np.random.Generator:
    """Independent Philox generator; a pure function of its arguments."""
    pid = purpose_id(purpose) if isinstance(purpose, str) else int(purpose)
    ss = np.random.SeedSequence([int(seed) & SEED_MASK, pid, *map(int, index)])
    return np.random.Generator(np.random.Philox(ss))


def uniforms(seed: int, purpose: str | int, replica: int, size: int) -> np.ndarray:
    """Per-item uniforms in (0, 1); item ``i`` always receives the ``i``-th draw."""
    u = stream(seed, purpose, replica).random(size)
    # exact zeros would read as "always open"; nudge them inside the interval
    return np.where(u > 0.0, u, np.nextafter(0.0, 1.0))
