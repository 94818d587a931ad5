"""Counter-based random streams.

Every stochastic task (bootstrap, feature sampling, fold shuffling, epoch
shuffling, coin tosses) draws from SplitMix64 in counter mode keyed by a
64-bit stream key.  Keys are derived from ``(master seed, task label)`` so a
task's numbers never depend on how many other tasks ran before it.

The compiled forest kernel implements the same mixing function; the two
must stay in sync.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def draw(key: int, counter: int) -> int:
    """Return the 64-bit output at position ``counter`` of stream ``key``."""
    return mix64(key + (counter + 1) * GOLDEN)


def uniform(key: int, counter: int) -> float:
    return (draw(key, counter) >> 11) * _INV53


def below(key: int, counter: int, n: int) -> int:
    """Integer in ``[0, n)`` from one draw (53-bit resolution)."""
    return int(uniform(key, counter) * n)


def derive(seed: int, *labels: object) -> int:
    """Stream key for a task, from the master seed and a path of labels."""
    text = "/".join([str(int(seed))] + [str(x) for x in labels])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def draws_array(key: int, start: int, n: int) -> np.ndarray:
    """Vectorised ``draw(key, start + i)`` for ``i`` in ``range(n)``."""
    counters = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + counters * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
    return z


def uniforms(key: int, n: int, start: int = 0) -> np.ndarray:
    return (draws_array(key, start, n) >> np.uint64(11)).astype(np.float64) * _INV53


def integers_below(key: int, n_draws: int, bound: int, start: int = 0) -> np.ndarray:
    return (uniforms(key, n_draws, start) * bound).astype(np.int64)


def permutation(key: int, n: int) -> np.ndarray:
    """Seeded permutation of ``range(n)`` (argsort of uniform draws)."""
    return np.argsort(uniforms(key, n), kind="stable")
