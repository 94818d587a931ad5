"""Seeded synthetic datasets and tweet threads for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from threadcred import rng
from threadcred.ingest import ThreadTree, TweetRecord, build_threads
from threadcred.select import Dataset


def normals(key: int, n: int) -> np.ndarray:
    """Standard normal draws via Box-Muller on one counter stream."""
    m = (n + 1) // 2
    u = rng.uniforms(key, 2 * m)
    u1 = 1.0 - u[:m]  # (0, 1]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u[m:]
    return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]


def _labels(n: int) -> np.ndarray:
    y = np.zeros(n, dtype=np.int8)
    y[: n // 2] = 1
    return y


def _ids(prefix: str, n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


def two_gaussians(n: int = 500, k: int = 10, separation: float = 3.0, seed: int = 0,
                  name: str = "gauss") -> Dataset:
    """Balanced classes with means ``separation`` apart along the diagonal.

    Each feature carries ``separation / sqrt(k)`` of the mean gap so the
    class means are ``separation`` standard deviations apart in total.
    """
    y = _labels(n)
    X = normals(rng.derive(seed, "two-gaussians", n, k), n * k).reshape(n, k)
    X += np.outer(y, np.full(k, separation / np.sqrt(k)))
    return Dataset(name, _ids("g", n), X, y, [f"x{j:02d}" for j in range(k)])


def informative_noise(n: int = 100, informative: int = 5, noise: int = 15,
                      shift: float = 1.0, seed: int = 0, name: str = "rfe") -> Dataset:
    """``informative`` columns shifted by ``shift`` for the positive class, then pure noise.

    Informative columns are named ``inf*``, noise ``noise*``; columns are
    interleaved so registry order carries no hint.
    """
    k = informative + noise
    y = _labels(n)
    Z = normals(rng.derive(seed, "informative-noise", n, k), n * k).reshape(n, k)
    Z[:, :informative] += shift * y[:, None]
    names = [f"inf{j}" for j in range(informative)] + [f"noise{j:02d}" for j in range(noise)]
    order = rng.permutation(rng.derive(seed, "informative-noise-cols"), k)
    return Dataset(name, _ids("r", n), Z[:, order], y, [names[j] for j in order])


_WORDS = ("the report says police confirmed good news bad fake true doubt breaking "
          "video photo claim source really think you we they i my his her official "
          "update shocking hoax real wrong right maybe").split()
_ENDINGS = ("", "", "", "?", "!", "!!", " :)", " ?!")


def synthetic_threads(n_threads: int = 1000, tweets_per_thread: int = 100, seed: int = 0
                      ) -> list[ThreadTree]:
    """Random reply trees with varied text, entities and author metadata."""
    total = n_threads * tweets_per_thread
    u = rng.uniforms(rng.derive(seed, "synthetic-threads"), total * 8).reshape(total, 8)
    records: list[TweetRecord] = []
    base = 1_400_000_000
    for th in range(n_threads):
        t0 = base + th * 86400
        for j in range(tweets_per_thread):
            row = u[th * tweets_per_thread + j]
            tid = f"t{th:05d}-{j:04d}"
            parent = None if j == 0 else f"t{th:05d}-{int(row[0] * j):04d}"
            n_words = 3 + int(row[1] * 12)
            start = int(row[2] * len(_WORDS))
            words = [_WORDS[(start + 7 * w) % len(_WORDS)] for w in range(n_words)]
            text = " ".join(words) + _ENDINGS[int(row[3] * len(_ENDINGS))]
            records.append(TweetRecord(
                id=tid,
                created_at=t0 + j * 30 + int(row[4] * 30),
                text=text,
                author_id=f"a{int(row[5] * 5000)}",
                author_created_at=t0 - int(row[6] * 3e8),
                followers=int(row[7] * 1e5),
                friends=int(row[1] * 2000),
                statuses=int(row[2] * 5e4),
                verified=bool(row[3] > 0.95),
                in_reply_to=parent,
                retweet_of=f"t{th:05d}-0000" if (j and row[4] > 0.9) else None,
                hashtags=("news",) if row[5] > 0.8 else (),
                urls=("http://t.co/x",) if row[6] > 0.7 else (),
                media=("m",) if row[7] > 0.9 else (),
                mentions=("u",) if row[0] > 0.85 else (),
            ))
    return list(build_threads(records))
