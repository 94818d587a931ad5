"""Disagreement classifier: hashed unigram/bigram bags and SGD logistic regression."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

from threadcred import rng
from threadcred.learn.metrics import roc_auc, stratified_kfold

DISAGREE = "disagree"
OTHER = "other"
MODEL_FORMAT = "threadcred-stance"
MODEL_VERSION = 1

_TOKEN_RE = re.compile(r"(https?://\S+|www\.\S+)|(@\w+)|([^\W_]+(?:'[^\W_]+)*)")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; URLs become ``<url>``, @-mentions ``<mention>``."""
    out = []
    for url, mention, word in _TOKEN_RE.findall(text.lower()):
        if url:
            out.append("<url>")
        elif mention:
            out.append("<mention>")
        else:
            out.append(word)
    return out


@lru_cache(maxsize=1 << 18)
def _hash(feature: str) -> int:
    return int.from_bytes(hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest(), "little")


def featurize_text(tokens: list[str], hash_bits: int = 18) -> dict[int, float]:
    """Signed-hash counts of unigrams and adjacent bigrams."""
    mask = (1 << hash_bits) - 1
    vec: dict[int, float] = {}
    grams = [f"u:{t}" for t in tokens]
    grams.extend(f"b:{a} {b}" for a, b in zip(tokens, tokens[1:]))
    for g in grams:
        h = _hash(g)
        idx = h & mask
        vec[idx] = vec.get(idx, 0.0) + (-1.0 if h >> 63 else 1.0)
    return {i: v for i, v in vec.items() if v != 0.0}


@dataclass(frozen=True)
class StanceExample:
    text: str
    label: str
    source: str = "synthetic"

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("stance example text is empty")
        if self.label not in (DISAGREE, OTHER):
            raise ValueError(f"unknown stance label {self.label!r}")


@dataclass(frozen=True)
class StanceConfig:
    hash_bits: int = 18
    alpha: float = 1e-4  # L2 coefficient
    epochs: int = 10
    eta0: float = 0.1
    seed: int = 0


@dataclass
class StanceModel:
    weights: np.ndarray
    bias: float
    hash_bits: int
    seed: int
    ngram_orders: tuple[int, ...] = (1, 2)
    epoch_loss: list[float] = field(default_factory=list)

    def decision(self, text: str) -> float:
        x = featurize_text(tokenize(text), self.hash_bits)
        w = self.weights
        return self.bias + sum(w[i] * v for i, v in x.items())

    def save(self, path) -> None:
        nz = np.flatnonzero(self.weights)
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "hash_bits": self.hash_bits,
            "ngram_orders": list(self.ngram_orders),
            "seed": self.seed,
            "bias": self.bias,
            "indices": nz.tolist(),
            "weights": self.weights[nz].tolist(),
        }
        Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "StanceModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
            raise ValueError("not a stance model dump of a supported version")
        w = np.zeros(1 << int(doc["hash_bits"]), dtype=np.float64)
        w[np.asarray(doc["indices"], dtype=np.int64)] = np.asarray(doc["weights"], dtype=np.float64)
        return cls(w, float(doc["bias"]), int(doc["hash_bits"]), int(doc["seed"]),
                   tuple(doc["ngram_orders"]))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def train_stance(corpus: list[StanceExample], config: StanceConfig = StanceConfig()) -> StanceModel:
    """Logistic-loss SGD with L2, learning rate ``1 / (alpha * (t0 + t))``.

    ``t0`` makes the first step ``eta0``. Rows are reshuffled every epoch
    from a stream derived from ``config.seed``.
    """
    labels = {ex.label for ex in corpus}
    if labels != {DISAGREE, OTHER}:
        raise ValueError("stance corpus must contain both disagree and other examples")
    xs = [featurize_text(tokenize(ex.text), config.hash_bits) for ex in corpus]
    ys = [1.0 if ex.label == DISAGREE else 0.0 for ex in corpus]
    n = len(xs)

    v = np.zeros(1 << config.hash_bits, dtype=np.float64)
    scale = 1.0  # weights are scale * v, so the L2 shrink is O(1) per step
    bias = 0.0
    alpha = config.alpha
    t0 = 1.0 / (alpha * config.eta0)
    t = 0
    losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(rng.derive(config.seed, "stance-epoch", epoch), n)
        total = 0.0
        for i in order.tolist():
            x = xs[i]
            y = ys[i]
            eta = 1.0 / (alpha * (t0 + t))
            z = bias + scale * sum(v[j] * val for j, val in x.items())
            p = _sigmoid(z)
            total += -math.log(max(p if y else 1.0 - p, 1e-300))
            g = p - y
            scale *= 1.0 - eta * alpha
            step = eta * g / scale
            for j, val in x.items():
                v[j] -= step * val
            bias -= eta * g
            if scale < 1e-9:
                v *= scale
                scale = 1.0
            t += 1
        losses.append(total / n)
    return StanceModel(v * scale, bias, config.hash_bits, config.seed, (1, 2), losses)


def predict_disagreement(model: StanceModel, text: str) -> float:
    return _sigmoid(model.decision(text))


def is_disagreement(model: StanceModel, text: str) -> bool:
    return predict_disagreement(model, text) > 0.5


def cross_validate(corpus: list[StanceExample], config: StanceConfig = StanceConfig(),
                   folds: int = 10) -> list[float]:
    """Per-fold ROC-AUC of stratified ``folds``-fold cross-validation."""
    y = np.array([1 if ex.label == DISAGREE else 0 for ex in corpus])
    aucs = []
    for i, test in enumerate(stratified_kfold(y, folds, key=rng.derive(config.seed, "stance-cv"))):
        mask = np.ones(len(corpus), dtype=bool)
        mask[test] = False
        train = [ex for ex, keep in zip(corpus, mask) if keep]
        model = train_stance(train, config)
        scores = [predict_disagreement(model, corpus[j].text) for j in test.tolist()]
        aucs.append(roc_auc(scores, y[test]))
    return aucs


# PHEME support annotations: only refutation counts as disagreement
SUPPORT_TO_STANCE = {"refute": DISAGREE, "deny": DISAGREE, "support": OTHER,
                     "agreed": OTHER, "comment": OTHER, "query": OTHER,
                     "appeal-for-more-information": OTHER}


def stance_from_support(annotation: str) -> str:
    try:
        return SUPPORT_TO_STANCE[annotation.lower()]
    except KeyError:
        raise ValueError(f"unknown support annotation {annotation!r}") from None


def read_corpus(path) -> list[StanceExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                out.append(StanceExample(doc["text"], doc["label"], doc.get("source", "synthetic")))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    return out


def write_corpus(corpus: Iterable[StanceExample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in corpus:
            fh.write(json.dumps({"text": ex.text, "label": ex.label, "source": ex.source}) + "\n")


_SUBJECTS = ["the report", "this story", "that claim", "the video", "this photo", "the headline",
             "the account", "this rumor", "the article", "that tweet"]
_REFUTE = ["is false", "is fake", "is not true", "has been debunked", "is a hoax",
           "is completely wrong", "is fabricated", "is a lie", "was proven false", "is misleading"]
_OTHER = ["is confirmed", "is developing", "looks interesting", "is being shared widely",
          "was posted an hour ago", "has more details", "is on the news", "is trending now",
          "was reported by police", "needs a source"]
_OPENERS = ["", "wow", "breaking", "update", "hmm", "ok", "just saw this", "fyi"]


def synthetic_corpus(n_per_class: int = 200, seed: int = 0) -> list[StanceExample]:
    """Separable toy corpus: disagreement texts carry a refutation phrase."""
    key = rng.derive(seed, "stance-synthetic")
    draws = rng.integers_below(key, 6 * n_per_class, 1 << 30)
    out = []
    for i in range(2 * n_per_class):
        a, b, c = (int(d) for d in draws[3 * i: 3 * i + 3])
        label = DISAGREE if i % 2 == 0 else OTHER
        phrase = (_REFUTE if label == DISAGREE else _OTHER)[b % 10]
        opener = _OPENERS[c % len(_OPENERS)]
        text = f"{opener} {_SUBJECTS[a % 10]} {phrase}".strip()
        if c % 3 == 0:
            text += " http://t.co/x" + str(a % 97)
        if c % 5 == 0:
            text = "@user" + str(b % 13) + " " + text
        out.append(StanceExample(text, label, "synthetic"))
    return out


def bundled_corpus() -> list[StanceExample]:
    return read_corpus(Path(__file__).parent / "data" / "stance_synthetic.jsonl")
