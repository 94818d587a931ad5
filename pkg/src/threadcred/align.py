"""Label alignment across rating schemes, and re-rooting flat event tweet sets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from threadcred.ingest import (
    SOURCE_KINDS,
    DatasetManifest,
    ManifestEntry,
    ThreadTree,
    TweetRecord,
    _check_unique,
    _grow,
    _reply_index,
)

ACCURATE = "accurate"
INACCURATE = "inaccurate"
UNLABELED = "unlabeled"

# published CREDBANK cut points: means above HIGH are accurate, below LOW inaccurate
DEFAULT_LOW = 1.467
DEFAULT_HIGH = 1.9
DEFAULT_QUANTILE = 0.15


@dataclass(frozen=True)
class RatingVector:
    event_id: str
    ratings: tuple[int, ...]

    def __post_init__(self):
        if not self.ratings:
            raise ValueError(f"event {self.event_id!r} has no ratings")
        for r in self.ratings:
            if isinstance(r, bool) or r not in (-2, -1, 0, 1, 2):
                raise ValueError(f"event {self.event_id!r}: rating {r!r} outside -2..2")

    @property
    def mean(self) -> float:
        return sum(self.ratings) / len(self.ratings)


@dataclass(frozen=True)
class LabelThresholds:
    low: float = DEFAULT_LOW
    high: float = DEFAULT_HIGH
    quantile: float = DEFAULT_QUANTILE

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"degenerate thresholds: low {self.low} >= high {self.high}")


def read_ratings(path) -> list[RatingVector]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                out.append(RatingVector(str(doc["event_id"]), tuple(doc["ratings"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    return out


def quantile(values: Iterable[float], q: float) -> float:
    """Linear interpolation between order statistics (position ``q*(n-1)``)."""
    xs = sorted(values)
    if not xs:
        raise ValueError("empty input")
    pos = q * (len(xs) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(xs) - 1)
    frac = pos - lo
    return xs[lo] + (xs[hi] - xs[lo]) * frac


def compute_thresholds(means: Iterable[float], q: float) -> LabelThresholds:
    means = list(means)
    if not means:
        raise ValueError("no means supplied")
    if not 0 < q < 0.5:
        raise ValueError(f"quantile must be in (0, 0.5), got {q}")
    return LabelThresholds(quantile(means, q), quantile(means, 1 - q), q)


def label_by_mean(ratings: RatingVector | float, thresholds: LabelThresholds = LabelThresholds()) -> str:
    mean = ratings.mean if isinstance(ratings, RatingVector) else float(ratings)
    if mean > thresholds.high:
        return ACCURATE
    if mean < thresholds.low:
        return INACCURATE
    return UNLABELED


def root_event(tweets: list[TweetRecord]) -> ThreadTree | None:
    """Re-root a flat event tweet set at its most retweeted tweet.

    Replies reaching the root (transitively) form the thread. Returns None
    (discard) when the root has no replies.
    """
    if not tweets:
        return None
    _check_unique(tweets)
    root = min(tweets, key=lambda t: (-t.retweet_count, t.created_at, t.id))
    by_id = {t.id: t for t in tweets}
    replies = _reply_index(by_id)
    if not replies.get(root.id):
        return None
    tree = _grow(root.id, by_id, replies)
    tree.dropped_orphans = sum(
        1 for t in tweets if t.in_reply_to is not None and t.in_reply_to not in by_id
    )
    return tree


# source label vocabularies
_PHEME = {"true": ACCURATE, "false": INACCURATE, "unverified": None}
_BUZZFEED = {"mostly-true": ACCURATE, "mostly true": ACCURATE,
             "mostly-false": INACCURATE, "mostly false": INACCURATE}


@dataclass
class UnifiedDataset:
    manifest: DatasetManifest
    excluded: list[tuple[ManifestEntry, str]] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out = {ACCURATE: 0, INACCURATE: 0, "excluded": len(self.excluded)}
        for e in self.manifest.threads:
            out[e.label] += 1
        return out


def unify_labels(manifest: DatasetManifest, ratings: dict[str, RatingVector] | None = None,
                 thresholds: LabelThresholds = LabelThresholds()) -> UnifiedDataset:
    """Map source-specific labels onto accurate/inaccurate.

    ``manifest`` entries carry the source vocabulary (pheme-like true/false/
    unverified, buzzfeed-like mostly-true/mostly-false); credbank-like
    entries are labelled from ``ratings`` keyed by ``event_id``. Entries
    already carrying a binary label pass through.
    """
    if manifest.source_kind not in SOURCE_KINDS:
        raise ValueError(f"unknown source kind {manifest.source_kind!r}")
    kept: list[ManifestEntry] = []
    excluded: list[tuple[ManifestEntry, str]] = []
    for entry in manifest.threads:
        raw = entry.label
        if raw in (ACCURATE, INACCURATE):
            label, reason = raw, None
        elif raw == UNLABELED and manifest.source_kind != "credbank-like":
            label, reason = None, "unlabeled"
        elif manifest.source_kind == "pheme-like":
            if raw not in _PHEME:
                raise ValueError(f"unknown pheme-like label {raw!r}")
            label = _PHEME[raw]
            reason = None if label else "unverified"
        elif manifest.source_kind == "buzzfeed-like":
            if raw not in _BUZZFEED:
                raise ValueError(f"unknown buzzfeed-like label {raw!r}")
            label, reason = _BUZZFEED[raw], None
        else:
            key = entry.event_id or Path(entry.path).stem
            if ratings is None or key not in ratings:
                raise ValueError(f"no ratings for credbank-like event {key!r}")
            label = label_by_mean(ratings[key], thresholds)
            reason = None
            if label == UNLABELED:
                label, reason = None, "mean rating between thresholds"
        if label is None:
            excluded.append((entry, reason))
        else:
            kept.append(ManifestEntry(entry.path, label, entry.event_id))
    return UnifiedDataset(DatasetManifest(manifest.name, manifest.source_kind, kept), excluded)
