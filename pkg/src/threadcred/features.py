"""The 45-feature thread representation.

Four groups: structural (stream volume and activity mix), user (author
metadata and the interaction graph), content (sentiment, disagreement,
punctuation and pronoun markers) and temporal (log-space slopes of
per-minute cumulative series). Column order is fixed by ``REGISTRY``.
"""

from __future__ import annotations

import csv
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from threadcred.ingest import ThreadTree
from threadcred.stance import DISAGREE, is_disagreement, stance_from_support, tokenize

REGISTRY_VERSION = 1

_FLAG_NAMES = ("hashtag", "media", "mention", "retweet", "link")
_MARKER_NAMES = ("question_mark", "exclamation", "multi_punct", "first_pronoun",
                 "second_pronoun", "third_pronoun", "smile_emoticon")


def _freq_ratio(names):
    return [fid for name in names for fid in (f"freq_{name}", f"ratio_{name}")]


STRUCTURAL = ["tweet_count", "avg_tweet_length", "lifetime_minutes", "tree_depth",
              *_freq_ratio(_FLAG_NAMES)]
USER = ["mean_account_age_days", "mean_followers", "mean_friends", "mean_statuses",
        "count_verified_tweets", "root_is_verified", "mean_creation_to_tweet_days",
        "network_density"]
CONTENT = ["mean_polarity", "mean_subjectivity", "ratio_disagreement", *_freq_ratio(_MARKER_NAMES)]
TEMPORAL = ["slope_account_age", "slope_creation_gap", "slope_followers", "slope_friends",
            "slope_statuses", "slope_tweets_per_minute"]

REGISTRY: tuple[str, ...] = tuple(STRUCTURAL + USER + CONTENT + TEMPORAL)
GROUPS: dict[str, str] = {
    **{f: "structural" for f in STRUCTURAL},
    **{f: "user" for f in USER},
    **{f: "content" for f in CONTENT},
    **{f: "temporal" for f in TEMPORAL},
}
INDEX = {fid: i for i, fid in enumerate(REGISTRY)}
assert len(REGISTRY) == 45 == len(INDEX)

DAY = 86400.0

FIRST_PRONOUNS = frozenset({"i", "me", "my", "mine", "we", "us", "our", "ours"})
SECOND_PRONOUNS = frozenset({"you", "your", "yours"})
THIRD_PRONOUNS = frozenset({"he", "she", "they", "him", "her", "them", "his", "hers",
                            "their", "theirs", "it", "its"})
SMILES = (":)", ":-)", ":D", "=)", ";)", "(:")
_MULTI_PUNCT = re.compile(r"[!?]{2,}")


class Lexicon(dict):
    """token -> (polarity, subjectivity)."""

    @classmethod
    def load(cls, path=None) -> "Lexicon":
        if path is None:
            path = Path(__file__).parent / "data" / "lexicon.tsv"
        lex = cls()
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}: line {line_no}: expected 3 tab-separated fields")
                token = parts[0].lower()
                pol, subj = float(parts[1]), float(parts[2])
                if not (-1 <= pol <= 1 and 0 <= subj <= 1):
                    raise ValueError(f"{path}: line {line_no}: score out of range")
                if token in lex:
                    raise ValueError(f"{path}: line {line_no}: duplicate token {token!r}")
                lex[token] = (pol, subj)
        return lex


_default_lexicon: Lexicon | None = None


def default_lexicon() -> Lexicon:
    global _default_lexicon
    if _default_lexicon is None:
        _default_lexicon = Lexicon.load()
    return _default_lexicon


def sentiment(text_or_tokens, lexicon: Mapping[str, tuple[float, float]]) -> tuple[float, float]:
    """Mean (polarity, subjectivity) over tokens found in the lexicon."""
    tokens = tokenize(text_or_tokens) if isinstance(text_or_tokens, str) else text_or_tokens
    pol = subj = 0.0
    hits = 0
    for tok in tokens:
        score = lexicon.get(tok)
        if score is not None:
            pol += score[0]
            subj += score[1]
            hits += 1
    if not hits:
        return 0.0, 0.0
    return pol / hits, subj / hits


class Markers(NamedTuple):
    question_mark: bool
    exclamation: bool
    multi_punct: bool
    first_pronoun: bool
    second_pronoun: bool
    third_pronoun: bool
    smile_emoticon: bool


def _pronoun_forms(tokens):
    # contractions count for their head word: "i'm" -> "i", "it's" -> "it"
    forms = set(tokens)
    forms.update(t.split("'", 1)[0] for t in tokens if "'" in t)
    return forms


def content_markers(text: str, tokens: list[str] | None = None) -> Markers:
    if tokens is None:
        tokens = tokenize(text)
    forms = _pronoun_forms(tokens)
    return Markers(
        "?" in text,
        "!" in text,
        _MULTI_PUNCT.search(text) is not None,
        not forms.isdisjoint(FIRST_PRONOUNS),
        not forms.isdisjoint(SECOND_PRONOUNS),
        not forms.isdisjoint(THIRD_PRONOUNS),
        any(s in text for s in SMILES),
    )


def network_density(thread: ThreadTree) -> float:
    """Directed interaction edges over possible edges among thread authors.

    Edges run mentioner -> mentioned and retweeter -> retweeted author; only
    authors present in the thread are nodes, and self-loops are ignored.
    """
    authors = {t.author_id for t in thread.tweets.values()}
    n = len(authors)
    if n < 2:
        return 0.0
    edges = set()
    for t in thread.tweets.values():
        src = t.author_id
        for m in t.mentions:
            if m != src and m in authors:
                edges.add((src, m))
        if t.retweet_of is not None:
            orig = thread.tweets.get(t.retweet_of)
            if orig is not None and orig.author_id != src:
                edges.add((src, orig.author_id))
    return len(edges) / (n * (n - 1))


def temporal_slope(series) -> float:
    """OLS slope of ``ln(1 + value)`` against minute.

    ``series`` is ``(minute, cumulative value)`` pairs with strictly
    increasing minutes; fewer than two points give 0.
    """
    pts = list(series)
    if not pts:
        raise ValueError("empty series")
    minutes = np.array([p[0] for p in pts], dtype=np.float64)
    values = np.array([p[1] for p in pts], dtype=np.float64)
    if (values < 0).any():
        raise ValueError("cumulative values must be non-negative")
    if (np.diff(minutes) <= 0).any():
        raise ValueError("minutes must be strictly increasing")
    if minutes.shape[0] < 2:
        return 0.0
    return _ols_slope(minutes, np.log1p(values))


def _ols_slope(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    return float(np.dot(dx, y - y.mean()) / np.dot(dx, dx))


@dataclass
class FeatureVector:
    thread_id: str
    values: np.ndarray
    label: str = "unlabeled"

    def as_dict(self) -> dict[str, float]:
        return dict(zip(REGISTRY, self.values.tolist()))

    def __getitem__(self, fid: str) -> float:
        return float(self.values[INDEX[fid]])


def extract(thread: ThreadTree, stance_flags: Mapping[str, bool],
            lexicon: Mapping[str, tuple[float, float]] | None = None,
            label: str = "unlabeled") -> FeatureVector:
    """Compute the 45 registry features for one thread.

    ``stance_flags`` maps every non-root tweet id to whether it disagrees
    with the root.
    """
    if lexicon is None:
        lexicon = default_lexicon()
    root = thread.root
    tweets = sorted(thread.tweets.values(), key=lambda t: (t.created_at, t.id))
    n = len(tweets)
    t_root = root.created_at

    flag_counts = [0] * 5
    marker_counts = [0] * 7
    length = 0
    pol_sum = subj_sum = 0.0
    age_root = np.empty(n)
    gap = np.empty(n)
    followers = np.empty(n)
    friends = np.empty(n)
    statuses = np.empty(n)
    minute = np.empty(n, dtype=np.int64)
    verified = 0
    for i, t in enumerate(tweets):
        text = t.text
        length += len(text)
        if t.hashtags:
            flag_counts[0] += 1
        if t.media:
            flag_counts[1] += 1
        if t.mentions:
            flag_counts[2] += 1
        if t.retweet_of is not None:
            flag_counts[3] += 1
        if t.urls:
            flag_counts[4] += 1
        tokens = tokenize(text)
        for j, flag in enumerate(content_markers(text, tokens)):
            if flag:
                marker_counts[j] += 1
        p, s = sentiment(tokens, lexicon)
        pol_sum += p
        subj_sum += s
        age_root[i] = max(0, t_root - t.author_created_at) / DAY
        gap[i] = max(0, t.created_at - t.author_created_at) / DAY
        followers[i] = t.followers
        friends[i] = t.friends
        statuses[i] = t.statuses
        minute[i] = max(0, t.created_at - t_root) // 60
        verified += t.verified

    replies = [tid for tid in thread.tweets if tid != root.id]
    missing = [tid for tid in replies if tid not in stance_flags]
    if missing:
        raise ValueError(f"no stance flag for tweets: {', '.join(sorted(missing)[:5])}")
    disagree = sum(1 for tid in replies if stance_flags[tid])

    created = [t.created_at for t in tweets]
    out = [
        float(n),
        length / n,
        (max(created) - min(created)) / 60.0,
        float(thread.depth()),
    ]
    for c in flag_counts:
        out += [float(c), c / n]
    out += [
        float(age_root.mean()),
        float(followers.mean()),
        float(friends.mean()),
        float(statuses.mean()),
        float(verified),
        1.0 if root.verified else 0.0,
        float(gap.mean()),
        network_density(thread),
        pol_sum / n,
        subj_sum / n,
        disagree / len(replies) if replies else 0.0,
    ]
    for c in marker_counts:
        out += [float(c), c / n]

    # per-minute cumulative series over every minute 0..last, carried forward
    span = int(minute.max()) + 1
    if span < 2:
        out += [0.0] * 6
    else:
        x = np.arange(span, dtype=np.float64)
        ones = np.ones(n)
        for per_tweet in (age_root, gap, followers, friends, statuses, ones):
            cum = np.cumsum(np.bincount(minute, weights=per_tweet, minlength=span))
            out.append(_ols_slope(x, np.log1p(cum)))
    return FeatureVector(thread.id, np.asarray(out, dtype=np.float64), label)


def annotation_flags(thread: ThreadTree) -> dict[str, bool] | None:
    """Disagreement flags from support annotations, if every reply has one."""
    flags = {}
    for tid, t in thread.tweets.items():
        if tid == thread.root.id:
            continue
        if t.support is None:
            return None
        flags[tid] = stance_from_support(t.support) == DISAGREE
    return flags


def model_flags(thread: ThreadTree, model) -> dict[str, bool]:
    return {tid: is_disagreement(model, t.text)
            for tid, t in thread.tweets.items() if tid != thread.root.id}


# --- feature matrix CSV ------------------------------------------------------


def write_matrix(vectors: Iterable[FeatureVector], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["thread_id", *REGISTRY, "label"])
        for v in vectors:
            w.writerow([v.thread_id, *(repr(float(x)) for x in v.values), v.label])


@dataclass
class FeatureMatrix:
    thread_ids: list[str]
    values: np.ndarray  # rows x 45
    labels: list[str]

    def vectors(self) -> list[FeatureVector]:
        return [FeatureVector(t, self.values[i], lab)
                for i, (t, lab) in enumerate(zip(self.thread_ids, self.labels))]


def read_matrix(path) -> FeatureMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty feature matrix")
    header = rows[0]
    expected = ["thread_id", *REGISTRY, "label"]
    if header != expected:
        raise ValueError(f"{path}: header does not match feature registry v{REGISTRY_VERSION}")
    ids, vals, labels = [], [], []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(expected):
            raise ValueError(f"{path}: line {line_no}: expected {len(expected)} fields")
        ids.append(row[0])
        vals.append([float(x) for x in row[1:-1]])
        labels.append(row[-1])
    arr = np.asarray(vals, dtype=np.float64).reshape(len(ids), len(REGISTRY))
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path}: non-finite feature value")
    return FeatureMatrix(ids, arr, labels)


# --- batch extraction --------------------------------------------------------


def _extract_chunk(args):
    threads, flags, lexicon, labels = args
    return [extract(t, f, lexicon, lab) for t, f, lab in zip(threads, flags, labels)]


def extract_many(threads: list[ThreadTree], flags: list[Mapping[str, bool]],
                 lexicon: Mapping | None = None, labels: list[str] | None = None,
                 jobs: int = 1) -> list[FeatureVector]:
    """Extract many threads, optionally across ``jobs`` worker processes."""
    if lexicon is None:
        lexicon = default_lexicon()
    if labels is None:
        labels = ["unlabeled"] * len(threads)
    if jobs <= 1 or len(threads) < 2:
        return _extract_chunk((threads, flags, lexicon, labels))
    size = math.ceil(len(threads) / jobs)
    chunks = [
        (threads[i:i + size], flags[i:i + size], lexicon, labels[i:i + size])
        for i in range(0, len(threads), size)
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [v for part in pool.map(_extract_chunk, chunks) for v in part]
