"""Tweet JSONL parsing, reply-tree reconstruction and dataset manifests."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

LABELS = ("accurate", "inaccurate", "unlabeled")
SOURCE_KINDS = ("pheme-like", "credbank-like", "buzzfeed-like")


class ParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


@dataclass(frozen=True, slots=True)
class TweetRecord:
    id: str
    created_at: int  # UTC epoch seconds
    text: str
    author_id: str
    author_created_at: int = 0
    followers: int = 0
    friends: int = 0
    statuses: int = 0
    verified: bool = False
    in_reply_to: str | None = None
    retweet_of: str | None = None
    retweet_count: int = 0
    hashtags: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    media: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    # optional PHEME-style support annotation: support|refute|comment|query
    support: str | None = None

    @property
    def is_retweet(self) -> bool:
        return self.retweet_of is not None

    def to_json(self) -> dict:
        doc = {
            "id": self.id,
            "created_at": format_timestamp(self.created_at),
            "text": self.text,
            "author": {
                "id": self.author_id,
                "created_at": format_timestamp(self.author_created_at),
                "followers": self.followers,
                "friends": self.friends,
                "statuses": self.statuses,
                "verified": self.verified,
            },
            "in_reply_to": self.in_reply_to,
            "retweet_of": self.retweet_of,
            "retweet_count": self.retweet_count,
            "entities": {
                "hashtags": list(self.hashtags),
                "urls": list(self.urls),
                "media": list(self.media),
                "mentions": list(self.mentions),
            },
        }
        if self.support is not None:
            doc["support"] = self.support
        return doc


def parse_timestamp(value: str) -> int:
    """ISO-8601 to UTC epoch seconds; naive stamps are taken as UTC."""
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp() // 1)


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _str_list(obj, key: str) -> tuple[str, ...]:
    val = obj.get(key) or []
    if not isinstance(val, list):
        raise ValueError(f"entities.{key} must be a list")
    return tuple(str(v) for v in val)


def _count(obj, key: str) -> int:
    val = obj.get(key, 0)
    if val is None:
        return 0
    if isinstance(val, bool) or not isinstance(val, (int, float)) or val < 0:
        raise ValueError(f"{key} must be a non-negative integer")
    return int(val)


def record_from_json(doc: dict) -> TweetRecord:
    if not isinstance(doc, dict):
        raise ValueError("expected a JSON object")
    for key in ("id", "created_at", "text"):
        if key not in doc or doc[key] is None:
            raise ValueError(f"missing required field {key!r}")
    author = doc.get("author") or {}
    if not isinstance(author, dict) or author.get("id") in (None, ""):
        raise ValueError("missing required field 'author.id'")
    tweet_id = str(doc["id"])
    if not tweet_id:
        raise ValueError("empty id")
    entities = doc.get("entities") or {}
    author_created = author.get("created_at")
    reply = doc.get("in_reply_to")
    retweet = doc.get("retweet_of")
    return TweetRecord(
        id=tweet_id,
        created_at=parse_timestamp(doc["created_at"]),
        text=str(doc["text"]),
        author_id=str(author["id"]),
        author_created_at=parse_timestamp(author_created) if author_created else 0,
        followers=_count(author, "followers"),
        friends=_count(author, "friends"),
        statuses=_count(author, "statuses"),
        verified=bool(author.get("verified", False)),
        in_reply_to=None if reply in (None, "") else str(reply),
        retweet_of=None if retweet in (None, "") else str(retweet),
        retweet_count=_count(doc, "retweet_count"),
        hashtags=_str_list(entities, "hashtags"),
        urls=_str_list(entities, "urls"),
        media=_str_list(entities, "media"),
        mentions=_str_list(entities, "mentions"),
        support=doc.get("support"),
    )


@dataclass
class ParseResult:
    records: list[TweetRecord]
    errors: list[ParseError] = field(default_factory=list)

    @property
    def skipped(self) -> int:
        return len(self.errors)


def parse_tweets(lines: Iterable[str], strict: bool = True) -> ParseResult:
    """Parse one tweet object per non-empty line.

    In strict mode the first bad line raises :class:`ParseError`; otherwise
    bad lines are skipped and collected in ``errors``.
    """
    records: list[TweetRecord] = []
    errors: list[ParseError] = []
    loads = json.loads
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(record_from_json(loads(line)))
        except (ValueError, TypeError) as exc:
            err = ParseError(line_no, str(exc))
            if strict:
                raise err from exc
            errors.append(err)
    if errors:
        log.warning("skipped %d malformed tweet lines", len(errors))
    return ParseResult(records, errors)


def read_tweets(path, strict: bool = True) -> ParseResult:
    with open(path, encoding="utf-8") as fh:
        return parse_tweets(fh, strict=strict)


def write_tweets(records: Iterable[TweetRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def _order_key(tweets: dict[str, TweetRecord]):
    return lambda tid: (tweets[tid].created_at, tid)


@dataclass
class ThreadTree:
    root: TweetRecord
    children: dict[str, list[str]]
    tweets: dict[str, TweetRecord]
    dropped_orphans: int = 0

    @property
    def id(self) -> str:
        return self.root.id

    def __len__(self) -> int:
        return len(self.tweets)

    def walk(self) -> Iterator[tuple[TweetRecord, int]]:
        """Pre-order traversal yielding ``(tweet, depth)``."""
        stack = [(self.root.id, 0)]
        while stack:
            tid, depth = stack.pop()
            yield self.tweets[tid], depth
            for child in reversed(self.children.get(tid, ())):
                stack.append((child, depth + 1))

    def depth(self) -> int:
        return max(d for _, d in self.walk())

    def records(self) -> list[TweetRecord]:
        """Tweets in pre-order, the root's parent link cleared."""
        out = [t for t, _ in self.walk()]
        if out[0].in_reply_to is not None:
            out[0] = replace(out[0], in_reply_to=None)
        return out


def _grow(root_id: str, tweets: dict[str, TweetRecord],
          replies: dict[str, list[str]]) -> ThreadTree:
    children: dict[str, list[str]] = {}
    members: dict[str, TweetRecord] = {}
    stack = [root_id]
    while stack:
        tid = stack.pop()
        members[tid] = tweets[tid]
        kids = replies.get(tid)
        if kids:
            children[tid] = kids
            stack.extend(kids)
    return ThreadTree(tweets[root_id], children, members)


class ThreadList(list):
    """List of trees carrying the count of replies that joined no tree."""

    dropped_orphans: int = 0


def _check_unique(tweets: list[TweetRecord]) -> None:
    counts = Counter(t.id for t in tweets)
    dups = sorted(tid for tid, c in counts.items() if c > 1)
    if dups:
        raise ValueError(f"duplicate tweet ids: {', '.join(dups)}")


def _reply_index(by_id: dict[str, TweetRecord]) -> dict[str, list[str]]:
    replies: dict[str, list[str]] = {}
    for tid, rec in by_id.items():
        parent = rec.in_reply_to
        if parent is not None and parent in by_id and parent != tid:
            replies.setdefault(parent, []).append(tid)
    key = _order_key(by_id)
    for kids in replies.values():
        kids.sort(key=key)
    return replies


def build_threads(tweets: list[TweetRecord]) -> ThreadList:
    """One tree per tweet without a parent link.

    Replies whose parent is missing, and anything caught in a reply cycle,
    can never be reached from a root; they are dropped and counted.
    """
    _check_unique(tweets)
    by_id = {t.id: t for t in tweets}
    replies = _reply_index(by_id)
    roots = sorted((tid for tid, t in by_id.items() if t.in_reply_to is None),
                   key=_order_key(by_id))
    out = ThreadList(_grow(r, by_id, replies) for r in roots)
    out.dropped_orphans = len(by_id) - sum(len(t) for t in out)
    return out


def load_thread(path, strict: bool = True) -> ThreadTree:
    """Read a single-thread file (root first, parent link absent)."""
    result = read_tweets(path, strict=strict)
    trees = build_threads(result.records)
    if len(trees) != 1:
        raise ValueError(f"{path}: expected exactly one thread root, found {len(trees)}")
    tree = trees[0]
    tree.dropped_orphans = trees.dropped_orphans
    return tree


@dataclass
class ManifestEntry:
    path: Path
    label: str
    event_id: str | None = None


@dataclass
class DatasetManifest:
    name: str
    source_kind: str
    threads: list[ManifestEntry]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "source_kind": self.source_kind,
            "threads": [
                {"path": str(e.path), "label": e.label}
                | ({"event_id": e.event_id} if e.event_id is not None else {})
                for e in self.threads
            ],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


def load_manifest(path, *, labels=LABELS, check_paths: bool = True) -> DatasetManifest:
    """Load a manifest; thread paths resolve relative to the manifest file.

    ``labels=None`` accepts any label string (raw source manifests fed to
    :func:`threadcred.align.unify_labels`).
    """
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    kind = doc.get("source_kind", "")
    if kind not in SOURCE_KINDS:
        raise ValueError(f"unknown source_kind {kind!r}")
    entries = []
    for item in doc.get("threads", []):
        label = item.get("label")
        if labels is not None and label not in labels:
            raise ValueError(f"unknown label {label!r}")
        p = Path(item["path"])
        if not p.is_absolute():
            p = path.parent / p
        if check_paths and not p.exists():
            raise FileNotFoundError(f"thread file not found: {p}")
        entries.append(ManifestEntry(p, label, item.get("event_id")))
    return DatasetManifest(str(doc.get("name", path.stem)), kind, entries)
