"""Dataset model: user records with message timelines, JSONL I/O, stratified splits.

The on-disk format is JSONL, one user object per line:

    {"user_id": ..., "screen_name": ..., "created_at": ..., "description": ...,
     "has_url": ..., "friends_count": ..., "followers_count": ...,
     "follower_ids": [...]?, "friend_ids": [...]?, "label": ...?, "request_time": ...?,
     "timeline": [{"ts": ..., "text": ..., "is_retweet": ...?,
                   "original_author_id": ...?, "original_ts": ...?}, ...]}

Timestamps are integer epoch seconds UTC. Per-message mention/URL/hashtag counts
are not stored; they are recomputed from the text on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DuplicateUser, EmptyDataset, MalformedRecord, SingleClass

RETWEETER = "retweeter"
NON_RETWEETER = "non_retweeter"
LABELS = (NON_RETWEETER, RETWEETER)

# Timelines are capped at the 200 most recent messages.
TIMELINE_CAP = 200


def count_text_tokens(text: str) -> tuple[int, int, int]:
    """Count (mentions, urls, hashtags) by whitespace token prefix."""
    mentions = urls = hashtags = 0
    for tok in text.split():
        if tok.startswith("@") and len(tok) > 1:
            mentions += 1
        elif tok.startswith("#") and len(tok) > 1:
            hashtags += 1
        elif tok.startswith("http"):
            urls += 1
    return mentions, urls, hashtags


def _retweet_author_from_text(text: str) -> str | None:
    """Extract the original author from an 'RT @name ...' prefix."""
    if not text.startswith("RT @"):
        return None
    rest = text[4:]
    author = rest.split()[0].rstrip(":") if rest.split() else ""
    return author or None


@dataclass(frozen=True)
class Message:
    timestamp: int
    text: str
    is_retweet: bool = False
    original_author_id: str | None = None
    original_timestamp: int | None = None
    mention_count: int = 0
    url_count: int = 0
    hashtag_count: int = 0

    def __post_init__(self):
        if self.is_retweet and self.original_author_id is None:
            raise ValueError("retweet without original_author_id")
        if self.original_timestamp is not None and self.original_timestamp > self.timestamp:
            raise ValueError("original_timestamp after the message timestamp")
        if min(self.mention_count, self.url_count, self.hashtag_count) < 0:
            raise ValueError("negative token count")


def message_from_text(
    ts: int,
    text: str,
    is_retweet: bool | None = None,
    original_author_id: str | None = None,
    original_ts: int | None = None,
) -> Message:
    """Build a Message with counts derived from the text.

    When ``is_retweet`` is not given, an ``RT @name`` prefix marks a retweet
    (convention of the era this format mirrors) and the author is parsed from it.
    """
    mentions, urls, hashtags = count_text_tokens(text)
    parsed_author = _retweet_author_from_text(text)
    if is_retweet is None:
        is_retweet = parsed_author is not None
    if is_retweet and original_author_id is None:
        original_author_id = parsed_author
    if original_ts is not None and original_ts > ts:
        raise ValueError("original_ts after the message timestamp")
    return Message(
        timestamp=int(ts),
        text=text,
        is_retweet=bool(is_retweet),
        original_author_id=original_author_id if is_retweet else None,
        original_timestamp=int(original_ts) if (is_retweet and original_ts is not None) else None,
        mention_count=mentions,
        url_count=urls,
        hashtag_count=hashtags,
    )


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    screen_name: str
    created_at: int
    description: str = ""
    has_url: bool = False
    friends_count: int = 0
    followers_count: int = 0
    follower_ids: frozenset[str] | None = None
    friend_ids: frozenset[str] | None = None
    timeline: tuple[Message, ...] = ()

    def __post_init__(self):
        if self.friends_count < 0 or self.followers_count < 0:
            raise ValueError("negative social counts")
        if len(self.timeline) > TIMELINE_CAP:
            raise ValueError(f"timeline longer than {TIMELINE_CAP}")
        ts = [m.timestamp for m in self.timeline]
        if any(a > b for a, b in zip(ts, ts[1:])):
            raise ValueError("timeline timestamps not nondecreasing")

    @property
    def retweets(self) -> tuple[Message, ...]:
        return tuple(m for m in self.timeline if m.is_retweet)


@dataclass(frozen=True)
class DatasetEntry:
    user: UserRecord
    label: str
    request_time: int

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"bad label {self.label!r}")
        if self.request_time <= 0:
            raise ValueError("request_time must be positive")


@dataclass(frozen=True)
class LabeledDataset:
    name: str
    entries: tuple[DatasetEntry, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def positives(self) -> int:
        return sum(1 for e in self.entries if e.label == RETWEETER)

    def labels01(self) -> np.ndarray:
        return np.array([1 if e.label == RETWEETER else 0 for e in self.entries], dtype=np.int64)


def truncate_timeline(messages: list[Message]) -> tuple[Message, ...]:
    """Sort by timestamp and keep the most recent TIMELINE_CAP messages."""
    messages = sorted(messages, key=lambda m: m.timestamp)
    return tuple(messages[-TIMELINE_CAP:])


def parse_user_obj(obj: dict) -> tuple[UserRecord, str | None, int | None]:
    """Build a UserRecord from one decoded JSONL object.

    Returns (record, label or None, request_time or None). Raises ValueError or
    KeyError on schema violations; callers wrap those into MalformedRecord.
    """
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    timeline = []
    for m in obj.get("timeline", []):
        timeline.append(
            message_from_text(
                ts=m["ts"],
                text=str(m["text"]),
                is_retweet=m.get("is_retweet"),
                original_author_id=m.get("original_author_id"),
                original_ts=m.get("original_ts"),
            )
        )
    follower_ids = obj.get("follower_ids")
    friend_ids = obj.get("friend_ids")
    record = UserRecord(
        user_id=str(obj["user_id"]),
        screen_name=str(obj["screen_name"]),
        created_at=int(obj["created_at"]),
        description=str(obj.get("description", "")),
        has_url=bool(obj.get("has_url", False)),
        friends_count=int(obj["friends_count"]),
        followers_count=int(obj["followers_count"]),
        follower_ids=frozenset(map(str, follower_ids)) if follower_ids is not None else None,
        friend_ids=frozenset(map(str, friend_ids)) if friend_ids is not None else None,
        timeline=truncate_timeline(timeline),
    )
    label = obj.get("label")
    if isinstance(label, bool):
        label = RETWEETER if label else NON_RETWEETER
    if label is not None and label not in LABELS:
        raise ValueError(f"bad label {label!r}")
    request_time = obj.get("request_time")
    return record, label, int(request_time) if request_time is not None else None


def _default_request_time(record: UserRecord) -> int:
    if record.timeline:
        return record.timeline[-1].timestamp
    return record.created_at


def load_dataset(path: str | Path, name: str | None = None) -> LabeledDataset:
    """Load a labeled dataset from a JSONL file.

    Every line must carry a label. A missing request_time defaults to the last
    timeline timestamp (created_at for empty timelines).
    """
    path = Path(path)
    entries: list[DatasetEntry] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record, label, request_time = parse_user_obj(obj)
                if label is None:
                    raise ValueError("missing label")
                entry = DatasetEntry(
                    user=record,
                    label=label,
                    request_time=request_time if request_time is not None else _default_request_time(record),
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            if record.user_id in seen:
                raise DuplicateUser(record.user_id)
            seen.add(record.user_id)
            entries.append(entry)
    if not entries:
        raise EmptyDataset(f"{path} contains no records")
    return LabeledDataset(name=name or path.stem, entries=tuple(entries))


def load_user_records(path: str | Path) -> list[tuple[UserRecord, int | None]]:
    """Load unlabeled candidate records (labels, when present, are ignored)."""
    path = Path(path)
    out: list[tuple[UserRecord, int | None]] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record, _, request_time = parse_user_obj(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            out.append((record, request_time))
    return out


def user_to_obj(record: UserRecord, label: str | None = None, request_time: int | None = None) -> dict:
    """Serialize one record to the JSONL object shape (canonical, optionals omitted)."""
    timeline = []
    for m in record.timeline:
        mo: dict = {"ts": m.timestamp, "text": m.text, "is_retweet": m.is_retweet}
        if m.original_author_id is not None:
            mo["original_author_id"] = m.original_author_id
        if m.original_timestamp is not None:
            mo["original_ts"] = m.original_timestamp
        timeline.append(mo)
    obj: dict = {
        "user_id": record.user_id,
        "screen_name": record.screen_name,
        "created_at": record.created_at,
        "description": record.description,
        "has_url": record.has_url,
        "friends_count": record.friends_count,
        "followers_count": record.followers_count,
        "timeline": timeline,
    }
    if record.follower_ids is not None:
        obj["follower_ids"] = sorted(record.follower_ids)
    if record.friend_ids is not None:
        obj["friend_ids"] = sorted(record.friend_ids)
    if label is not None:
        obj["label"] = label
    if request_time is not None:
        obj["request_time"] = request_time
    return obj


def dumps_user_line(record: UserRecord, label: str | None = None, request_time: int | None = None) -> str:
    return json.dumps(user_to_obj(record, label, request_time),
                      sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def save_dataset(ds: LabeledDataset, path: str | Path) -> None:
    """Write the dataset as canonical JSONL (stable bytes for identical data)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for e in ds.entries:
            fh.write(dumps_user_line(e.user, e.label, e.request_time))
            fh.write("\n")


def stratified_split(
    ds: LabeledDataset, train_fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Split into train/test preserving per-class ratios.

    Per class, the train share is round-half-up(count * fraction), so a .5
    remainder lands in the training set. Deterministic for a given seed.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    by_class: dict[str, list[int]] = {}
    for i, e in enumerate(ds.entries):
        by_class.setdefault(e.label, []).append(i)
    if len(by_class) < 2:
        raise SingleClass(f"dataset {ds.name!r} has a single class")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(by_class):
        idx = np.array(by_class[label])
        perm = rng.permutation(len(idx))
        n_train = int(np.floor(len(idx) * train_fraction + 0.5))
        chosen = idx[perm]
        train_idx.extend(chosen[:n_train].tolist())
        test_idx.extend(chosen[n_train:].tolist())
    train_idx.sort()
    test_idx.sort()
    train = LabeledDataset(name=f"{ds.name}-train", entries=tuple(ds.entries[i] for i in train_idx))
    test = LabeledDataset(name=f"{ds.name}-test", entries=tuple(ds.entries[i] for i in test_idx))
    return train, test
