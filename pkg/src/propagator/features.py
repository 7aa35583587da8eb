"""Feature extraction: six families of per-user behavioral features.

Families and sizes: profile (5), social (3), personality (103 with the default
lexicon and trait map), activity (9), retweeting (3), readiness (6). Feature
order is fixed by the extractor configuration and published as a versioned
manifest so model files and services agree bit-exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import personality
from .corpus import LabeledDataset, UserRecord
from .errors import NegativeLongevity

DAY = 86400
MONTH_WINDOW = 30 * DAY
STEADINESS_WINDOW = 20     # gaps are taken over the most recent 20 messages
STEADINESS_EPSILON = 1.0   # seconds; keeps 1/sigma finite for perfectly periodic posters

MANIFEST_VERSION = 1

FAMILY_PROFILE = "profile"
FAMILY_SOCIAL = "social"
FAMILY_PERSONALITY = "personality"
FAMILY_ACTIVITY = "activity"
FAMILY_RETWEETING = "retweeting"
FAMILY_READINESS = "readiness"

PROFILE_NAMES = (
    "account_age_days",
    "screen_name_length",
    "has_description",
    "description_length",
    "has_profile_url",
)
SOCIAL_NAMES = ("friends_count", "followers_count", "friend_follower_ratio")
ACTIVITY_NAMES = (
    "statuses_total",
    "mentions_per_status",
    "urls_per_status",
    "hashtags_per_status",
    "statuses_per_day_account_life",
    "statuses_per_day_last_month",
    "mentions_per_day_last_month",
    "urls_per_day_last_month",
    "hashtags_per_day_last_month",
)
RETWEETING_NAMES = ("retweets_per_status", "retweets_per_day", "stranger_retweet_fraction")
READINESS_NAMES = (
    "weekday_likelihood",
    "hour_likelihood",
    "weekday_entropy",
    "hour_entropy",
    "steadiness",
    "inactivity_seconds",
)


def extract_profile(user: UserRecord, request_time: int) -> tuple[float, ...]:
    """(account age in days, screen name length, has description, description
    length, has profile URL)"""
    if request_time < user.created_at:
        raise NegativeLongevity(
            f"request_time {request_time} precedes account creation {user.created_at}"
        )
    return (
        (request_time - user.created_at) / DAY,
        float(len(user.screen_name)),
        1.0 if user.description else 0.0,
        float(len(user.description)),
        1.0 if user.has_url else 0.0,
    )


def extract_social(user: UserRecord) -> tuple[float, ...]:
    """(friends, followers, friends / max(1, followers))"""
    return (
        float(user.friends_count),
        float(user.followers_count),
        user.friends_count / max(1, user.followers_count),
    )


def extract_activity(user: UserRecord, request_time: int) -> tuple[float, ...]:
    """Message volume and advanced-usage rates, overall and over the 30 days
    before the request (closed window)."""
    tl = user.timeline
    n = len(tl)
    mentions = sum(m.mention_count for m in tl)
    urls = sum(m.url_count for m in tl)
    hashtags = sum(m.hashtag_count for m in tl)
    life_days = max(1.0, (request_time - user.created_at) / DAY)
    lo = request_time - MONTH_WINDOW
    win = [m for m in tl if lo <= m.timestamp <= request_time]
    return (
        float(n),
        mentions / max(1, n),
        urls / max(1, n),
        hashtags / max(1, n),
        n / life_days,
        len(win) / 30.0,
        sum(m.mention_count for m in win) / 30.0,
        sum(m.url_count for m in win) / 30.0,
        sum(m.hashtag_count for m in win) / 30.0,
    )


def extract_retweeting(user: UserRecord) -> tuple[float, ...]:
    """Repost frequency and the fraction of reposts sourced from outside the
    user's own network (0 when the friend set is unknown)."""
    tl = user.timeline
    n = len(tl)
    rts = [m for m in tl if m.is_retweet]
    r = len(rts)
    if n >= 2:
        span_days = max(1.0, (tl[-1].timestamp - tl[0].timestamp) / DAY)
    else:
        span_days = 1.0
    if r and user.friend_ids is not None:
        stranger = sum(1 for m in rts if m.original_author_id not in user.friend_ids) / r
    else:
        stranger = 0.0
    return (r / max(1, n), (r / span_days) if r else 0.0, stranger)


def _entropy(counts: list[int]) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log(p)
    return h


def extract_readiness(user: UserRecord, request_time: int) -> tuple[float, ...]:
    """How likely the user is to be active at the request moment.

    Likelihoods are the fraction of past messages in the request's UTC
    weekday/hour bucket; entropies (natural log) are over the full 7/24 bucket
    distributions. Steadiness is 1/(sigma + 1s) over inter-message gaps among
    the most recent 20 messages; with fewer than two messages it is 0.
    """
    tl = user.timeline
    n = len(tl)
    at = datetime.fromtimestamp(request_time, tz=timezone.utc)
    day_counts = [0] * 7
    hour_counts = [0] * 24
    for m in tl:
        dt = datetime.fromtimestamp(m.timestamp, tz=timezone.utc)
        day_counts[dt.weekday()] += 1
        hour_counts[dt.hour] += 1
    day_lik = day_counts[at.weekday()] / n if n else 0.0
    hour_lik = hour_counts[at.hour] / n if n else 0.0
    recent = [m.timestamp for m in tl[-STEADINESS_WINDOW:]]
    gaps = np.diff(recent)
    if len(gaps) >= 1:
        sigma = float(np.std(gaps))
        steadiness = 1.0 / (sigma + STEADINESS_EPSILON)
    else:
        steadiness = 0.0
    inactivity = float(request_time - (tl[-1].timestamp if tl else user.created_at))
    return (
        day_lik,
        hour_lik,
        _entropy(day_counts),
        _entropy(hour_counts),
        steadiness,
        inactivity,
    )


@dataclass(frozen=True)
class FeatureVector:
    user_id: str
    request_time: int
    names: tuple[str, ...]
    families: tuple[str, ...]
    values: np.ndarray

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))

    def __len__(self) -> int:
        return len(self.names)


class FeatureExtractor:
    """Binds a lexicon and trait mapping to the full feature pipeline.

    Personality scores are computed over the concatenation of all timeline
    texts. Instances are immutable after construction and safe to share
    across threads.
    """

    def __init__(
        self,
        lexicon: personality.Lexicon | None = None,
        trait_mapping: personality.TraitMapping | None = None,
    ):
        self.lexicon = lexicon if lexicon is not None else personality.default_lexicon()
        self.mapping = (
            trait_mapping if trait_mapping is not None else personality.default_trait_mapping()
        )
        unknown = self.mapping.referenced_categories() - set(self.lexicon.names)
        if unknown:
            raise personality.UnknownCategory(sorted(unknown)[0])
        names: list[str] = []
        families: list[str] = []
        for fam, block in (
            (FAMILY_PROFILE, PROFILE_NAMES),
            (FAMILY_SOCIAL, SOCIAL_NAMES),
        ):
            names.extend(block)
            families.extend([fam] * len(block))
        names.extend(f"lex_{c}" for c in self.lexicon.names)
        names.extend(f"trait_{t}" for t in self.mapping.names)
        families.extend([FAMILY_PERSONALITY] * (self.lexicon.category_count + len(self.mapping.names)))
        for fam, block in (
            (FAMILY_ACTIVITY, ACTIVITY_NAMES),
            (FAMILY_RETWEETING, RETWEETING_NAMES),
            (FAMILY_READINESS, READINESS_NAMES),
        ):
            names.extend(block)
            families.extend([fam] * len(block))
        self.names: tuple[str, ...] = tuple(names)
        self.families: tuple[str, ...] = tuple(families)

    def extract_personality(self, user: UserRecord) -> tuple[float, ...]:
        tokens = personality.tokenize(" ".join(m.text for m in user.timeline))
        cat = personality.score_categories(tokens, self.lexicon)
        traits = personality.derive_traits(cat, self.mapping)
        merged = dict(traits.big5)
        merged.update(traits.facets)
        return tuple(cat.scores[c] for c in self.lexicon.names) + tuple(
            merged[t] for t in self.mapping.names
        )

    def extract(self, user: UserRecord, request_time: int) -> FeatureVector:
        values = np.array(
            extract_profile(user, request_time)
            + extract_social(user)
            + self.extract_personality(user)
            + extract_activity(user, request_time)
            + extract_retweeting(user)
            + extract_readiness(user, request_time),
            dtype=np.float64,
        )
        if not np.all(np.isfinite(values)):
            bad = self.names[int(np.flatnonzero(~np.isfinite(values))[0])]
            raise ValueError(f"non-finite feature {bad} for user {user.user_id}")
        return FeatureVector(
            user_id=user.user_id,
            request_time=request_time,
            names=self.names,
            families=self.families,
            values=values,
        )

    def matrix(self, dataset: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
        """Feature matrix and 0/1 labels for a labeled dataset."""
        rows = [self.extract(e.user, e.request_time).values for e in dataset.entries]
        return np.vstack(rows) if rows else np.empty((0, len(self.names))), dataset.labels01()

    def manifest(self) -> dict:
        return {"version": MANIFEST_VERSION, "features": list(self.names)}

    def write_manifest(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
