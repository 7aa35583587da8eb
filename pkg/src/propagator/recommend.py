"""Deadline-aware top-N candidate ranking and campaign outcome metrics."""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import exp

from .errors import EmptyOutcomes, NegativeDeadline

DEFAULT_CUTOFF = 0.7


@dataclass(frozen=True)
class ScoredCandidate:
    user_id: str
    retweet_probability: float
    followers_count: int
    mean_wait: float  # seconds
    prob_within_deadline: float | None = None
    eligible: bool = False

    def to_obj(self) -> dict:
        return {
            "user_id": self.user_id,
            "retweet_probability": self.retweet_probability,
            "prob_within_deadline": self.prob_within_deadline,
            "followers_count": self.followers_count,
            "mean_wait": self.mean_wait,
            "eligible": self.eligible,
        }


@dataclass(frozen=True)
class ContactOutcome:
    user_id: str
    dispatched_at: float
    retweeted: bool
    retweet_at: float | None = None
    follower_ids: frozenset[str] | None = None
    followers_count: int = 0

    def __post_init__(self):
        if self.retweeted != (self.retweet_at is not None):
            raise ValueError("retweet_at present iff retweeted")
        if self.retweet_at is not None and self.retweet_at < self.dispatched_at:
            raise ValueError("retweet_at precedes dispatch")


def rank_candidates(
    candidates: list[ScoredCandidate], t: float, c: float, n: int
) -> list[ScoredCandidate]:
    """Top-n candidates whose within-deadline probability clears the cutoff.

    Ordered by repost probability descending, then deadline probability
    descending, then user_id ascending; the returned entries carry the
    deadline probability computed at t.
    """
    if t < 0:
        raise NegativeDeadline(f"deadline {t} is negative")
    if not 0.0 <= c <= 1.0:
        raise ValueError("cutoff must be in [0, 1]")
    if n < 0:
        raise ValueError("n must be >= 0")
    scored = []
    for cand in candidates:
        p_t = 1.0 - exp(-t / cand.mean_wait)
        if p_t >= c:
            scored.append(replace(cand, prob_within_deadline=p_t, eligible=True))
    scored.sort(key=lambda s: (-s.retweet_probability, -s.prob_within_deadline, s.user_id))
    return scored[:n]


def retweeting_rate(outcomes: list[ContactOutcome], window: float | None = None) -> float:
    """Fraction of contacted users who reposted; with a window, reposts after
    dispatched_at + window count as non-reposts."""
    if not outcomes:
        raise EmptyOutcomes("no contacts recorded")
    hits = 0
    for o in outcomes:
        if not o.retweeted:
            continue
        if window is None or (o.retweet_at - o.dispatched_at) <= window:
            hits += 1
    return hits / len(outcomes)


@dataclass(frozen=True)
class InfoReach:
    value: float
    distinct: bool  # False = summed follower counts (overlap-unadjusted)


def unit_info_reach(outcomes: list[ContactOutcome], window: float | None = None) -> InfoReach:
    """Followers reached by reposters, per contacted user.

    When every reposter carries a follower id set the numerator is the size of
    their union (each follower counted once); otherwise it falls back to the
    sum of follower counts, flagged as overlap-unadjusted.
    """
    if not outcomes:
        raise EmptyOutcomes("no contacts recorded")
    reposters = [
        o
        for o in outcomes
        if o.retweeted and (window is None or (o.retweet_at - o.dispatched_at) <= window)
    ]
    n = len(outcomes)
    if all(o.follower_ids is not None for o in reposters):
        union: set[str] = set()
        for o in reposters:
            union |= o.follower_ids
        return InfoReach(len(union) / n, distinct=True)
    total = sum(o.followers_count for o in reposters)
    return InfoReach(total / n, distinct=False)
