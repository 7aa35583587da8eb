"""Per-user exponential wait-time models for deadline-constrained reposting.

A user's wait samples are the elapsed times between an original post and the
user's repost of it, taken from timeline history. The mean of those samples
is the expected wait; the probability of acting within t seconds is the
exponential CDF 1 - exp(-t / mean_wait).
"""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass
from math import exp

from .corpus import UserRecord
from .errors import NegativeDeadline

logger = logging.getLogger(__name__)

SOURCE_HISTORY = "history"
SOURCE_FALLBACK = "population_fallback"

# used when neither the user nor the surrounding population has any samples
DEFAULT_FALLBACK_SECONDS = 12 * 3600.0


@dataclass(frozen=True)
class WaitTimeModel:
    user_id: str
    mean_wait: float  # seconds
    sample_count: int
    source: str

    def __post_init__(self):
        if self.mean_wait <= 0:
            raise ValueError("mean_wait must be positive")
        if (self.source == SOURCE_FALLBACK) != (self.sample_count == 0):
            raise ValueError("fallback source iff zero samples")


def wait_samples(user: UserRecord) -> list[float]:
    """Original-post-to-repost waits, in seconds; non-positive waits are
    dropped (clock skew in the source data)."""
    out: list[float] = []
    for m in user.retweets:
        if m.original_timestamp is None:
            continue
        wait = m.timestamp - m.original_timestamp
        if wait <= 0:
            logger.warning(
                "discarding non-positive wait %ss for user %s", wait, user.user_id
            )
            continue
        out.append(float(wait))
    return out


def fit_wait_time(user: UserRecord, population_fallback: float = DEFAULT_FALLBACK_SECONDS) -> WaitTimeModel:
    """Fit one user's mean wait; users without usable history get the fallback."""
    if population_fallback <= 0:
        raise ValueError("population_fallback must be positive")
    samples = wait_samples(user)
    if not samples:
        return WaitTimeModel(user.user_id, float(population_fallback), 0, SOURCE_FALLBACK)
    return WaitTimeModel(user.user_id, sum(samples) / len(samples), len(samples), SOURCE_HISTORY)


def population_fallback(users: list[UserRecord], default: float = DEFAULT_FALLBACK_SECONDS) -> float:
    """Median of the observed per-user mean waits; robust to heavy tails."""
    means = []
    for u in users:
        s = wait_samples(u)
        if s:
            means.append(sum(s) / len(s))
    return statistics.median(means) if means else float(default)


def fit_population(
    users: list[UserRecord], default: float = DEFAULT_FALLBACK_SECONDS
) -> dict[str, WaitTimeModel]:
    """Fit everyone, using the population median as the fallback mean."""
    fallback = population_fallback(users, default)
    return {u.user_id: fit_wait_time(u, fallback) for u in users}


def prob_within(model: WaitTimeModel, t: float) -> float:
    """Probability of reposting within t seconds of the request."""
    if t < 0:
        raise NegativeDeadline(f"deadline {t} is negative")
    return 1.0 - exp(-t / model.mean_wait)


def passes_cutoff(model: WaitTimeModel, t: float, c: float) -> bool:
    """Whether the within-deadline probability clears the cutoff c."""
    if not 0.0 <= c <= 1.0:
        raise ValueError("cutoff must be in [0, 1]")
    return prob_within(model, t) >= c
