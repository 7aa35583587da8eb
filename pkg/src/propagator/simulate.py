"""Synthetic populations with planted willingness/readiness structure.

Users get regime-driven posting schedules (which creates real entropy and
steadiness variation), repost histories with exponential waits drawn from a
latent per-user mean, and heavy-tailed follower sets. Willingness to repost
on request is a logistic function of a declared subset of the user's true
behavioral features, rescaled so the population mean response matches the
configured base rate. Only the behavior oracle reads the latent values, so
predictors must earn their accuracy from the observable record.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classify import ModelSpec, TrainedModel, train
from .corpus import (
    RETWEETER,
    NON_RETWEETER,
    DatasetEntry,
    LabeledDataset,
    Message,
    TIMELINE_CAP,
    UserRecord,
    dumps_user_line,
    message_from_text,
    stratified_split,
)
from .errors import BudgetExceedsPopulation, InvalidConfig
from .features import (
    ACTIVITY_NAMES,
    READINESS_NAMES,
    RETWEETING_NAMES,
    FeatureExtractor,
    extract_activity,
    extract_readiness,
    extract_retweeting,
)
from .recommend import ContactOutcome, InfoReach, ScoredCandidate, rank_candidates, retweeting_rate, unit_info_reach
from .waittime import fit_population

HOUR = 3600
DAY = 86400

_PLANTABLE = set(ACTIVITY_NAMES) | set(RETWEETING_NAMES) | set(READINESS_NAMES) | {"log_followers"}

DEFAULT_WILLINGNESS = {
    "statuses_per_day_last_month": 0.9,
    "retweets_per_status": 1.1,
    "stranger_retweet_fraction": 0.7,
    "hour_entropy": 0.6,
    "mentions_per_status": 0.3,
}

# hour-of-day posting intensity per regime (unnormalized), plus weekday weights
_REGIMES = {
    "office": (
        [0.1, 0.1, 0.1, 0.1, 0.2, 0.3, 0.8, 1.5, 2.5, 3.0, 2.8, 2.5,
         2.8, 2.5, 2.2, 2.0, 1.8, 1.5, 1.0, 0.8, 0.6, 0.4, 0.2, 0.1],
        [1.0, 1.0, 1.0, 1.0, 1.0, 0.4, 0.4],
    ),
    "evening": (
        [0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2, 0.4, 0.6, 0.8, 0.8, 1.0,
         1.0, 1.0, 1.0, 1.2, 1.8, 2.5, 3.0, 3.2, 3.0, 2.2, 1.2, 0.5],
        [0.8, 0.8, 0.9, 1.0, 1.2, 1.4, 1.2],
    ),
    "night": (
        [2.5, 2.0, 1.5, 0.8, 0.4, 0.2, 0.1, 0.1, 0.2, 0.3, 0.4, 0.5,
         0.6, 0.6, 0.6, 0.8, 1.0, 1.2, 1.5, 1.8, 2.2, 2.8, 3.0, 2.8],
        [1.0, 1.0, 1.0, 1.0, 1.0, 1.3, 1.3],
    ),
    "uniform": ([1.0] * 24, [1.0] * 7),
}
_REGIME_ORDER = ("office", "evening", "night", "uniform")

_VOCAB = (
    "we think this news matters because people share what they know and hope it helps "
    "happy sad angry love great work school music game movie home family friends time "
    "today tomorrow now later always never maybe sure money pay run walk go see hear feel "
    "storm rain sun city road train crowd report update watch read good bad big small"
).split()


@dataclass(frozen=True)
class PopulationConfig:
    n_users: int = 2000
    base_positive_rate: float = 0.05
    seed: int = 0
    request_time: int = 1_700_000_000
    history_days: int = 60
    regime_weights: tuple[float, ...] = (0.35, 0.25, 0.2, 0.2)
    rate_log_mean: float = 0.6     # ln(posts per day)
    rate_log_sigma: float = 0.9
    willingness_coeffs: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WILLINGNESS))
    willingness_noise: float = 0.25
    follower_coef: float = 0.0
    wait_log_mean: float = math.log(3 * HOUR)
    wait_log_sigma: float = 1.0
    followers_log_mean: float = math.log(40.0)
    followers_log_sigma: float = 1.4
    follower_overlap: float = 0.2
    keyword_pool: tuple[str, ...] = ("storm", "flood", "safety", "outbreak", "transit")
    keyword_rate: float = 0.5

    def __post_init__(self):
        if self.n_users < 10:
            raise InvalidConfig("n_users must be >= 10")
        if not 0.0 < self.base_positive_rate < 1.0:
            raise InvalidConfig("base_positive_rate must be in (0, 1)")
        if self.history_days < 2:
            raise InvalidConfig("history_days must be >= 2")
        if len(self.regime_weights) != len(_REGIME_ORDER) or min(self.regime_weights) < 0:
            raise InvalidConfig(f"regime_weights needs {len(_REGIME_ORDER)} nonnegative entries")
        if not 0.0 <= self.follower_overlap <= 1.0:
            raise InvalidConfig("follower_overlap must be in [0, 1]")
        bad = set(self.willingness_coeffs) - _PLANTABLE
        if bad:
            raise InvalidConfig(f"unknown willingness features: {sorted(bad)}")

    @staticmethod
    def from_json(path: str | Path) -> "PopulationConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidConfig(str(exc)) from exc
        if not isinstance(obj, dict):
            raise InvalidConfig("config must be a JSON object")
        kwargs = {}
        for f in (
            "n_users", "base_positive_rate", "seed", "request_time", "history_days",
            "rate_log_mean", "rate_log_sigma", "willingness_noise", "follower_coef",
            "wait_log_mean", "wait_log_sigma", "followers_log_mean", "followers_log_sigma",
            "follower_overlap", "keyword_rate",
        ):
            if f in obj:
                kwargs[f] = obj[f]
        if "regime_weights" in obj:
            kwargs["regime_weights"] = tuple(obj["regime_weights"])
        if "keyword_pool" in obj:
            kwargs["keyword_pool"] = tuple(obj["keyword_pool"])
        if "willingness_coeffs" in obj:
            kwargs["willingness_coeffs"] = {str(k): float(v) for k, v in obj["willingness_coeffs"].items()}
        try:
            return PopulationConfig(**kwargs)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from exc


@dataclass(frozen=True)
class SyntheticUser:
    record: UserRecord
    latent_willingness: float
    latent_mean_wait: float


def _make_timeline(
    rng: np.random.Generator,
    config: PopulationConfig,
    hour_profile: list[float],
    day_profile: list[float],
    rate_per_day: float,
    mean_wait: float,
    friend_pool: list[str],
    style: dict[str, float],
) -> list[Message]:
    n = int(rng.poisson(rate_per_day * config.history_days))
    n = min(n, 400)
    if n == 0:
        return []
    hour_p = np.array(hour_profile) / sum(hour_profile)
    # weekday preference applied over concrete day offsets before the request
    day0 = config.request_time - config.request_time % DAY
    offsets = np.arange(config.history_days)
    weekdays = ((day0 // DAY + 3) - offsets) % 7  # epoch day 0 was a Thursday
    day_w = np.array([day_profile[int(wd)] for wd in weekdays], dtype=np.float64)
    day_p = day_w / day_w.sum()

    # all per-message randomness drawn in one batch; the loop only builds text
    days = rng.choice(config.history_days, size=n, p=day_p)
    hours = rng.choice(24, size=n, p=hour_p)
    secs = rng.integers(0, HOUR, size=n)
    n_words = rng.integers(3, 11, size=n)
    word_idx = rng.integers(0, len(_VOCAB), size=int(n_words.sum()))
    kw_flag = rng.random(n) < config.keyword_rate
    kw_idx = rng.integers(0, len(config.keyword_pool), size=n)
    tag_flag = rng.random(n) < style["hashtag"]
    tag_idx = rng.integers(0, len(config.keyword_pool), size=n)
    url_flag = rng.random(n) < style["url"]
    url_code = rng.integers(0, 1 << 20, size=n)
    mention_flag = rng.random(n) < style["mention"]
    mention_id = rng.integers(0, 10_000, size=n)
    rt_flag = rng.random(n) < style["retweet"]
    stranger_flag = rng.random(n) < style["stranger"]
    friend_idx = rng.integers(0, max(1, len(friend_pool)), size=n)
    stranger_id = rng.integers(0, 1_000_000, size=n)
    waits = rng.exponential(mean_wait, size=n)

    msgs: list[Message] = []
    pos = 0
    for i in range(n):
        ts = day0 - int(days[i]) * DAY + int(hours[i]) * HOUR + int(secs[i])
        if ts > config.request_time:
            ts -= DAY
        k = int(n_words[i])
        words = [_VOCAB[j] for j in word_idx[pos : pos + k]]
        pos += k
        if kw_flag[i]:
            words.append(config.keyword_pool[kw_idx[i]])
        if tag_flag[i]:
            words.append("#" + config.keyword_pool[tag_idx[i]])
        if url_flag[i]:
            words.append(f"http://ex.am/{int(url_code[i]):05x}")
        if mention_flag[i]:
            words.append("@p%d" % mention_id[i])
        text = " ".join(words)
        if rt_flag[i]:
            if friend_pool and not stranger_flag[i]:
                author = friend_pool[int(friend_idx[i]) % len(friend_pool)]
            else:
                author = "s%d" % stranger_id[i]
            wait = max(1, int(waits[i]))
            msgs.append(
                message_from_text(
                    ts, f"RT @{author} {text}",
                    is_retweet=True, original_author_id=author, original_ts=ts - wait,
                )
            )
        else:
            msgs.append(message_from_text(ts, text))
    msgs.sort(key=lambda m: m.timestamp)
    return msgs[-TIMELINE_CAP:]


def _planted_value(record: UserRecord, name: str, request_time: int) -> float:
    if name == "log_followers":
        return math.log1p(record.followers_count)
    if name in ACTIVITY_NAMES:
        return dict(zip(ACTIVITY_NAMES, extract_activity(record, request_time)))[name]
    if name in RETWEETING_NAMES:
        return dict(zip(RETWEETING_NAMES, extract_retweeting(record)))[name]
    return dict(zip(READINESS_NAMES, extract_readiness(record, request_time)))[name]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60, 60)))


def _calibrate_intercept(raw: np.ndarray, target: float) -> float:
    lo, hi = -40.0, 40.0
    for _ in range(100):
        mid = (lo + hi) / 2.0
        if float(_sigmoid(raw + mid).mean()) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def generate_population(config: PopulationConfig) -> list[SyntheticUser]:
    """Deterministically generate the synthetic population for a config."""
    rng = np.random.default_rng(config.seed)
    weights = np.array(config.regime_weights, dtype=np.float64)
    weights = weights / weights.sum()
    pre: list[dict] = []
    total_follower_slots = 0
    for i in range(config.n_users):
        regime = _REGIME_ORDER[int(rng.choice(len(_REGIME_ORDER), p=weights))]
        hour_profile, day_profile = _REGIMES[regime]
        rate = float(np.exp(rng.normal(config.rate_log_mean, config.rate_log_sigma)))
        rate = min(max(rate, 0.05), 40.0)
        mean_wait = float(np.exp(rng.normal(config.wait_log_mean, config.wait_log_sigma)))
        mean_wait = min(max(mean_wait, 60.0), 30.0 * DAY)
        n_followers = int(np.exp(rng.normal(config.followers_log_mean, config.followers_log_sigma)))
        n_followers = min(n_followers, 5000)
        total_follower_slots += n_followers
        n_friends = int(rng.integers(3, 80))
        friend_pool = [f"p{v}" for v in rng.integers(0, 10 * config.n_users, size=n_friends)]
        style = {
            "hashtag": float(rng.beta(1.2, 4.0)),
            "url": float(rng.beta(1.2, 4.0)),
            "mention": float(rng.beta(1.2, 3.0)),
            "retweet": float(rng.beta(1.3, 4.0)),
            "stranger": float(rng.beta(2.0, 2.0)),
        }
        timeline = _make_timeline(
            rng, config, hour_profile, day_profile, rate, mean_wait, friend_pool, style
        )
        first_ts = timeline[0].timestamp if timeline else config.request_time
        longevity_days = float(np.exp(rng.uniform(math.log(60), math.log(1500))))
        created_at = min(
            int(config.request_time - longevity_days * DAY),
            first_ts - DAY,
            config.request_time - DAY,
        )
        pre.append(
            {
                "i": i,
                "timeline": timeline,
                "created_at": created_at,
                "friend_ids": frozenset(friend_pool),
                "n_followers": n_followers,
                "mean_wait": mean_wait,
                "style": style,
            }
        )

    pool_size = max(100, int(total_follower_slots * (1.0 - config.follower_overlap)) + 100)
    records: list[UserRecord] = []
    for p in pre:
        count = min(p["n_followers"], pool_size)
        # sampled with replacement then deduplicated: cheaper than a
        # permutation draw, and followers_count stays len(follower_ids)
        ids = rng.integers(0, pool_size, size=count) if count else ()
        follower_ids = frozenset(f"w{int(v)}" for v in ids)
        has_descr = rng.random() < 0.7
        records.append(
            UserRecord(
                user_id=f"u{p['i']:05d}",
                screen_name=f"user{p['i']}",
                created_at=p["created_at"],
                description="tells people about things that matter" if has_descr else "",
                has_url=bool(rng.random() < 0.3),
                friends_count=len(p["friend_ids"]),
                followers_count=len(follower_ids),
                follower_ids=follower_ids,
                friend_ids=p["friend_ids"],
                timeline=tuple(p["timeline"]),
            )
        )

    # plant willingness on standardized true features
    coeff_names = sorted(config.willingness_coeffs)
    raw = np.zeros(config.n_users)
    for name in coeff_names:
        vals = np.array([_planted_value(r, name, config.request_time) for r in records])
        sd = vals.std()
        z = (vals - vals.mean()) / sd if sd > 0 else np.zeros_like(vals)
        raw += config.willingness_coeffs[name] * z
    if config.follower_coef:
        vals = np.array([math.log1p(r.followers_count) for r in records])
        sd = vals.std()
        if sd > 0:
            raw += config.follower_coef * (vals - vals.mean()) / sd
    raw += rng.normal(0.0, config.willingness_noise, size=config.n_users)
    intercept = _calibrate_intercept(raw, config.base_positive_rate)
    willingness = _sigmoid(raw + intercept)

    return [
        SyntheticUser(record=r, latent_willingness=float(w), latent_mean_wait=float(p["mean_wait"]))
        for r, w, p in zip(records, willingness, pre)
    ]


def _stable_id_int(user_id: str) -> int:
    return int.from_bytes(hashlib.sha256(user_id.encode("utf-8")).digest()[:8], "big")


def behavior_oracle(
    user: SyntheticUser, dispatch_time: float, seed: int
) -> tuple[bool, float | None]:
    """Ground-truth response to a repost request: (acted, wait seconds).

    Deterministic in (user, dispatch_time, seed) regardless of call order.
    """
    rng = np.random.default_rng([seed & (2**63 - 1), _stable_id_int(user.record.user_id), int(dispatch_time)])
    if rng.random() >= user.latent_willingness:
        return False, None
    return True, float(rng.exponential(user.latent_mean_wait))


def probe_labels(population: list[SyntheticUser], request_time: float, seed: int) -> dict[str, bool]:
    """One oracle draw per user, the synthetic ground truth for training."""
    return {
        u.record.user_id: behavior_oracle(u, request_time, seed)[0] for u in population
    }


def to_labeled_dataset(
    population: list[SyntheticUser], request_time: int, seed: int, name: str = "synthetic"
) -> LabeledDataset:
    labels = probe_labels(population, request_time, seed)
    entries = tuple(
        DatasetEntry(
            user=u.record,
            label=RETWEETER if labels[u.record.user_id] else NON_RETWEETER,
            request_time=request_time,
        )
        for u in population
    )
    return LabeledDataset(name=name, entries=entries)


def export_corpus(
    population: list[SyntheticUser], path: str | Path, request_time: int, seed: int
) -> None:
    """Write the population as labeled corpus JSONL, consumable by the full pipeline."""
    labels = probe_labels(population, request_time, seed)
    with Path(path).open("w", encoding="utf-8") as fh:
        for u in population:
            label = RETWEETER if labels[u.record.user_id] else NON_RETWEETER
            fh.write(dumps_user_line(u.record, label, request_time))
            fh.write("\n")


@dataclass(frozen=True)
class StrategySpec:
    kind: str  # random | popular | predicted | predicted_waittime
    budget: int
    threshold: int = 100        # popular: minimum follower count (exclusive)
    deadline: float | None = None
    cutoff: float | None = None

    def __post_init__(self):
        if self.kind not in ("random", "popular", "predicted", "predicted_waittime"):
            raise InvalidConfig(f"unknown strategy {self.kind!r}")
        if self.budget < 0:
            raise InvalidConfig("budget must be >= 0")
        if self.threshold < 0:
            raise InvalidConfig("threshold must be >= 0")
        if self.kind == "predicted_waittime" and (self.deadline is None or self.cutoff is None):
            raise InvalidConfig("predicted_waittime needs deadline and cutoff")

    @property
    def label(self) -> str:
        return {
            "random": "Random People Contact",
            "popular": "Popular People Contact",
            "predicted": "Our Prediction Approach",
            "predicted_waittime": "Our Prediction Approach + Wait-Time Model",
        }[self.kind]


@dataclass(frozen=True)
class StrategyResult:
    strategy: StrategySpec
    outcomes: tuple[ContactOutcome, ...]
    contacted: int
    retweeted: int
    rate: float | None
    windowed_rate: float | None
    reach: InfoReach | None


def score_population(
    population: list[SyntheticUser],
    model: TrainedModel,
    extractor: FeatureExtractor,
    request_time: int,
    X: np.ndarray | None = None,
) -> np.ndarray:
    if X is None:
        X = np.vstack([extractor.extract(u.record, request_time).values for u in population])
    return np.asarray(model.predict_proba(X))


def run_strategy(
    population: list[SyntheticUser],
    strategy: StrategySpec,
    request_time: int,
    oracle_seed: int,
    model: TrainedModel | None = None,
    extractor: FeatureExtractor | None = None,
    X: np.ndarray | None = None,
    window: float | None = None,
    selection_seed: int | None = None,
) -> StrategyResult:
    """Contact up to ``budget`` users picked by the strategy; outcomes come
    from the behavior oracle. Each user is contacted at most once."""
    if strategy.budget > len(population):
        raise BudgetExceedsPopulation(
            f"budget {strategy.budget} exceeds population {len(population)}"
        )
    records = [u.record for u in population]
    if strategy.kind == "random":
        rng = np.random.default_rng(selection_seed if selection_seed is not None else oracle_seed)
        order = rng.permutation(len(population))
        chosen = [population[i] for i in order[: strategy.budget]]
    elif strategy.kind == "popular":
        eligible = [u for u in population if u.record.followers_count > strategy.threshold]
        eligible.sort(key=lambda u: (-u.record.followers_count, u.record.user_id))
        chosen = eligible[: strategy.budget]
    else:
        if model is None:
            raise InvalidConfig(f"strategy {strategy.kind!r} needs a trained model")
        extractor = extractor or FeatureExtractor()
        proba = score_population(population, model, extractor, request_time, X)
        if strategy.kind == "predicted":
            order = sorted(
                range(len(population)), key=lambda i: (-proba[i], records[i].user_id)
            )
            chosen = [population[i] for i in order[: strategy.budget]]
        else:
            wait_models = fit_population(records)
            by_id = {u.record.user_id: u for u in population}
            cands = [
                ScoredCandidate(
                    user_id=r.user_id,
                    retweet_probability=float(p),
                    followers_count=r.followers_count,
                    mean_wait=wait_models[r.user_id].mean_wait,
                )
                for r, p in zip(records, proba)
            ]
            ranked = rank_candidates(cands, strategy.deadline, strategy.cutoff, strategy.budget)
            chosen = [by_id[c.user_id] for c in ranked]

    outcomes = []
    for u in chosen:
        acted, wait = behavior_oracle(u, request_time, oracle_seed)
        outcomes.append(
            ContactOutcome(
                user_id=u.record.user_id,
                dispatched_at=request_time,
                retweeted=acted,
                retweet_at=(request_time + wait) if acted else None,
                follower_ids=u.record.follower_ids,
                followers_count=u.record.followers_count,
            )
        )
    effective_window = window if window is not None else strategy.deadline
    if outcomes:
        rate = retweeting_rate(outcomes)
        windowed = retweeting_rate(outcomes, effective_window) if effective_window else None
        reach = unit_info_reach(outcomes)
    else:
        rate = windowed = None
        reach = None
    return StrategyResult(
        strategy=strategy,
        outcomes=tuple(outcomes),
        contacted=len(outcomes),
        retweeted=sum(1 for o in outcomes if o.retweeted),
        rate=rate,
        windowed_rate=windowed,
        reach=reach,
    )


def _pct(v: float | None) -> str:
    return "-" if v is None else f"{100.0 * v:.1f}%"


def experiment_report(results: list[StrategyResult], window: float | None = None) -> str:
    """Aligned comparison table: one row per strategy."""
    if len(results) < 2:
        raise ValueError("need at least two strategies to compare")
    wlabel = f"Rate within {window / HOUR:g}h" if window else "Windowed Rate"
    header = f"{'Approach':<44} {'Contacted':>9}  {'Retweeting Rate':>15}  {wlabel:>16}  {'Unit-Info-Reach':>15}"
    lines = [header]
    for r in results:
        reach = "-" if r.reach is None else f"{r.reach.value:.1f}"
        lines.append(
            f"{r.strategy.label:<44} {r.contacted:>9}  {_pct(r.rate):>15}  {_pct(r.windowed_rate):>16}  {reach:>15}"
        )
    return "\n".join(lines) + "\n"


def experiment_csv(results: list[StrategyResult]) -> str:
    rows = ["approach,contacted,retweeting_rate,windowed_rate,unit_info_reach,distinct_followers"]
    for r in results:
        rows.append(
            ",".join(
                [
                    f'"{r.strategy.label}"',
                    str(r.contacted),
                    "" if r.rate is None else repr(r.rate),
                    "" if r.windowed_rate is None else repr(r.windowed_rate),
                    "" if r.reach is None else repr(r.reach.value),
                    "" if r.reach is None else str(r.reach.distinct).lower(),
                ]
            )
        )
    return "\n".join(rows) + "\n"


DEFAULT_EXPERIMENT_SPEC = ModelSpec(
    kind="random_forest", imbalance="weighted:30", trees=60, max_depth=14
)


def run_experiment(
    config: PopulationConfig,
    strategies: list[StrategySpec],
    model_spec: ModelSpec = DEFAULT_EXPERIMENT_SPEC,
    train_fraction: float = 2.0 / 3.0,
    window: float | None = None,
    extractor: FeatureExtractor | None = None,
) -> list[StrategyResult]:
    """Full pipeline: generate, probe ground truth, split, train, compare
    strategies on the held-out users."""
    extractor = extractor or FeatureExtractor()
    population = generate_population(config)
    ds = to_labeled_dataset(population, config.request_time, config.seed)
    train_ds, test_ds = stratified_split(ds, train_fraction, config.seed)
    X_train, y_train = extractor.matrix(train_ds)
    model = train(
        replace(model_spec, seed=config.seed),
        X_train,
        y_train,
        extractor.names,
        dataset_name=ds.name,
    )
    by_id = {u.record.user_id: u for u in population}
    test_pop = [by_id[e.user.user_id] for e in test_ds.entries]
    X_test = np.vstack([extractor.extract(u.record, config.request_time).values for u in test_pop])
    results = []
    for s in strategies:
        budget = min(s.budget, len(test_pop))
        results.append(
            run_strategy(
                test_pop,
                replace(s, budget=budget),
                config.request_time,
                oracle_seed=config.seed,
                model=model,
                extractor=extractor,
                X=X_test,
                window=window,
            )
        )
    return results
