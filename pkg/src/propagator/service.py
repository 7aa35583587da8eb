"""Campaign service: models, candidate ingestion, recommendations, dispatch,
and live metrics, all backed by append-only per-campaign event logs.

State is a pure fold over the log, so a restart plus replay reconstructs the
exact same recommendations and metrics. A single lock serializes appends,
which is what enforces at-most-once dispatch under concurrent requests.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import corpus
from .classify import TrainedModel, model_from_obj
from .errors import (
    AlreadyDispatched,
    CampaignClosed,
    InvalidTemplate,
    MalformedRecord,
    MessageTooLong,
    NegativeLongevity,
    PropagatorError,
    UnknownCampaign,
    UnknownCandidate,
    UnknownModel,
)
from .features import FeatureExtractor
from .recommend import ContactOutcome, ScoredCandidate, rank_candidates, retweeting_rate, unit_info_reach
from .waittime import DEFAULT_FALLBACK_SECONDS, fit_wait_time

MESSAGE_LIMIT = 280
PLACEHOLDER = "{user}"
DEFAULT_DEADLINE_SECONDS = 24 * 3600.0
DEFAULT_CUTOFF = 0.7
DEFAULT_TOP_N = 10


@dataclass(frozen=True)
class Campaign:
    id: str
    keywords: tuple[str, ...]
    template: str
    deadline: float         # seconds
    cutoff: float
    top_n: int
    model_id: str
    state: str = "open"
    fallback_mean_wait: float = DEFAULT_FALLBACK_SECONDS

    def __post_init__(self):
        if not 0.0 <= self.cutoff <= 1.0:
            raise InvalidTemplate("cutoff must be in [0, 1]")
        if self.deadline <= 0:
            raise InvalidTemplate("deadline must be positive")
        if self.top_n < 1:
            raise InvalidTemplate("top_n must be >= 1")
        if PLACEHOLDER not in self.template:
            raise InvalidTemplate(f"template must contain {PLACEHOLDER}")
        if len(self.template) > MESSAGE_LIMIT:
            raise InvalidTemplate(f"template exceeds {MESSAGE_LIMIT} characters")
        if not self.keywords:
            raise InvalidTemplate("at least one topic keyword required")


@dataclass
class _CampaignState:
    campaign: Campaign
    seq: int = 0
    # user_id -> stored candidate payload (record obj + scores)
    candidates: dict[str, dict] = field(default_factory=dict)
    dispatched: dict[str, dict] = field(default_factory=dict)
    observed: dict[str, float] = field(default_factory=dict)


class SimulatedBackend:
    """Dispatch backend that asks the population's behavior oracle and, on a
    positive outcome, schedules the observation at dispatch time + wait."""

    def __init__(self, population, seed: int):
        from .simulate import behavior_oracle  # local import avoids a cycle

        self._oracle = behavior_oracle
        self._users = {u.record.user_id: u for u in population}
        self._seed = seed

    def outcome(self, user_id: str, dispatch_time: float) -> tuple[bool, float | None]:
        user = self._users.get(user_id)
        if user is None:
            return False, None
        return self._oracle(user, dispatch_time, self._seed)


class CampaignStore:
    """Event-sourced store; one JSONL log per campaign under ``log_dir``."""

    def __init__(
        self,
        log_dir: str | Path,
        clock=time.time,
        extractor: FeatureExtractor | None = None,
        backend: SimulatedBackend | None = None,
    ):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.models_dir = self.log_dir / "models"
        self.models_dir.mkdir(exist_ok=True)
        self.clock = clock
        self.extractor = extractor or FeatureExtractor()
        self.backend = backend
        self._lock = threading.RLock()
        self._campaigns: dict[str, _CampaignState] = {}
        self._models: dict[str, TrainedModel] = {}
        self._created_count = 0
        self._replay()

    # -- persistence -----------------------------------------------------

    def _log_path(self, campaign_id: str) -> Path:
        return self.log_dir / f"{campaign_id}.jsonl"

    def _replay(self) -> None:
        for path in sorted(self.models_dir.glob("*.json")):
            model = model_from_obj(json.loads(path.read_text(encoding="utf-8")))
            self._models[path.stem] = model
        for path in sorted(self.log_dir.glob("*.jsonl")):
            with path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply(json.loads(line))
            self._created_count = max(self._created_count, len(self._campaigns))

    def _append(self, event: dict) -> dict:
        """Apply the event to in-memory state, then durably append it."""
        self._apply(event)
        path = self._log_path(event["campaign_id"])
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return event

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        cid = event["campaign_id"]
        if kind == "campaign_created":
            d = event["definition"]
            campaign = Campaign(
                id=cid,
                keywords=tuple(d["keywords"]),
                template=d["template"],
                deadline=float(d["deadline"]),
                cutoff=float(d["cutoff"]),
                top_n=int(d["top_n"]),
                model_id=d["model_id"],
                fallback_mean_wait=float(d.get("fallback_mean_wait", DEFAULT_FALLBACK_SECONDS)),
            )
            self._campaigns[cid] = _CampaignState(campaign=campaign, seq=event["seq"])
            return
        state = self._campaigns[cid]
        state.seq = event["seq"]
        if kind == "candidate_seen":
            state.candidates[event["candidate"]["record"]["user_id"]] = event["candidate"]
        elif kind == "dispatched":
            state.dispatched[event["user_id"]] = event
        elif kind == "retweet_observed":
            state.observed.setdefault(event["user_id"], event["observed_at"])
        elif kind == "campaign_closed":
            state.campaign = Campaign(**{**state.campaign.__dict__, "state": "closed"})

    def _event(self, state: _CampaignState, kind: str, ts: float, **payload) -> dict:
        return {
            "seq": state.seq + 1,
            "ts": ts,
            "campaign_id": state.campaign.id,
            "kind": kind,
            **payload,
        }

    def _state(self, campaign_id: str) -> _CampaignState:
        state = self._campaigns.get(campaign_id)
        if state is None:
            raise UnknownCampaign(campaign_id)
        return state

    # -- models ----------------------------------------------------------

    def publish_model(self, model: TrainedModel) -> str:
        with self._lock:
            mid = model.model_id
            self._models[mid] = model
            (self.models_dir / f"{mid}.json").write_text(model.to_json() + "\n", encoding="utf-8")
            return mid

    def publish_model_obj(self, obj: dict) -> str:
        return self.publish_model(model_from_obj(obj))

    def model(self, model_id: str) -> TrainedModel:
        if model_id not in self._models:
            raise UnknownModel(model_id)
        return self._models[model_id]

    # -- campaign lifecycle ------------------------------------------------

    def create_campaign(self, definition: dict) -> str:
        """Validate and persist a campaign; returns its id.

        Deadline, cutoff, and top_n default to 24 hours, 0.7, and 10.
        """
        with self._lock:
            model_id = definition.get("model_id", "")
            self.model(model_id)
            normalized = {
                "keywords": list(definition.get("keywords", ())),
                "template": definition.get("template", ""),
                "deadline": float(definition.get("deadline", DEFAULT_DEADLINE_SECONDS)),
                "cutoff": float(definition.get("cutoff", DEFAULT_CUTOFF)),
                "top_n": int(definition.get("top_n", DEFAULT_TOP_N)),
                "model_id": model_id,
                "fallback_mean_wait": float(
                    definition.get("fallback_mean_wait", DEFAULT_FALLBACK_SECONDS)
                ),
            }
            digest = hashlib.sha256(
                json.dumps(normalized, sort_keys=True).encode("utf-8")
                + str(self._created_count).encode("utf-8")
            ).hexdigest()[:12]
            cid = f"c{digest}"
            # construct first so validation happens before anything is written
            Campaign(
                id=cid,
                keywords=tuple(normalized["keywords"]),
                template=normalized["template"],
                deadline=normalized["deadline"],
                cutoff=normalized["cutoff"],
                top_n=normalized["top_n"],
                model_id=model_id,
                fallback_mean_wait=normalized["fallback_mean_wait"],
            )
            event = {
                "seq": 1,
                "ts": float(self.clock()),
                "campaign_id": cid,
                "kind": "campaign_created",
                "definition": normalized,
            }
            self._created_count += 1
            self._append(event)
            return cid

    def close_campaign(self, campaign_id: str) -> None:
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.state == "closed":
                return
            self._append(self._event(state, "campaign_closed", float(self.clock())))

    def campaign(self, campaign_id: str) -> Campaign:
        with self._lock:
            return self._state(campaign_id).campaign

    # -- candidates --------------------------------------------------------

    def _matches_topic(self, record: corpus.UserRecord, keywords: tuple[str, ...]) -> bool:
        lowered = [k.lower() for k in keywords]
        for m in record.timeline:
            text = m.text.lower()
            if any(k in text for k in lowered):
                return True
        return False

    def _score_candidate(self, record: corpus.UserRecord, campaign: Campaign, now: float) -> dict:
        model = self.model(campaign.model_id)
        fv = self.extractor.extract(record, int(now))
        proba = float(model.predict_proba(fv.values))
        wait = fit_wait_time(record, campaign.fallback_mean_wait)
        return {
            "record": corpus.user_to_obj(record),
            "retweet_probability": proba,
            "mean_wait": wait.mean_wait,
            "wait_source": wait.source,
        }

    def ingest_candidates(
        self,
        campaign_id: str,
        records: list[tuple[corpus.UserRecord, int | None]],
        now: float | None = None,
    ) -> int:
        """Score and record candidates whose timelines match the campaign topic.

        Duplicates (by user_id, including across batches) are ignored
        idempotently; records the extractor cannot score are skipped.
        """
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.state != "open":
                raise CampaignClosed(campaign_id)
            campaign = state.campaign
            known = set(state.candidates)
        ts = float(now if now is not None else self.clock())
        scored: list[dict] = []
        batch_seen: set[str] = set()
        for record, _ in records:
            if record.user_id in known or record.user_id in batch_seen:
                continue
            if not self._matches_topic(record, campaign.keywords):
                continue
            try:
                scored.append(self._score_candidate(record, campaign, ts))
            except (NegativeLongevity, ValueError):
                continue
            batch_seen.add(record.user_id)
        accepted = 0
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.state != "open":
                raise CampaignClosed(campaign_id)
            for payload in scored:
                uid = payload["record"]["user_id"]
                if uid in state.candidates:
                    continue
                self._append(self._event(state, "candidate_seen", ts, candidate=payload))
                accepted += 1
        return accepted

    # -- recommendations / dispatch ----------------------------------------

    def recommendations(self, campaign_id: str) -> list[ScoredCandidate]:
        with self._lock:
            state = self._state(campaign_id)
            campaign = state.campaign
            pool = [
                ScoredCandidate(
                    user_id=uid,
                    retweet_probability=c["retweet_probability"],
                    followers_count=int(c["record"]["followers_count"]),
                    mean_wait=c["mean_wait"],
                )
                for uid, c in state.candidates.items()
                if uid not in state.dispatched
            ]
        return rank_candidates(pool, campaign.deadline, campaign.cutoff, campaign.top_n)

    def dispatch(
        self, campaign_id: str, user_id: str, message: str, now: float | None = None
    ) -> dict:
        """Send (record) one request to one candidate; at most once per campaign."""
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.state != "open":
                raise CampaignClosed(campaign_id)
            if user_id not in state.candidates:
                raise UnknownCandidate(user_id)
            if user_id in state.dispatched:
                raise AlreadyDispatched(user_id)
            screen_name = state.candidates[user_id]["record"]["screen_name"]
            rendered = message.replace(PLACEHOLDER, f"@{screen_name}")
            if len(rendered) > MESSAGE_LIMIT:
                raise MessageTooLong(f"rendered message is {len(rendered)} characters")
            ts = float(now if now is not None else self.clock())
            event = self._append(
                self._event(state, "dispatched", ts, user_id=user_id, message=rendered)
            )
            if self.backend is not None:
                acted, wait = self.backend.outcome(user_id, ts)
                if acted:
                    self._append(
                        self._event(
                            state, "retweet_observed", ts, user_id=user_id, observed_at=ts + wait
                        )
                    )
            return event

    def record_observation(self, campaign_id: str, user_id: str, observed_at: float) -> bool:
        """Record an externally observed repost; idempotent per user."""
        with self._lock:
            state = self._state(campaign_id)
            if user_id not in state.dispatched:
                raise UnknownCandidate(user_id)
            if user_id in state.observed:
                return False
            dispatched_at = state.dispatched[user_id]["ts"]
            if observed_at < dispatched_at:
                raise ValueError("observed_at precedes dispatch")
            self._append(
                self._event(
                    state, "retweet_observed", float(self.clock()),
                    user_id=user_id, observed_at=float(observed_at),
                )
            )
            return True

    # -- metrics -------------------------------------------------------------

    def _outcomes(self, state: _CampaignState) -> list[ContactOutcome]:
        out = []
        for uid, ev in state.dispatched.items():
            observed = state.observed.get(uid)
            cand = state.candidates[uid]
            fids = cand["record"].get("follower_ids")
            out.append(
                ContactOutcome(
                    user_id=uid,
                    dispatched_at=ev["ts"],
                    retweeted=observed is not None,
                    retweet_at=observed,
                    follower_ids=frozenset(fids) if fids is not None else None,
                    followers_count=int(cand["record"]["followers_count"]),
                )
            )
        out.sort(key=lambda o: o.user_id)
        return out

    def metrics(self, campaign_id: str) -> dict:
        with self._lock:
            state = self._state(campaign_id)
            outcomes = self._outcomes(state)
            deadline = state.campaign.deadline
        if not outcomes:
            return {
                "contacted": 0,
                "retweeted": 0,
                "rate": None,
                "windowed_rate": None,
                "unit_info_reach": None,
                "distinct_followers": None,
                "deadline_seconds": deadline,
            }
        reach = unit_info_reach(outcomes)
        return {
            "contacted": len(outcomes),
            "retweeted": sum(1 for o in outcomes if o.retweeted),
            "rate": retweeting_rate(outcomes),
            "windowed_rate": retweeting_rate(outcomes, deadline),
            "unit_info_reach": reach.value,
            "distinct_followers": reach.distinct,
            "deadline_seconds": deadline,
        }


def parse_candidate_lines(body: str) -> list[tuple[corpus.UserRecord, int | None]]:
    records = []
    for line_no, line in enumerate(body.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record, _, request_time = corpus.parse_user_obj(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
        records.append((record, request_time))
    return records


_STATUS = {
    "UnknownCampaign": 404,
    "UnknownModel": 404,
    "UnknownCandidate": 404,
    "AlreadyDispatched": 409,
    "CampaignClosed": 409,
    "InvalidTemplate": 400,
    "MessageTooLong": 400,
    "MalformedRecord": 400,
    "VersionMismatch": 400,
    "CorruptModel": 400,
}


def create_app(store: CampaignStore) -> FastAPI:
    """FastAPI wrapper exposing the campaign store over HTTP+JSON."""
    app = FastAPI(title="propagator", docs_url=None, redoc_url=None)
    app.state.store = store

    @app.exception_handler(PropagatorError)
    async def _handle(request: Request, exc: PropagatorError):
        status = _STATUS.get(exc.code, 400)
        return JSONResponse(status_code=status, content={"code": exc.code, "message": str(exc)})

    @app.post("/models")
    async def post_model(request: Request):
        obj = json.loads(await request.body())
        return {"model_id": store.publish_model_obj(obj)}

    @app.post("/campaigns")
    async def post_campaign(request: Request):
        definition = json.loads(await request.body())
        return {"campaign_id": store.create_campaign(definition)}

    @app.post("/campaigns/{campaign_id}/candidates")
    async def post_candidates(campaign_id: str, request: Request):
        body = (await request.body()).decode("utf-8")
        records = parse_candidate_lines(body)
        return {"accepted": store.ingest_candidates(campaign_id, records)}

    @app.get("/campaigns/{campaign_id}/recommendations")
    async def get_recommendations(campaign_id: str):
        return [c.to_obj() for c in store.recommendations(campaign_id)]

    @app.post("/campaigns/{campaign_id}/dispatch")
    async def post_dispatch(campaign_id: str, request: Request):
        body = json.loads(await request.body())
        return store.dispatch(campaign_id, str(body["user_id"]), str(body["message"]))

    @app.post("/campaigns/{campaign_id}/observations")
    async def post_observation(campaign_id: str, request: Request):
        body = json.loads(await request.body())
        recorded = store.record_observation(
            campaign_id, str(body["user_id"]), float(body["observed_at"])
        )
        return {"recorded": recorded}

    @app.post("/campaigns/{campaign_id}/close")
    async def post_close(campaign_id: str):
        store.close_campaign(campaign_id)
        return {"state": "closed"}

    @app.get("/campaigns/{campaign_id}/metrics")
    async def get_metrics(campaign_id: str):
        return store.metrics(campaign_id)

    return app
