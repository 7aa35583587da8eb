import json
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from propagator.classify import ModelSpec, train
from propagator.corpus import user_to_obj
from propagator.errors import (
    AlreadyDispatched,
    CampaignClosed,
    InvalidTemplate,
    MessageTooLong,
    UnknownCampaign,
    UnknownCandidate,
    UnknownModel,
)
from propagator.features import FeatureExtractor
from propagator.recommend import ScoredCandidate, rank_candidates
from propagator.service import CampaignStore, SimulatedBackend, create_app
from propagator.simulate import PopulationConfig, behavior_oracle, generate_population, to_labeled_dataset
from propagator.waittime import fit_wait_time

from conftest import BASE_TS, make_message, make_user

HOUR = 3600
EXTRACTOR = FeatureExtractor()


@pytest.fixture(scope="module")
def model():
    cfg = PopulationConfig(n_users=60, base_positive_rate=0.2, seed=13)
    ds = to_labeled_dataset(generate_population(cfg), cfg.request_time, cfg.seed)
    X, y = EXTRACTOR.matrix(ds)
    return train(ModelSpec(kind="logistic", seed=0, epochs=40), X, y, EXTRACTOR.names)


def fresh_store(tmp_path, model, backend=None, sub="logs"):
    store = CampaignStore(tmp_path / sub, clock=lambda: float(BASE_TS),
                          extractor=EXTRACTOR, backend=backend)
    mid = store.publish_model(model)
    return store, mid


def definition(mid, **kwargs):
    d = {
        "keywords": ["storm"],
        "template": "{user} please pass this along",
        "deadline": 24 * HOUR,
        "cutoff": 0.7,
        "top_n": 10,
        "model_id": mid,
    }
    d.update(kwargs)
    return d


def candidate_records(n_matching=6, n_other=4):
    records = []
    for i in range(n_matching):
        timeline = tuple(
            make_message(BASE_TS - 2 * 86400 + j * HOUR, f"big storm rolling in {j}")
            for j in range(5)
        )
        records.append((make_user(f"m{i}", n_messages=0, timeline=timeline), None))
    for i in range(n_other):
        timeline = tuple(
            make_message(BASE_TS - 2 * 86400 + j * HOUR, f"nothing to see here {j}")
            for j in range(5)
        )
        records.append((make_user(f"o{i}", n_messages=0, timeline=timeline), None))
    return records


class TestCampaignLifecycle:
    def test_create_returns_open_campaign(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid))
        assert store.campaign(cid).state == "open"
        assert store.campaign(cid).cutoff == 0.7

    def test_template_requires_placeholder(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        with pytest.raises(InvalidTemplate):
            store.create_campaign(definition(mid, template="no placeholder"))

    def test_unknown_model(self, tmp_path, model):
        store, _ = fresh_store(tmp_path, model)
        with pytest.raises(UnknownModel):
            store.create_campaign(definition("missing"))

    def test_unknown_campaign(self, tmp_path, model):
        store, _ = fresh_store(tmp_path, model)
        with pytest.raises(UnknownCampaign):
            store.metrics("nope")


class TestIngest:
    def test_keyword_filter(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid))
        accepted = store.ingest_candidates(cid, candidate_records(6, 4))
        assert accepted == 6

    def test_duplicate_idempotent(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid))
        records = candidate_records(3, 0)
        assert store.ingest_candidates(cid, records) == 3
        assert store.ingest_candidates(cid, records) == 0

    def test_closed_campaign(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid))
        store.close_campaign(cid)
        with pytest.raises(CampaignClosed):
            store.ingest_candidates(cid, candidate_records(1, 0))

    def test_case_insensitive_match(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, keywords=["STORM"]))
        assert store.ingest_candidates(cid, candidate_records(2, 2)) == 2


class TestRecommendations:
    def test_empty(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid))
        assert store.recommendations(cid) == []

    def test_matches_offline_ranking(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0, top_n=50))
        records = candidate_records(8, 0)
        store.ingest_candidates(cid, records)
        got = [c.user_id for c in store.recommendations(cid)]
        campaign = store.campaign(cid)
        offline = []
        for record, _ in records:
            fv = EXTRACTOR.extract(record, BASE_TS)
            offline.append(
                ScoredCandidate(
                    user_id=record.user_id,
                    retweet_probability=float(model.predict_proba(fv.values)),
                    followers_count=record.followers_count,
                    mean_wait=fit_wait_time(record, campaign.fallback_mean_wait).mean_wait,
                )
            )
        expected = [
            c.user_id
            for c in rank_candidates(offline, campaign.deadline, campaign.cutoff, campaign.top_n)
        ]
        assert got == expected

    def test_dispatched_user_excluded(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(4, 0))
        top = store.recommendations(cid)[0].user_id
        store.dispatch(cid, top, "please {user} pass along")
        after = [c.user_id for c in store.recommendations(cid)]
        assert top not in after

    def test_stable_absent_new_events(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(5, 0))
        a = [c.to_obj() for c in store.recommendations(cid)]
        b = [c.to_obj() for c in store.recommendations(cid)]
        assert a == b


class TestDispatch:
    def test_renders_placeholder(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(2, 0))
        ev = store.dispatch(cid, "m0", "hey {user} please share")
        assert ev["message"] == "hey @name_m0 please share"

    def test_unknown_candidate(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid))
        with pytest.raises(UnknownCandidate):
            store.dispatch(cid, "ghost", "x {user}")

    def test_already_dispatched(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(2, 0))
        store.dispatch(cid, "m0", "one {user}")
        with pytest.raises(AlreadyDispatched):
            store.dispatch(cid, "m0", "two {user}")

    def test_message_too_long(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(1, 0))
        with pytest.raises(MessageTooLong):
            store.dispatch(cid, "m0", "x" * 300)

    def test_concurrent_duplicate_dispatch_single_success(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(1, 0))
        results = []

        def attempt():
            try:
                store.dispatch(cid, "m0", "go {user}")
                return "ok"
            except AlreadyDispatched:
                return "dup"

        with ThreadPoolExecutor(max_workers=32) as pool:
            results = list(pool.map(lambda _: attempt(), range(100)))
        assert results.count("ok") == 1
        assert results.count("dup") == 99


class TestSimulatedBackend:
    def test_observation_scheduled_at_dispatch_plus_wait(self, tmp_path, model):
        cfg = PopulationConfig(n_users=20, base_positive_rate=0.3, seed=5)
        pop = generate_population(cfg)
        # force a certain responder so the oracle path is exercised
        sure = pop[0].__class__(record=pop[0].record, latent_willingness=1.0,
                                latent_mean_wait=pop[0].latent_mean_wait)
        pop = [sure] + pop[1:]
        backend = SimulatedBackend(pop, seed=cfg.seed)
        store, mid = fresh_store(tmp_path, model, backend=backend)
        cid = store.create_campaign(definition(mid, keywords=["a", "e", "o"], cutoff=0.0))
        store.ingest_candidates(cid, [(sure.record, None)])
        store.dispatch(cid, sure.record.user_id, "please {user}")
        _, wait = behavior_oracle(sure, float(BASE_TS), cfg.seed)
        m = store.metrics(cid)
        assert m["retweeted"] == 1
        state = store._campaigns[cid]
        assert state.observed[sure.record.user_id] == pytest.approx(BASE_TS + wait)


class TestMetricsAndReplay:
    def test_no_dispatches(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid))
        m = store.metrics(cid)
        assert m["contacted"] == 0
        assert m["rate"] is None
        assert m["windowed_rate"] is None

    def test_rate_19_of_100(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0, top_n=100))
        store.ingest_candidates(cid, candidate_records(100, 0))
        for i in range(100):
            store.dispatch(cid, f"m{i}", "please {user}")
        for i in range(19):
            store.record_observation(cid, f"m{i}", float(BASE_TS + HOUR))
        m = store.metrics(cid)
        assert m["contacted"] == 100
        assert m["retweeted"] == 19
        assert m["rate"] == pytest.approx(0.19)

    def test_observation_requires_dispatch(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(1, 0))
        with pytest.raises(UnknownCandidate):
            store.record_observation(cid, "m0", float(BASE_TS + 1))

    def test_observation_idempotent(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(1, 0))
        store.dispatch(cid, "m0", "go {user}")
        assert store.record_observation(cid, "m0", float(BASE_TS + 60))
        assert not store.record_observation(cid, "m0", float(BASE_TS + 120))

    def test_sequence_gapless(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0))
        store.ingest_candidates(cid, candidate_records(3, 0))
        store.dispatch(cid, "m0", "go {user}")
        lines = (store.log_dir / f"{cid}.jsonl").read_text().strip().splitlines()
        seqs = [json.loads(l)["seq"] for l in lines]
        assert seqs == list(range(1, len(seqs) + 1))

    def test_restart_replay_identical(self, tmp_path, model):
        store, mid = fresh_store(tmp_path, model)
        cid = store.create_campaign(definition(mid, cutoff=0.0, top_n=5))
        store.ingest_candidates(cid, candidate_records(6, 2))
        top = store.recommendations(cid)[0].user_id
        store.dispatch(cid, top, "please {user}")
        store.record_observation(cid, top, float(BASE_TS + 2 * HOUR))
        recs1 = json.dumps([c.to_obj() for c in store.recommendations(cid)], sort_keys=True)
        metrics1 = json.dumps(store.metrics(cid), sort_keys=True)

        reopened = CampaignStore(store.log_dir, clock=lambda: float(BASE_TS), extractor=EXTRACTOR)
        recs2 = json.dumps([c.to_obj() for c in reopened.recommendations(cid)], sort_keys=True)
        metrics2 = json.dumps(reopened.metrics(cid), sort_keys=True)
        assert recs1 == recs2
        assert metrics1 == metrics2


class TestHttpApi:
    @pytest.fixture()
    def client(self, tmp_path, model):
        from fastapi.testclient import TestClient

        store, mid = fresh_store(tmp_path, model, sub="api")
        app = create_app(store)
        return TestClient(app), mid

    def test_full_flow(self, client, model):
        http, mid = client
        r = http.post("/models", content=model.to_json())
        assert r.status_code == 200
        assert r.json()["model_id"] == mid

        r = http.post("/campaigns", json=definition(mid, cutoff=0.0, top_n=3))
        cid = r.json()["campaign_id"]

        body = "\n".join(
            json.dumps(user_to_obj(rec)) for rec, _ in candidate_records(4, 2)
        )
        r = http.post(f"/campaigns/{cid}/candidates", content=body)
        assert r.json()["accepted"] == 4

        r = http.get(f"/campaigns/{cid}/recommendations")
        recs = r.json()
        assert len(recs) == 3
        assert set(recs[0]) == {
            "user_id", "retweet_probability", "prob_within_deadline",
            "followers_count", "mean_wait", "eligible",
        }

        uid = recs[0]["user_id"]
        r = http.post(f"/campaigns/{cid}/dispatch", json={"user_id": uid, "message": "go {user}"})
        assert r.status_code == 200
        r = http.post(f"/campaigns/{cid}/observations",
                      json={"user_id": uid, "observed_at": BASE_TS + 600})
        assert r.json()["recorded"]

        r = http.get(f"/campaigns/{cid}/metrics")
        m = r.json()
        assert m["contacted"] == 1
        assert m["retweeted"] == 1
        assert m["rate"] == 1.0

    def test_error_shape_and_codes(self, client):
        http, mid = client
        r = http.get("/campaigns/nope/metrics")
        assert r.status_code == 404
        assert r.json() == {"code": "UnknownCampaign", "message": r.json()["message"]}

        r = http.post("/campaigns", json=definition(mid, template="missing placeholder"))
        assert r.status_code == 400
        assert r.json()["code"] == "InvalidTemplate"

        r = http.post("/campaigns", json=definition("ghost-model"))
        assert r.status_code == 404
        assert r.json()["code"] == "UnknownModel"

    def test_conflict_on_duplicate_dispatch(self, client):
        http, mid = client
        cid = http.post("/campaigns", json=definition(mid, cutoff=0.0)).json()["campaign_id"]
        body = "\n".join(json.dumps(user_to_obj(rec)) for rec, _ in candidate_records(1, 0))
        http.post(f"/campaigns/{cid}/candidates", content=body)
        first = http.post(f"/campaigns/{cid}/dispatch",
                          json={"user_id": "m0", "message": "go {user}"})
        assert first.status_code == 200
        second = http.post(f"/campaigns/{cid}/dispatch",
                           json={"user_id": "m0", "message": "go {user}"})
        assert second.status_code == 409
        assert second.json()["code"] == "AlreadyDispatched"

    def test_close_endpoint(self, client):
        http, mid = client
        cid = http.post("/campaigns", json=definition(mid)).json()["campaign_id"]
        assert http.post(f"/campaigns/{cid}/close").json() == {"state": "closed"}
        body = "\n".join(json.dumps(user_to_obj(rec)) for rec, _ in candidate_records(1, 0))
        r = http.post(f"/campaigns/{cid}/candidates", content=body)
        assert r.status_code == 409
        assert r.json()["code"] == "CampaignClosed"
