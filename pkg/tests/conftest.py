import json

import pytest

from propagator.corpus import (
    DatasetEntry,
    LabeledDataset,
    Message,
    NON_RETWEETER,
    RETWEETER,
    UserRecord,
    message_from_text,
)

BASE_TS = 1_700_000_000  # fixed anchor so tests never touch the wall clock


def make_message(ts, text="hello world", **kwargs):
    return message_from_text(ts, text, **kwargs)


def make_user(user_id="u1", n_messages=5, start=BASE_TS - 10 * 86400, gap=3600, **kwargs):
    timeline = tuple(make_message(start + i * gap) for i in range(n_messages))
    defaults = dict(
        user_id=user_id,
        screen_name=f"name_{user_id}",
        created_at=start - 30 * 86400,
        description="a description",
        has_url=False,
        friends_count=10,
        followers_count=20,
        timeline=timeline,
    )
    defaults.update(kwargs)
    return UserRecord(**defaults)


def make_entry(user_id="u1", label=NON_RETWEETER, request_time=BASE_TS, **kwargs):
    return DatasetEntry(user=make_user(user_id, **kwargs), label=label, request_time=request_time)


def make_dataset(n_pos, n_neg, name="fixture"):
    entries = [make_entry(f"p{i}", RETWEETER) for i in range(n_pos)]
    entries += [make_entry(f"n{i}", NON_RETWEETER) for i in range(n_neg)]
    return LabeledDataset(name=name, entries=tuple(entries))


def user_obj(user_id="u1", label=None, timeline=None, **kwargs):
    obj = {
        "user_id": user_id,
        "screen_name": f"name_{user_id}",
        "created_at": BASE_TS - 40 * 86400,
        "description": "",
        "has_url": False,
        "friends_count": 3,
        "followers_count": 7,
        "timeline": timeline if timeline is not None else [
            {"ts": BASE_TS - 86400, "text": "just a plain post"}
        ],
    }
    if label is not None:
        obj["label"] = label
    obj.update(kwargs)
    return obj


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(objs, name="data.jsonl"):
        path = tmp_path / name
        with path.open("w", encoding="utf-8") as fh:
            for o in objs:
                fh.write(json.dumps(o) + "\n")
        return path

    return _write
