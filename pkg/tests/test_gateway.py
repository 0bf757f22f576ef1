"""Fingerprinting, the replay store, and the remote chat path (faked)."""
import json
import threading

import pytest

from privacy_stories.gateway import (
    DEFAULT_TEMPERATURE,
    GatewayError,
    MissingRecordError,
    ModelConfig,
    RawResponse,
    ReplayStore,
    RetryPolicy,
    complete,
    fingerprint,
    record,
    response_from_json,
    response_to_json,
)
from privacy_stories.prompts import PromptBundle


def bundle(doc_id="doc-1", user="annotate this"):
    return PromptBundle(
        document_id=doc_id,
        system_text="you are an annotator",
        user_text=user,
        icl_document_id=None,
        tag_contract=(),
        taxonomy_version="t",
        template_version="v",
    )


def replay_cfg(**kw):
    return ModelConfig(provider_kind="replay", model_name="m", **kw)


def test_default_temperature_is_preserved():
    assert DEFAULT_TEMPERATURE == 0.7
    assert ModelConfig(provider_kind="replay").temperature == 0.7


def test_fingerprint_is_stable():
    a = fingerprint(bundle(), replay_cfg())
    b = fingerprint(bundle(), replay_cfg())
    assert a == b
    assert len(a) == 64 and set(a) <= set("0123456789abcdef")


@pytest.mark.parametrize(
    "variant",
    [
        lambda: fingerprint(bundle(user="other text"), replay_cfg()),
        lambda: fingerprint(bundle(), ModelConfig(provider_kind="replay", model_name="m2")),
        lambda: fingerprint(bundle(), replay_cfg(temperature=0.70001)),
        lambda: fingerprint(bundle(), replay_cfg(), response_index=1),
    ],
)
def test_fingerprint_sensitive_to_every_field(variant):
    assert variant() != fingerprint(bundle(), replay_cfg())


def test_fingerprint_ignores_document_id():
    # the prompt text identifies the request; the id is bookkeeping
    assert fingerprint(bundle(doc_id="a"), replay_cfg()) == fingerprint(
        bundle(doc_id="b"), replay_cfg()
    )


def test_store_round_trip(tmp_path):
    store = ReplayStore(tmp_path / "store")
    p = bundle()
    fp = fingerprint(p, replay_cfg())
    store.put(fp, "the response", p, replay_cfg(), 0)
    assert store.has(fp)
    assert store.get(fp) == "the response"
    assert len(store) == 1
    meta = store.meta(fp)
    assert meta["document_id"] == "doc-1"
    assert meta["response_index"] == 0


def test_store_missing_record(tmp_path):
    store = ReplayStore(tmp_path / "store")
    with pytest.raises(MissingRecordError) as err:
        store.get("0" * 64)
    assert "0" * 64 in str(err.value)
    with pytest.raises(MissingRecordError):
        store.meta("0" * 64)


def test_store_index_is_sorted_json(tmp_path):
    store = ReplayStore(tmp_path / "store")
    p = bundle()
    cfg = replay_cfg()
    for idx in (1, 0):
        store.put(fingerprint(p, cfg, idx), f"r{idx}", p, cfg, idx)
    raw = (tmp_path / "store" / "index.json").read_text()
    assert raw == json.dumps(json.loads(raw), indent=2, sort_keys=True) + "\n"


def test_store_concurrent_puts(tmp_path):
    store = ReplayStore(tmp_path / "store")
    cfg = replay_cfg()

    def put(i):
        p = bundle(user=f"text {i}")
        store.put(fingerprint(p, cfg), f"resp {i}", p, cfg, 0)

    threads = [threading.Thread(target=put, args=(i,)) for i in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(store) == 16


def test_complete_replay_reads_store(tmp_path):
    p = bundle()
    cfg = replay_cfg(store_path=str(tmp_path / "store"))
    store = ReplayStore(tmp_path / "store")
    fp = fingerprint(p, cfg, 2)
    store.put(fp, "stored text", p, cfg, 2)
    resp = complete(p, cfg, response_index=2)
    assert resp.text == "stored text"
    assert resp.request_fingerprint == fp
    assert resp.response_index == 2


def test_complete_replay_requires_store():
    with pytest.raises(GatewayError, match="store"):
        complete(bundle(), replay_cfg())


def test_complete_replay_missing_record(tmp_path):
    cfg = replay_cfg(store_path=str(tmp_path / "empty"))
    with pytest.raises(MissingRecordError):
        complete(bundle(), cfg)


class FakePost:
    """Scripted stand-in for requests.post."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = []

    def __call__(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome

        class Resp:
            status_code = outcome.get("status", 200)

            @property
            def text(self):
                return "body"

            def raise_for_status(self):
                if self.status_code >= 400:
                    raise AssertionError("unexpected raise_for_status")

            def json(self):
                return outcome["data"]

        return Resp()


def remote_cfg(attempts=3):
    return ModelConfig(
        provider_kind="remote_chat",
        model_name="live-model",
        retry=RetryPolicy(max_attempts=attempts, backoff_seconds=0.0),
    )


def ok_payload(text="<R>ok</R>"):
    return {
        "data": {
            "choices": [{"message": {"content": text}}],
            "usage": {"prompt_tokens": 5, "completion_tokens": 7},
        }
    }


def test_remote_complete_success(monkeypatch, tmp_path):
    monkeypatch.setenv("OPENAI_BASE_URL", "http://fake.test/v1")
    fake = FakePost([ok_payload()])
    monkeypatch.setattr("privacy_stories.gateway.requests.post", fake)
    resp = complete(bundle(), remote_cfg())
    assert resp.text == "<R>ok</R>"
    assert resp.attempt == 1
    assert resp.prompt_tokens == 5
    sent = fake.calls[0]["json"]
    assert sent["model"] == "live-model"
    assert sent["temperature"] == 0.7
    assert fake.calls[0]["url"].endswith("/chat/completions")


def test_remote_retries_on_throttle(monkeypatch):
    monkeypatch.setenv("OPENAI_BASE_URL", "http://fake.test/v1")
    fake = FakePost([{"status": 429, "data": {}}, ok_payload()])
    monkeypatch.setattr("privacy_stories.gateway.requests.post", fake)
    resp = complete(bundle(), remote_cfg())
    assert resp.attempt == 2
    assert len(fake.calls) == 2


def test_remote_gives_up_after_max_attempts(monkeypatch):
    monkeypatch.setenv("OPENAI_BASE_URL", "http://fake.test/v1")
    fake = FakePost([{"status": 500, "data": {}}] * 2)
    monkeypatch.setattr("privacy_stories.gateway.requests.post", fake)
    with pytest.raises(GatewayError, match="after 2 attempts"):
        complete(bundle(), remote_cfg(attempts=2))
    assert len(fake.calls) == 2


def test_remote_rejects_empty_text(monkeypatch):
    monkeypatch.setenv("OPENAI_BASE_URL", "http://fake.test/v1")
    fake = FakePost([ok_payload(text="   ")])
    monkeypatch.setattr("privacy_stories.gateway.requests.post", fake)
    with pytest.raises(GatewayError, match="empty response"):
        complete(bundle(), remote_cfg())


def test_remote_requires_base_url(monkeypatch):
    monkeypatch.delenv("OPENAI_BASE_URL", raising=False)
    with pytest.raises(GatewayError, match="OPENAI_BASE_URL"):
        complete(bundle(), remote_cfg())


def test_record_persists_under_replay_fingerprint(monkeypatch, tmp_path):
    """Recording with a replay config still hits the live endpoint once."""
    monkeypatch.setenv("OPENAI_BASE_URL", "http://fake.test/v1")
    fake = FakePost([ok_payload("fresh")])
    monkeypatch.setattr("privacy_stories.gateway.requests.post", fake)
    cfg = replay_cfg(store_path=str(tmp_path / "store"))
    p = bundle()
    resp = record(p, cfg, tmp_path / "store")
    assert resp.text == "fresh"
    # and the replay path can now serve it back without the network
    monkeypatch.setattr("privacy_stories.gateway.requests.post", None)
    again = complete(p, cfg)
    assert again.text == "fresh"
    assert again.request_fingerprint == resp.request_fingerprint


def test_response_json_round_trip():
    resp = RawResponse(
        document_id="d",
        request_fingerprint="f" * 64,
        text="body",
        response_index=1,
        attempt=2,
        latency_seconds=0.25,
        prompt_tokens=10,
        completion_tokens=20,
    )
    assert response_from_json(response_to_json(resp)) == resp
