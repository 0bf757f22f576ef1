"""Chat-completion gateway: a live HTTP client plus a record/replay store.

Every request is keyed by a fingerprint of (system text, user text, model,
temperature, response index). Replay runs look responses up by fingerprint,
which makes the downstream pipeline fully deterministic without forcing the
sampling temperature to zero.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import requests

from .prompts import PromptBundle

DEFAULT_TEMPERATURE = 0.7


class GatewayError(RuntimeError):
    pass


class MissingRecordError(GatewayError):
    def __init__(self, fingerprint: str):
        super().__init__(f"no recorded response for fingerprint {fingerprint}")
        self.fingerprint = fingerprint


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_seconds: float = 1.0


@dataclass(frozen=True)
class ModelConfig:
    provider_kind: str = "replay"  # "remote_chat" or "replay"
    model_name: str = "default"
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = 2048
    base_url_env: str = "OPENAI_BASE_URL"
    api_key_env: str = "OPENAI_API_KEY"
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    store_path: Optional[str] = None

    def __post_init__(self):
        if self.provider_kind not in ("remote_chat", "replay"):
            raise ValueError(f"unknown provider kind {self.provider_kind!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class RawResponse:
    document_id: str
    request_fingerprint: str
    text: str
    response_index: int = 0
    attempt: int = 1
    latency_seconds: Optional[float] = None
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None


def fingerprint(p: PromptBundle, cfg: ModelConfig, response_index: int = 0) -> str:
    """Stable request key: prompt text, model, temperature, and sample index."""
    payload = json.dumps(
        {
            "system": p.system_text,
            "user": p.user_text,
            "model": cfg.model_name,
            "temperature": repr(cfg.temperature),
            "index": response_index,
        },
        sort_keys=True,
        ensure_ascii=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReplayStore:
    """Directory of fingerprint-named response text files plus an index.

    Reads are lock-free; writes are serialized and rewrite the index
    atomically, so the store tolerates concurrent readers during a recording
    run.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    @property
    def index_path(self) -> Path:
        return self.root / "index.json"

    def _record_path(self, fp: str) -> Path:
        return self.root / f"{fp}.txt"

    def load_index(self) -> dict:
        if not self.index_path.exists():
            return {"records": {}}
        return json.loads(self.index_path.read_text(encoding="utf-8"))

    def __len__(self) -> int:
        return len(self.load_index()["records"])

    def has(self, fp: str) -> bool:
        return self._record_path(fp).exists()

    def get(self, fp: str) -> str:
        path = self._record_path(fp)
        if not path.exists():
            raise MissingRecordError(fp)
        return path.read_text(encoding="utf-8")

    def meta(self, fp: str) -> dict:
        entry = self.load_index()["records"].get(fp)
        if entry is None:
            raise MissingRecordError(fp)
        return entry

    def put(
        self,
        fp: str,
        text: str,
        p: PromptBundle,
        cfg: ModelConfig,
        response_index: int,
    ) -> None:
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            self._record_path(fp).write_text(text, encoding="utf-8")
            index = self.load_index()
            index["records"][fp] = {
                "document_id": p.document_id,
                "response_index": response_index,
                "model_name": cfg.model_name,
                "temperature": cfg.temperature,
                "system_text": p.system_text,
                "user_text": p.user_text,
            }
            tmp = self.index_path.with_suffix(".json.tmp")
            tmp.write_text(
                json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            tmp.replace(self.index_path)


class RemoteChatClient:
    """Minimal chat-completions client over the prevailing JSON wire schema."""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self.base_url = os.environ.get(cfg.base_url_env, "").rstrip("/")
        self.api_key = os.environ.get(cfg.api_key_env, "")
        if not self.base_url:
            raise GatewayError(f"remote chat provider needs {cfg.base_url_env} set")

    def complete(self, p: PromptBundle) -> tuple[str, int, float, dict]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.cfg.model_name,
            "messages": [
                {"role": "system", "content": p.system_text},
                {"role": "user", "content": p.user_text},
            ],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        }
        policy = self.cfg.retry
        last_error: Exception | None = None
        for attempt in range(1, policy.max_attempts + 1):
            started = time.monotonic()
            try:
                resp = requests.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=120,
                )
                if resp.status_code == 429 or resp.status_code >= 500:
                    raise GatewayError(f"retryable status {resp.status_code}: {resp.text[:200]}")
                resp.raise_for_status()
                data = resp.json()
                text = data["choices"][0]["message"]["content"] or ""
                usage = data.get("usage", {})
                return text, attempt, time.monotonic() - started, usage
            except (requests.RequestException, GatewayError, KeyError, IndexError) as exc:
                last_error = exc
                if attempt < policy.max_attempts:
                    time.sleep(policy.backoff_seconds * (2 ** (attempt - 1)))
        raise GatewayError(
            f"chat request for document {p.document_id} failed after "
            f"{policy.max_attempts} attempts: {last_error}"
        )


def complete(
    p: PromptBundle,
    cfg: ModelConfig,
    response_index: int = 0,
    store: Optional[ReplayStore] = None,
) -> RawResponse:
    """Return the model text for a prompt, from replay or a live endpoint."""
    fp = fingerprint(p, cfg, response_index)
    if cfg.provider_kind == "replay":
        if store is None:
            if not cfg.store_path:
                raise GatewayError("replay provider needs a store path")
            store = ReplayStore(cfg.store_path)
        text = store.get(fp)
        return RawResponse(
            document_id=p.document_id,
            request_fingerprint=fp,
            text=text,
            response_index=response_index,
        )

    client = RemoteChatClient(cfg)
    text, attempt, latency, usage = client.complete(p)
    if not text.strip():
        raise GatewayError(f"empty response text for document {p.document_id} ({fp})")
    return RawResponse(
        document_id=p.document_id,
        request_fingerprint=fp,
        text=text,
        response_index=response_index,
        attempt=attempt,
        latency_seconds=latency,
        prompt_tokens=usage.get("prompt_tokens"),
        completion_tokens=usage.get("completion_tokens"),
    )


def record(
    p: PromptBundle,
    cfg: ModelConfig,
    store: ReplayStore | str | Path,
    response_index: int = 0,
) -> RawResponse:
    """Perform a live call and persist the response under its fingerprint."""
    if not isinstance(store, ReplayStore):
        store = ReplayStore(store)
    live_cfg = cfg if cfg.provider_kind == "remote_chat" else ModelConfig(
        provider_kind="remote_chat",
        model_name=cfg.model_name,
        temperature=cfg.temperature,
        max_output_tokens=cfg.max_output_tokens,
        base_url_env=cfg.base_url_env,
        api_key_env=cfg.api_key_env,
        retry=cfg.retry,
    )
    response = complete(p, live_cfg, response_index)
    store.put(response.request_fingerprint, response.text, p, cfg, response_index)
    return response


def response_to_json(r: RawResponse) -> dict:
    return {
        "document_id": r.document_id,
        "request_fingerprint": r.request_fingerprint,
        "text": r.text,
        "response_index": r.response_index,
        "attempt": r.attempt,
        "latency_seconds": r.latency_seconds,
        "prompt_tokens": r.prompt_tokens,
        "completion_tokens": r.completion_tokens,
    }


def response_from_json(raw: dict) -> RawResponse:
    return RawResponse(
        document_id=raw["document_id"],
        request_fingerprint=raw["request_fingerprint"],
        text=raw["text"],
        response_index=raw.get("response_index", 0),
        attempt=raw.get("attempt", 1),
        latency_seconds=raw.get("latency_seconds"),
        prompt_tokens=raw.get("prompt_tokens"),
        completion_tokens=raw.get("completion_tokens"),
    )
