"""Generations for rendered prompts: OpenAI-compatible HTTP client and mock models."""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional
from urllib.parse import urlparse

import httpx

from .augmentation import RenameAssignment, apply_to_state, stable_index
from .corpus import Corpus
from .state_codec import serialize_state

log = logging.getLogger(__name__)

MOCK_KINDS = ("oracle", "empty", "corruptor", "garbler")
CORRUPTED = "CORRUPTED"
GARBLE_TEXT = "I could not work out the dialogue state for this conversation, sorry."

# HTTP statuses worth retrying; everything else 4xx is a hard failure
_TRANSIENT_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InferenceConfig:
    endpoint_url: str
    model_name: str = "default"
    max_new_tokens: int = 256
    temperature: float = 0.0
    request_timeout: float = 60.0
    max_retries: int = 3
    max_in_flight: int = 4
    backoff_base: float = 0.5
    backoff_max: float = 30.0
    api_key_env: str = "OPENAI_API_KEY"

    def validate(self) -> None:
        url = urlparse(self.endpoint_url)
        if url.scheme not in ("http", "https") or not url.netloc:
            raise ConfigError(f"endpoint_url must be an http(s) URL, got {self.endpoint_url!r}")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.request_timeout <= 0:
            raise ConfigError("request_timeout must be positive")

    @property
    def chat_url(self) -> str:
        url = self.endpoint_url.rstrip("/")
        if url.endswith("/completions"):
            return url
        return url + "/chat/completions"


@dataclass(frozen=True)
class Generation:
    sample_id: str
    generation: str
    error: Optional[str] = None
    attempts: int = 1

    def to_dict(self) -> dict:
        rec = {"sample_id": self.sample_id, "generation": self.generation}
        if self.error:
            rec["error"] = self.error
        rec["attempts"] = self.attempts
        return rec


class _Transient(Exception):
    pass


def _request_body(config: InferenceConfig, prompt: str) -> dict:
    body = {
        "model": config.model_name,
        "max_tokens": config.max_new_tokens,
        "temperature": config.temperature,
    }
    if config.chat_url.endswith("/chat/completions"):
        body["messages"] = [{"role": "user", "content": prompt}]
    else:
        body["prompt"] = prompt
    return body


def _extract_text(payload: dict) -> str:
    choice = payload["choices"][0]
    if "message" in choice:
        return choice["message"].get("content") or ""
    return choice.get("text") or ""


def _call_once(client: httpx.Client, config: InferenceConfig, prompt: str) -> str:
    try:
        resp = client.post(config.chat_url, json=_request_body(config, prompt))
    except httpx.TransportError as e:
        raise _Transient(f"{type(e).__name__}: {e}") from e
    if resp.status_code in _TRANSIENT_STATUS:
        raise _Transient(f"HTTP {resp.status_code}")
    resp.raise_for_status()
    try:
        return _extract_text(resp.json())
    except (ValueError, KeyError, IndexError, TypeError) as e:
        raise RuntimeError(f"unexpected response body: {e}") from e


def _generate(client, config: InferenceConfig, sample_id: str, prompt: str) -> Generation:
    attempt = 0
    while True:
        attempt += 1
        try:
            text = _call_once(client, config, prompt)
            return Generation(sample_id, text, attempts=attempt)
        except _Transient as e:
            if attempt > config.max_retries:
                log.warning("%s: giving up after %d attempts (%s)", sample_id, attempt, e)
                return Generation(sample_id, "", f"retries exhausted: {e}", attempt)
            delay = min(config.backoff_max, config.backoff_base * 2 ** (attempt - 1))
            log.info("%s: attempt %d failed (%s), retrying in %.2fs", sample_id, attempt, e, delay)
            time.sleep(delay)
        except Exception as e:  # hard failure: record, never abort the run
            log.warning("%s: request failed (%s)", sample_id, e)
            return Generation(sample_id, "", str(e), attempt)


def infer_remote(config: InferenceConfig, prompts: Iterable, client: Optional[httpx.Client] = None) -> Iterator[Generation]:
    """Stream generations for ``prompts`` with at most ``max_in_flight`` open requests.

    ``prompts`` yields objects with ``sample_id`` and ``text`` attributes (or
    ``(sample_id, text)`` pairs). Results come back in completion order.
    """
    config.validate()
    headers = {}
    key = os.environ.get(config.api_key_env)
    if key:
        headers["Authorization"] = f"Bearer {key}"
    own_client = client is None
    if own_client:
        limits = httpx.Limits(max_connections=config.max_in_flight, max_keepalive_connections=config.max_in_flight)
        client = httpx.Client(timeout=config.request_timeout, headers=headers, limits=limits)
    try:
        with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
            pending = set()
            for item in prompts:
                sample_id, text = (item.sample_id, item.text) if hasattr(item, "text") else item
                if len(pending) >= config.max_in_flight:
                    done, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in done:
                        yield fut.result()
                pending.add(pool.submit(_generate, client, config, sample_id, text))
            while pending:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    yield fut.result()
    finally:
        if own_client:
            client.close()


@dataclass(frozen=True)
class MockSpec:
    kind: str = "oracle"
    corrupt_rate: float = 0.5
    seed: int = 42

    def __post_init__(self):
        if self.kind not in MOCK_KINDS:
            raise ConfigError(f"unknown mock kind {self.kind!r}")
        if not 0.0 <= self.corrupt_rate <= 1.0:
            raise ConfigError("corrupt_rate must be in [0, 1]")


def _corrupt(spec: MockSpec, sample_id: str, state: dict) -> dict:
    if not state:
        return state
    rng = random.Random(stable_index(spec.seed, sample_id, "corrupt", 2**63))
    if rng.random() >= spec.corrupt_rate:
        return state
    keys = sorted(state)
    victim = keys[rng.randrange(len(keys))]
    return {**state, victim: CORRUPTED}


def infer_mock(
    spec: MockSpec,
    corpus: Corpus,
    assignments: Optional[Mapping[str, RenameAssignment]] = None,
) -> Iterator[Generation]:
    """Deterministic stand-in models over the reference states of ``corpus``."""
    for s in corpus:
        if spec.kind == "garbler":
            yield Generation(s.sample_id, GARBLE_TEXT)
            continue
        if spec.kind == "empty":
            yield Generation(s.sample_id, "{}")
            continue
        state = dict(s.state)
        if assignments is not None:
            state = apply_to_state(assignments[s.sample_id], state)
        if spec.kind == "corruptor":
            state = _corrupt(spec, s.sample_id, state)
        yield Generation(s.sample_id, serialize_state(state))


class JsonlAppender:
    """Thread-safe append-only writer for line-delimited records."""

    def __init__(self, path, mode: str = "a"):
        self._fh = open(path, mode, encoding="utf-8")
        self._lock = threading.Lock()

    def write(self, line: str) -> None:
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
