"""External embedding and chat providers, with offline-reproducible transports.

Wire contracts:
  - embedding HTTP: POST {"inputs": [...]} -> {"vectors": [[...], ...]}
  - chat HTTP:      POST {"prompt": ..., "temperature": ...} -> {"text": ...}
  - cache/fixture files are newline-delimited JSON; embedding entries are
    {"text_sha256": ..., "vector": [...]}, chat replay entries are
    {"prompt_sha256": ..., "text": ...} consumed FIFO per prompt

Bearer auth comes from the TUSLAB_API_TOKEN environment variable.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from collections import deque
from pathlib import Path

import requests

from .errors import ProviderContractError, ProviderError
from .util import sha256_hex

logger = logging.getLogger(__name__)

EMBED_URL_ENV = "TUSLAB_EMBED_URL"
CHAT_URL_ENV = "TUSLAB_CHAT_URL"
TOKEN_ENV = "TUSLAB_API_TOKEN"

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


def _post_json(url: str, payload: dict, retries: int, backoff: float, timeout: float) -> dict:
    """POST with bounded retries on transport errors and retryable statuses."""
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(TOKEN_ENV)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    last_error: Exception | None = None
    for attempt in range(retries):
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
            if resp.status_code in _RETRYABLE_STATUS:
                last_error = ProviderError(f"{url} returned {resp.status_code}")
            elif resp.status_code != 200:
                raise ProviderError(f"{url} returned {resp.status_code}: {resp.text[:200]}")
            else:
                return resp.json()
        except (requests.RequestException, ValueError) as exc:
            last_error = exc
        if attempt + 1 < retries and backoff > 0:
            time.sleep(backoff * (2**attempt))
    raise ProviderError(f"provider unreachable after {retries} attempts: {last_error}")


class EmbeddingProvider:
    """Maps texts to fixed-dimension vectors. Concrete transports below."""

    provider_id: str = "base"

    def embed(self, texts: list[str]) -> list[list[float]]:
        raise NotImplementedError


class FileEmbeddingProvider(EmbeddingProvider):
    """Serves vectors from a newline-delimited JSON fixture keyed by text sha256."""

    def __init__(self, path: str | Path, provider_id: str | None = None):
        self.path = Path(path)
        self.provider_id = provider_id or f"file-{self.path.stem}"
        self._by_hash: dict[str, list[float]] = {}
        if not self.path.exists():
            raise ProviderError(f"embedding fixture not found: {self.path}")
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                self._by_hash[entry["text_sha256"]] = entry["vector"]

    def embed(self, texts: list[str]) -> list[list[float]]:
        out = []
        for t in texts:
            h = sha256_hex(t)
            if h not in self._by_hash:
                raise ProviderError(f"no fixture vector for text hash {h[:12]}…")
            out.append(list(self._by_hash[h]))
        return out


class HttpEmbeddingProvider(EmbeddingProvider):
    def __init__(
        self,
        url: str | None = None,
        retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 60.0,
    ):
        self.url = url or os.environ.get(EMBED_URL_ENV)
        if not self.url:
            raise ProviderError(f"no embedding URL given and {EMBED_URL_ENV} is unset")
        self.provider_id = f"http-{sha256_hex(self.url)[:12]}"
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout

    def embed(self, texts: list[str]) -> list[list[float]]:
        body = _post_json(
            self.url, {"inputs": texts}, self.retries, self.backoff, self.timeout
        )
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderContractError(
                f"expected {len(texts)} vectors, got "
                f"{len(vectors) if isinstance(vectors, list) else type(vectors).__name__}"
            )
        return vectors


_cache_locks: dict[str, threading.Lock] = {}
_cache_locks_guard = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    key = str(path)
    with _cache_locks_guard:
        return _cache_locks.setdefault(key, threading.Lock())


def fetch_embeddings(
    texts: list[str],
    provider: EmbeddingProvider,
    cache_path: str | Path | None = None,
) -> list[list[float]]:
    """One vector per text, uniform dimension, cache-first.

    The cache file is NDJSON keyed by text sha256; name it per provider id so
    the effective key is (provider id, text hash). Reruns with a warm cache
    make zero provider calls.
    """
    hashes = [sha256_hex(t) for t in texts]
    cached: dict[str, list[float]] = {}
    if cache_path is not None:
        cache_path = Path(cache_path)
        if cache_path.exists():
            with open(cache_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        entry = json.loads(line)
                        cached[entry["text_sha256"]] = entry["vector"]

    missing: dict[str, str] = {}  # hash -> text, deduplicated
    for t, h in zip(texts, hashes):
        if h not in cached and h not in missing:
            missing[h] = t
    if missing:
        order = list(missing)
        vectors = provider.embed([missing[h] for h in order])
        if len(vectors) != len(order):
            raise ProviderContractError(
                f"provider returned {len(vectors)} vectors for {len(order)} texts"
            )
        for h, vec in zip(order, vectors):
            cached[h] = vec
        if cache_path is not None:
            lines = "".join(
                json.dumps({"text_sha256": h, "vector": cached[h]}) + "\n" for h in order
            )
            with _lock_for(cache_path):
                cache_path.parent.mkdir(parents=True, exist_ok=True)
                with open(cache_path, "a", encoding="utf-8") as fh:
                    fh.write(lines)

    result = [cached[h] for h in hashes]
    dims = {len(v) for v in result}
    if len(dims) > 1:
        raise ProviderContractError(f"mixed embedding dimensions in batch: {sorted(dims)}")
    return result


class ChatProvider:
    """Single-prompt chat completion. Concrete transports below."""

    def chat(self, prompt: str, temperature: float) -> str:
        raise NotImplementedError


class HttpChatProvider(ChatProvider):
    def __init__(
        self,
        url: str | None = None,
        retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 120.0,
    ):
        self.url = url or os.environ.get(CHAT_URL_ENV)
        if not self.url:
            raise ProviderError(f"no chat URL given and {CHAT_URL_ENV} is unset")
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout

    def chat(self, prompt: str, temperature: float) -> str:
        body = _post_json(
            self.url,
            {"prompt": prompt, "temperature": temperature},
            self.retries,
            self.backoff,
            self.timeout,
        )
        text = body.get("text")
        if not isinstance(text, str):
            raise ProviderContractError("chat response is missing a string 'text' field")
        return text


class ReplayChatProvider(ChatProvider):
    """Serves recorded responses FIFO per prompt hash; offline and deterministic."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.exists():
            raise ProviderError(f"replay fixture not found: {self.path}")
        self._queues: dict[str, deque[str]] = {}
        self._lock = threading.Lock()
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                self._queues.setdefault(entry["prompt_sha256"], deque()).append(entry["text"])
        self.calls = 0

    def chat(self, prompt: str, temperature: float) -> str:
        h = sha256_hex(prompt)
        with self._lock:
            queue = self._queues.get(h)
            if not queue:
                raise ProviderError(f"no recorded response left for prompt hash {h[:12]}…")
            self.calls += 1
            return queue.popleft()
