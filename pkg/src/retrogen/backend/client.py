"""HTTP client for the /v1 inference protocol.

Mirrors the in-process backend surface (``MockBackend``), so orchestrator
code is agnostic to whether it holds a local backend or a remote one.
Network-level failures raise TransportError; well-formed error responses
raise ProtocolError with the server's error type.
"""

from __future__ import annotations

import threading
from typing import Sequence

import requests

from ..errors import ProtocolError, TransportError
from .protocol import LogitMap, ModelCapability, RawClause, SpanResult


class HTTPBackendClient:
    """Safe for concurrent in-flight requests (one session per thread)."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._local = threading.local()
        self._caps: dict[str, ModelCapability] | None = None
        self._caps_lock = threading.Lock()

    def _session(self) -> requests.Session:
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def _request(self, method: str, path: str, payload=None):
        try:
            resp = self._session().request(
                method, self.base_url + path, json=payload, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"backend unreachable at {self.base_url}: {exc}") from exc
        try:
            body = resp.json()
        except ValueError:
            raise ProtocolError("malformed_response", f"non-JSON response (HTTP {resp.status_code})") from None
        if isinstance(body, dict) and "error" in body:
            err = body["error"]
            raise ProtocolError(str(err.get("type", "unknown")), str(err.get("message", "")))
        if resp.status_code != 200:
            raise ProtocolError("malformed_response", f"HTTP {resp.status_code} without error body")
        return body

    # -- capabilities ---------------------------------------------------

    def models(self, refresh: bool = False) -> list[ModelCapability]:
        with self._caps_lock:
            if self._caps is None or refresh:
                body = self._request("GET", "/v1/models")
                caps = [ModelCapability.from_dict(d) for d in body]
                self._caps = {c.model_id: c for c in caps}
            return list(self._caps.values())

    def capability(self, model_id: str) -> ModelCapability:
        with self._caps_lock:
            cached = self._caps
        if cached is None or model_id not in cached:
            self.models(refresh=True)
            with self._caps_lock:
                cached = self._caps
        if cached is None or model_id not in cached:
            raise ProtocolError("unknown_model", f"no model named {model_id!r}")
        return cached[model_id]

    # -- protocol operations ---------------------------------------------

    def next_logits(
        self,
        model_id: str,
        tokens: Sequence[int],
        context_tokens: Sequence[int] | None = None,
        include_tokens: Sequence[int] | None = None,
    ) -> LogitMap:
        payload = {"model": model_id, "tokens": list(tokens)}
        if context_tokens is not None:
            payload["context_tokens"] = list(context_tokens)
        if include_tokens is not None:
            payload["include_tokens"] = list(include_tokens)
        body = self._request("POST", "/v1/logits", payload)
        lm = LogitMap.from_entries(body["entries"], bool(body["complete"]))
        if lm.complete:
            cap = self.capability(model_id)
            if len(lm) != cap.vocab_size:
                raise ProtocolError("malformed_response", "complete logit map does not cover the vocab")
        return lm

    def score_sequence(
        self,
        model_id: str,
        tokens: Sequence[int],
        context_tokens: Sequence[int] | None = None,
    ) -> list[float]:
        payload = {"model": model_id, "tokens": list(tokens)}
        if context_tokens is not None:
            payload["context_tokens"] = list(context_tokens)
        return [float(x) for x in self._request("POST", "/v1/score", payload)["logprobs"]]

    def tokenize(self, model_id: str, text: str) -> list[int]:
        return [int(t) for t in self._request("POST", "/v1/tokenize", {"model": model_id, "text": text})["tokens"]]

    def detokenize(self, model_id: str, tokens: Sequence[int]) -> str:
        return str(self._request("POST", "/v1/detokenize", {"model": model_id, "tokens": list(tokens)})["text"])

    def infer_clauses(self, model_id: str, text: str, relations: Sequence[str], count: int) -> list[RawClause]:
        body = self._request(
            "POST", "/v1/infer",
            {"model": model_id, "text": text, "relations": list(relations), "count": count},
        )
        return [RawClause(c["relation"], c["text"]) for c in body["clauses"]]

    def extract_span(self, model_id: str, context: str, question: str) -> SpanResult:
        body = self._request(
            "POST", "/v1/extract", {"model": model_id, "context": context, "question": question}
        )
        return SpanResult(str(body["answer"]), int(body["start"]), int(body["end"]), float(body["confidence"]))
