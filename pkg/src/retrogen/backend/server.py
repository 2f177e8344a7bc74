"""HTTP/1.1 + JSON server exposing a backend under /v1.

Endpoints (all numbers IEEE-754 doubles, token ids unsigned 32-bit):

    POST /v1/logits     {"model","tokens","context_tokens"?,"include_tokens"?}
                        -> {"entries":[[id,logit],...],"complete":bool}
    POST /v1/score      {"model","tokens","context_tokens"?} -> {"logprobs":[...]}
    POST /v1/tokenize   {"model","text"} -> {"tokens":[...]}
    POST /v1/detokenize {"model","tokens"} -> {"text":...}
    POST /v1/infer      {"model","text","relations","count"} -> {"clauses":[...]}
    POST /v1/extract    {"model","context","question"} -> {"answer","start","end","confidence"}
    GET  /v1/models     -> [capability, ...]

Handlers share no mutable state, so concurrent requests are independent.
Error bodies are {"error":{"type":...,"message":...}} with status 404 for
unknown models/paths and 400 for everything else the client got wrong.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import ProtocolError

_MAX_BODY = 16 * 1024 * 1024


def _dumps(payload) -> bytes:
    # sort_keys + fixed separators keep responses byte-identical everywhere
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "retrogen-backend"

    def log_message(self, fmt, *args):  # silence per-request stderr noise
        if self.server.verbose:  # type: ignore[attr-defined]
            super().log_message(fmt, *args)

    @property
    def backend(self):
        return self.server.backend  # type: ignore[attr-defined]

    def _reply(self, status: int, payload) -> None:
        body = _dumps(payload)
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _reply_error(self, status: int, kind: str, message: str) -> None:
        self._reply(status, {"error": {"type": kind, "message": message}})

    def do_GET(self):
        if self.path == "/v1/models":
            self._reply(200, [cap.to_dict() for cap in self.backend.models()])
        else:
            self._reply_error(404, "not_found", f"no such endpoint: {self.path}")

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length", "0"))
            if length > _MAX_BODY:
                self._reply_error(400, "bad_request", "body too large")
                return
            try:
                req = json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                self._reply_error(400, "bad_request", "body is not valid JSON")
                return
            if not isinstance(req, dict):
                self._reply_error(400, "bad_request", "body must be a JSON object")
                return
            handler = {
                "/v1/logits": self._logits,
                "/v1/score": self._score,
                "/v1/tokenize": self._tokenize,
                "/v1/detokenize": self._detokenize,
                "/v1/infer": self._infer,
                "/v1/extract": self._extract,
            }.get(self.path)
            if handler is None:
                self._reply_error(404, "not_found", f"no such endpoint: {self.path}")
                return
            try:
                self._reply(200, handler(req))
            except ProtocolError as exc:
                status = 404 if exc.kind == "unknown_model" else 400
                self._reply_error(status, exc.kind, str(exc))
            except (KeyError, TypeError, ValueError) as exc:
                self._reply_error(400, "bad_request", f"malformed request: {exc}")
        except BrokenPipeError:  # client went away mid-response
            pass

    # -- endpoint bodies --------------------------------------------------

    def _logits(self, req: dict) -> dict:
        lm = self.backend.next_logits(
            req["model"],
            [int(t) for t in req["tokens"]],
            context_tokens=None if req.get("context_tokens") is None else [int(t) for t in req["context_tokens"]],
            include_tokens=None if req.get("include_tokens") is None else [int(t) for t in req["include_tokens"]],
        )
        return {"entries": lm.to_entries(), "complete": lm.complete}

    def _score(self, req: dict) -> dict:
        lp = self.backend.score_sequence(
            req["model"],
            [int(t) for t in req["tokens"]],
            context_tokens=None if req.get("context_tokens") is None else [int(t) for t in req["context_tokens"]],
        )
        return {"logprobs": lp}

    def _tokenize(self, req: dict) -> dict:
        return {"tokens": self.backend.tokenize(req["model"], req["text"])}

    def _detokenize(self, req: dict) -> dict:
        return {"text": self.backend.detokenize(req["model"], [int(t) for t in req["tokens"]])}

    def _infer(self, req: dict) -> dict:
        clauses = self.backend.infer_clauses(
            req["model"], req["text"], [str(r) for r in req["relations"]], int(req["count"])
        )
        return {"clauses": [{"relation": c.relation, "text": c.text} for c in clauses]}

    def _extract(self, req: dict) -> dict:
        span = self.backend.extract_span(req["model"], req["context"], req["question"])
        return {"answer": span.answer, "start": span.start, "end": span.end, "confidence": span.confidence}


class BackendServer:
    """Thin lifecycle wrapper around ThreadingHTTPServer."""

    def __init__(self, backend, host: str = "127.0.0.1", port: int = 0, verbose: bool = False):
        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.backend = backend  # type: ignore[attr-defined]
        self._httpd.verbose = verbose  # type: ignore[attr-defined]
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start_in_thread(self) -> "BackendServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def run_forever(self) -> None:
        try:
            self._httpd.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            self._httpd.server_close()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self._httpd.server_close()

    def __enter__(self) -> "BackendServer":
        return self.start_in_thread()

    def __exit__(self, *exc) -> None:
        self.shutdown()
