"""Client side of the expansion-term wire protocol.

Messages are line-delimited JSON with bit-exact field names:

    request  {"type": "generate", "input": <str>, "max_terms": <int>}
    response {"type": "terms", "terms": [{"term": <str>, "score": <num>}, ...]}
    request  {"type": "score", "query": <str>, "docs": [{"id": <str>, "text": <str>}, ...]}
    response {"type": "scores", "scores": [{"id": <str>, "score": <num>}, ...]}
    error    {"type": "error", "error": <str>}

Two transports speak the protocol: a child process over stdin/stdout, and
HTTP POST to a single endpoint. One connection carries one request at a
time (strict request/response alternation).
"""

from __future__ import annotations

import json
import os
import select
import shlex
import subprocess
import time
from dataclasses import dataclass

import requests

from .corpus import Document, Query
from .errors import ContractError, ProtocolError, TransportError

DEFAULT_TOKEN_BUDGET = 1024
DEFAULT_TIMEOUT = 30.0
ENDPOINT_ENV_VAR = "GQEPRF_GENERATOR_URL"


def build_input(query: Query, document: Document, budget: int = DEFAULT_TOKEN_BUDGET) -> str:
    """Concatenate query and document as ``query [SEP] document``.

    The document is truncated at whitespace-token granularity so the whole
    input stays within ``budget`` whitespace tokens; the query and the
    "[SEP]" marker are never truncated.
    """
    q_tokens = query.text.split()
    if budget < len(q_tokens) + 1:
        raise ContractError(
            f"token budget {budget} cannot hold the {len(q_tokens)}-token query plus [SEP]")
    doc_budget = budget - len(q_tokens) - 1
    doc_tokens = document.text.split()
    if len(doc_tokens) > doc_budget:
        doc_text = " ".join(doc_tokens[:doc_budget])
    else:
        doc_text = document.text
    return f"{query.text} [SEP] {doc_text}"


@dataclass(frozen=True)
class GenRequest:
    input_text: str
    max_terms: int
    token_budget: int = DEFAULT_TOKEN_BUDGET

    def __post_init__(self):
        if self.max_terms < 1:
            raise ContractError(f"max_terms must be >= 1, got {self.max_terms}")
        n_tokens = len(self.input_text.split())
        if n_tokens > self.token_budget:
            raise ContractError(
                f"input has {n_tokens} whitespace tokens, over the budget of {self.token_budget}")

    def to_message(self) -> dict:
        return {"type": "generate", "input": self.input_text, "max_terms": self.max_terms}


@dataclass(frozen=True)
class GenResponse:
    terms: tuple  # of (term, score) pairs

    def to_message(self) -> dict:
        return {"type": "terms",
                "terms": [{"term": t, "score": s} for t, s in self.terms]}


def parse_terms_response(message, max_terms: int) -> GenResponse:
    """Validate a raw response message against the GenResponse invariants."""
    if not isinstance(message, dict) or "type" not in message:
        raise ProtocolError("response is not a protocol message", payload=message)
    if message["type"] == "error":
        raise ProtocolError(f"generator error: {message.get('error')}", payload=message)
    if message["type"] != "terms":
        raise ProtocolError(f"unexpected message type {message['type']!r}", payload=message)
    raw = message.get("terms")
    if not isinstance(raw, list):
        raise ProtocolError("'terms' must be a list", payload=message)
    terms = []
    seen = set()
    for item in raw:
        if (not isinstance(item, dict) or not isinstance(item.get("term"), str)
                or not item["term"] or not isinstance(item.get("score"), (int, float))):
            raise ProtocolError(f"malformed term entry {item!r}", payload=message)
        if item["term"] in seen:
            raise ProtocolError(f"duplicate term {item['term']!r} in response", payload=message)
        seen.add(item["term"])
        terms.append((item["term"], float(item["score"])))
    if len(terms) > max_terms:
        raise ProtocolError(
            f"response has {len(terms)} terms, more than the requested {max_terms}",
            payload=message)
    return GenResponse(tuple(terms))


def parse_scores_response(message) -> dict[str, float]:
    if not isinstance(message, dict) or "type" not in message:
        raise ProtocolError("response is not a protocol message", payload=message)
    if message["type"] == "error":
        raise ProtocolError(f"scorer error: {message.get('error')}", payload=message)
    if message["type"] != "scores":
        raise ProtocolError(f"unexpected message type {message['type']!r}", payload=message)
    raw = message.get("scores")
    if not isinstance(raw, list):
        raise ProtocolError("'scores' must be a list", payload=message)
    scores: dict[str, float] = {}
    for item in raw:
        if (not isinstance(item, dict) or not isinstance(item.get("id"), str)
                or not isinstance(item.get("score"), (int, float))):
            raise ProtocolError(f"malformed score entry {item!r}", payload=message)
        if item["id"] in scores:
            raise ProtocolError(f"duplicate doc id {item['id']!r} in response", payload=message)
        scores[item["id"]] = float(item["score"])
    return scores


class StdioConnection:
    """Talk the protocol to a child process over its stdin/stdout."""

    def __init__(self, argv, timeout: float = DEFAULT_TIMEOUT):
        self.timeout = timeout
        self._proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0)
        self._buf = bytearray()

    def request(self, message: dict, timeout: float | None = None) -> dict:
        timeout = self.timeout if timeout is None else timeout
        line = json.dumps(message, ensure_ascii=False) + "\n"
        try:
            self._proc.stdin.write(line.encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"failed to send request: {exc}")
        raw = self._read_line(timeout)
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise ProtocolError("response is not valid JSON", payload=bytes(raw))

    def _read_line(self, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TransportError("timed out waiting for response",
                                     payload=bytes(self._buf))
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise TransportError("generator closed the stream mid-response",
                                     payload=bytes(self._buf))
            self._buf.extend(chunk)
        line, _, rest = bytes(self._buf).partition(b"\n")
        self._buf = bytearray(rest)
        return line

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=3)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class HttpConnection:
    """POST protocol messages as JSON bodies to a single endpoint."""

    def __init__(self, url: str, timeout: float = DEFAULT_TIMEOUT):
        self.url = url
        self.timeout = timeout
        self._session = requests.Session()

    def request(self, message: dict, timeout: float | None = None) -> dict:
        timeout = self.timeout if timeout is None else timeout
        try:
            resp = self._session.post(self.url, json=message, timeout=timeout)
        except requests.RequestException as exc:
            raise TransportError(f"HTTP request failed: {exc}")
        if resp.status_code != 200:
            raise TransportError(f"HTTP status {resp.status_code}", payload=resp.text)
        try:
            return resp.json()
        except ValueError:
            raise ProtocolError("response body is not valid JSON", payload=resp.text)

    def close(self) -> None:
        self._session.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(endpoint: str, timeout: float = DEFAULT_TIMEOUT):
    """Open a connection from an endpoint string.

    ``http://`` / ``https://`` URLs use the HTTP transport; ``stdio:CMD``
    spawns CMD as a child process speaking JSON lines on stdin/stdout.
    """
    if endpoint.startswith(("http://", "https://")):
        return HttpConnection(endpoint, timeout=timeout)
    if endpoint.startswith("stdio:"):
        argv = shlex.split(endpoint[len("stdio:"):])
        if not argv:
            raise ContractError("stdio endpoint has an empty command")
        return StdioConnection(argv, timeout=timeout)
    raise ContractError(
        f"cannot interpret endpoint {endpoint!r}; use http(s)://... or stdio:COMMAND")


def request_terms(connection, req: GenRequest, timeout: float | None = None) -> GenResponse:
    """One generate request, one validated response."""
    message = connection.request(req.to_message(), timeout=timeout)
    return parse_terms_response(message, req.max_terms)


def request_scores(connection, query_text: str, docs, timeout: float | None = None) -> dict[str, float]:
    """One score request for the external reranking scorer."""
    message = connection.request(
        {"type": "score", "query": query_text,
         "docs": [{"id": doc_id, "text": text} for doc_id, text in docs]},
        timeout=timeout)
    return parse_scores_response(message)
