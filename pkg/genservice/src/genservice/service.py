"""Serve expansion-term generation over the JSON wire protocol.

Messages (one JSON object per line on stdio, or HTTP POST bodies on the
single /generate endpoint):

    {"type": "generate", "input": "<query> [SEP] <document>", "max_terms": 10}
    -> {"type": "terms", "terms": [{"term": ..., "score": ...}, ...]}

Inputs are re-truncated to the model's 1024-token limit regardless of any
client-side truncation. Each decoded whitespace term is scored with the
exponentiated mean log-probability of its subword tokens; duplicates keep
their best score. Decoding is greedy by default, so responses are
deterministic for a given checkpoint.
"""

from __future__ import annotations

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch

from .model import MAX_INPUT_TOKENS, load_checkpoint
from .vocab import special_ids


class GenerationService:
    def __init__(self, generator, tokenizer, max_new_tokens: int = 12,
                 min_new_tokens: int = 2, num_beams: int = 1):
        self.generator = generator
        self.tokenizer = tokenizer
        self.max_new_tokens = max_new_tokens
        self.min_new_tokens = min(min_new_tokens, max_new_tokens)
        self.num_beams = num_beams
        self._specials = special_ids(tokenizer)
        # never emit structural tokens as terms; eos stays allowed so the
        # model can stop early once trained
        self._suppressed = sorted(self._specials - {tokenizer.eos_token_id})
        self._lock = threading.Lock()

    @classmethod
    def from_checkpoint(cls, path, **kwargs) -> "GenerationService":
        generator, _, tokenizer, _ = load_checkpoint(path)
        generator.eval()
        return cls(generator, tokenizer, **kwargs)

    def generate_terms(self, text: str, max_terms: int) -> list[tuple[str, float]]:
        encoded = self.tokenizer(text, return_tensors="pt", truncation=True,
                                 max_length=MAX_INPUT_TOKENS)
        was_training = self.generator.training
        self.generator.eval()
        try:
            with torch.no_grad():
                out = self.generator.generate(
                    **encoded,
                    max_new_tokens=self.max_new_tokens,
                    min_new_tokens=self.min_new_tokens,
                    num_beams=self.num_beams,
                    do_sample=False,
                    suppress_tokens=self._suppressed,
                    output_scores=True,
                    return_dict_in_generate=True,
                )
                log_probs = self.generator.compute_transition_scores(
                    out.sequences, out.scores, normalize_logits=True)[0]
        finally:
            if was_training:
                self.generator.train()

        generated = out.sequences[0][-len(log_probs):]
        best: dict[str, float] = {}
        for token_id, log_prob in zip(generated.tolist(), log_probs.tolist()):
            if token_id in self._specials:
                continue
            # word-level vocabulary: one subword token per whitespace term
            term = self.tokenizer.convert_ids_to_tokens(token_id)
            if not term:
                continue
            score = float(torch.exp(torch.tensor(log_prob)))
            if term not in best or score > best[term]:
                best[term] = score
        ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:max_terms]

    def handle(self, message) -> dict:
        if not isinstance(message, dict) or message.get("type") != "generate":
            kind = message.get("type") if isinstance(message, dict) else type(message).__name__
            return {"type": "error", "error": f"unsupported message: {kind!r}"}
        if not isinstance(message.get("input"), str):
            return {"type": "error", "error": "'input' must be a string"}
        max_terms = message.get("max_terms")
        if not isinstance(max_terms, int) or max_terms < 1:
            return {"type": "error", "error": "'max_terms' must be a positive integer"}
        try:
            with self._lock:  # one decode at a time on the shared model
                terms = self.generate_terms(message["input"], max_terms)
        except Exception as exc:
            return {"type": "error", "error": f"decode failed: {exc}"}
        return {"type": "terms", "terms": [{"term": t, "score": s} for t, s in terms]}

    def serve_stdio(self, stdin=None, stdout=None) -> None:
        stdin = stdin if stdin is not None else sys.stdin
        stdout = stdout if stdout is not None else sys.stdout
        for line in stdin:
            if not line.strip():
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError:
                response = {"type": "error", "error": "invalid JSON"}
            else:
                response = self.handle(message)
            stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
            stdout.flush()

    def serve_http(self, host: str = "127.0.0.1", port: int = 8080):
        service = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                if self.path != "/generate":
                    self.send_error(404)
                    return
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                try:
                    message = json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    response = {"type": "error", "error": "invalid JSON"}
                else:
                    response = service.handle(message)
                body = json.dumps(response, ensure_ascii=False).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, fmt, *args):
                pass

        server = ThreadingHTTPServer((host, port), Handler)
        print(f"genservice listening on http://{host}:{server.server_address[1]}/generate",
              file=sys.stderr)
        return server
