"""Batch experiment plumbing: configuration then expand -> retrieve -> rerank.

Queries are processed concurrently up to a worker count, but the output run
is assembled in input query order, so the same inputs always produce the
same run file regardless of worker count.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

from .analysis import AnalyzerConfig, analyze, load_stopwords
from .corpus import Document, Query
from .errors import ContractError, GqeprfError
from .expansion import (FeedbackSet, MockGenerator, generative_expand, get_feedback,
                        prf_offer_weight_expand, reformulate, rm3_expand)
from .genclient import DEFAULT_TIMEOUT, connect
from .index import InvertedIndex
from .rerank import Bm25Rescorer, ExternalScorer, RerankConfig, rerank
from .retrieval import Bm25Params, ScoredDoc, WeightedQuery, search

EXPANSION_METHODS = ("none", "rm3", "prf", "gqe")


@dataclass
class PipelineConfig:
    """Everything a batch run needs; see ``load_config_file`` for the file form."""

    k1: float = 0.9
    b: float = 0.4
    depth: int = 1000
    method: str = "none"
    fb_docs: int = 10
    fb_terms: int = 10
    orig_weight: float = 0.5
    n: int = 7
    token_budget: int = 1024
    generator: str = "mock"
    timeout: float = DEFAULT_TIMEOUT
    rerank_scorer: str = "none"   # none | identity | bm25_rescore | external
    rerank_depth: int = 50
    scorer_endpoint: str = ""
    threshold: int = 1
    ndcg_cutoff: int = 20
    workers: int = 1
    stopwords_path: str = ""
    stemmer: str = "porter"

    def __post_init__(self):
        if self.method not in EXPANSION_METHODS:
            raise ContractError(f"unknown expansion method {self.method!r}")
        if self.workers < 1:
            raise ContractError("workers must be >= 1")

    def analyzer(self) -> AnalyzerConfig:
        if self.stopwords_path:
            return AnalyzerConfig(stopwords=load_stopwords(self.stopwords_path),
                                  stemmer=self.stemmer)
        return AnalyzerConfig(stemmer=self.stemmer)

    def bm25(self) -> Bm25Params:
        return Bm25Params(k1=self.k1, b=self.b)

    def run_tag(self) -> str:
        if self.method in ("prf", "gqe"):
            return f"{self.method}-n{self.n}"
        return self.method


def load_config_file(path) -> dict:
    """Parse the ``key = value`` config file into typed overrides."""
    types = {f.name: f.type for f in fields(PipelineConfig)}
    casts = {"float": float, "int": int, "str": str}
    overrides = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ContractError(f"{path} line {line_no}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in types:
                raise ContractError(f"{path} line {line_no}: unknown key {key!r}")
            overrides[key] = casts[types[key]](value.strip())
    return overrides


def make_config(file_path=None, **flag_overrides) -> PipelineConfig:
    """Built-in defaults, then config file, then explicit flags."""
    cfg = PipelineConfig()
    if file_path:
        cfg = replace(cfg, **load_config_file(file_path))
    flags = {k: v for k, v in flag_overrides.items() if v is not None}
    return replace(cfg, **flags)


class SearchEngine:
    """An index plus the document store and settings needed by the pipeline."""

    def __init__(self, index: InvertedIndex, documents: dict[str, Document] | None,
                 config: PipelineConfig):
        self.index = index
        self.documents = documents or {}
        self.config = config
        self.analyzer = config.analyzer()
        self.params = config.bm25()
        self._local = threading.local()
        self._connections = []
        self._conn_lock = threading.Lock()

    def _open(self, endpoint: str):
        conn = connect(endpoint, timeout=self.config.timeout)
        with self._conn_lock:
            self._connections.append(conn)
        return conn

    def close(self) -> None:
        """Close every connection opened by any worker thread."""
        with self._conn_lock:
            connections, self._connections = self._connections, []
        for conn in connections:
            conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _generator(self):
        """Per-thread generator connection (one outstanding request each)."""
        conn = getattr(self._local, "generator", None)
        if conn is None:
            if self.config.generator == "mock":
                conn = MockGenerator(self.index, self.analyzer)
            else:
                conn = self._open(self.config.generator)
            self._local.generator = conn
        return conn

    def _scorer(self):
        kind = self.config.rerank_scorer
        if kind in ("none", "identity"):
            return None
        if kind == "bm25_rescore":
            return Bm25Rescorer(self.index, self.analyzer, self.params)
        if kind == "external":
            conn = getattr(self._local, "scorer_conn", None)
            if conn is None:
                if not self.config.scorer_endpoint:
                    raise ContractError("external rerank scorer needs scorer_endpoint")
                conn = self._open(self.config.scorer_endpoint)
                self._local.scorer_conn = conn
            return ExternalScorer(conn, self.documents, timeout=self.config.timeout)
        raise ContractError(f"unknown rerank scorer {kind!r}")

    def feedback(self, query: Query) -> FeedbackSet:
        return get_feedback(self.index, self.documents, query, self.config.fb_docs,
                            self.analyzer, self.params)

    def search_text(self, text: str, depth: int) -> list[ScoredDoc]:
        tokens = analyze(text, self.analyzer)
        if not tokens:
            return []
        return search(self.index, WeightedQuery.from_tokens(tokens), depth, self.params)

    def run_query(self, query: Query) -> list[ScoredDoc]:
        cfg = self.config
        method = cfg.method
        if method == "none":
            ranking = self.search_text(query.text, cfg.depth)
        elif method == "rm3":
            fb = self.feedback(query)
            weighted = rm3_expand(self.index, query, fb, cfg.fb_terms, cfg.orig_weight,
                                  self.analyzer)
            ranking = search(self.index, weighted, cfg.depth, self.params) if weighted.terms else []
        elif method == "prf":
            fb = self.feedback(query)
            if fb.docs:
                terms = prf_offer_weight_expand(self.index, fb, cfg.fb_terms, self.analyzer)
                expanded = reformulate(query, terms, cfg.n, self.analyzer)
                ranking = self.search_text(expanded.text, cfg.depth)
            else:
                ranking = self.search_text(query.text, cfg.depth)
        elif method == "gqe":
            fb = self.feedback(query)
            terms = generative_expand(query, fb, self._generator(), cfg.fb_terms,
                                      cfg.token_budget, cfg.timeout)
            expanded = reformulate(query, terms, cfg.n, self.analyzer)
            ranking = self.search_text(expanded.text, cfg.depth)
        else:  # unreachable; __post_init__ validates
            raise ContractError(f"unknown method {method!r}")

        if cfg.rerank_scorer != "none":
            rr_config = RerankConfig(depth=cfg.rerank_depth,
                                     scorer="identity" if cfg.rerank_scorer == "identity"
                                     else cfg.rerank_scorer)
            ranking = rerank(query, ranking, rr_config, self._scorer())
        return ranking


def run_queries(engine: SearchEngine, queries) -> dict[str, list[ScoredDoc]]:
    """Process queries (possibly concurrently); results in input order."""
    queries = list(queries)

    def work(query: Query):
        try:
            return engine.run_query(query)
        except GqeprfError as exc:
            raise RuntimeError(f"query {query.query_id!r} failed: {exc}") from exc

    if engine.config.workers == 1:
        rankings = [work(q) for q in queries]
    else:
        with ThreadPoolExecutor(max_workers=engine.config.workers) as pool:
            rankings = list(pool.map(work, queries))
    return {q.query_id: ranking for q, ranking in zip(queries, rankings)}
