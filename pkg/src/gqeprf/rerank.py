"""Second-stage reranking of a BM25 candidate list with a pluggable scorer.

The engine never embeds a neural model; an external scorer is reached over
the same JSON protocol as the generator (message type "score"). A BM25
rescorer and an identity scorer exist for testing and baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import AnalyzerConfig, analyze
from .corpus import Document, Query
from .errors import ContractError, ProtocolError
from .genclient import request_scores
from .index import InvertedIndex
from .retrieval import Bm25Params, ScoredDoc, bm25_idf

SCORER_KINDS = ("external", "bm25_rescore", "identity")


@dataclass(frozen=True)
class RerankConfig:
    depth: int = 50
    scorer: str = "identity"

    def __post_init__(self):
        if self.depth < 1:
            raise ContractError(f"rerank depth must be >= 1, got {self.depth}")
        if self.scorer not in SCORER_KINDS:
            raise ContractError(f"unknown scorer {self.scorer!r}, expected one of {SCORER_KINDS}")


class ExternalScorer:
    """Scores candidates through a scorer service connection."""

    def __init__(self, connection, documents: dict[str, Document],
                 timeout: float | None = None):
        self.connection = connection
        self.documents = documents
        self.timeout = timeout

    def score(self, query: Query, candidates) -> dict[str, float]:
        docs = [(c.doc_id, self.documents[c.doc_id].text) for c in candidates]
        return request_scores(self.connection, query.text, docs, timeout=self.timeout)


class Bm25Rescorer:
    """Recomputes plain BM25 scores for the candidates (useful as a
    deterministic non-trivial scorer; a no-op on unexpanded runs)."""

    def __init__(self, index: InvertedIndex, config: AnalyzerConfig | None = None,
                 params: Bm25Params | None = None):
        self.index = index
        self.config = config if config is not None else AnalyzerConfig()
        self.params = params if params is not None else Bm25Params()

    def score(self, query: Query, candidates) -> dict[str, float]:
        wanted = {self.index.ordinal(c.doc_id): c.doc_id for c in candidates}
        scores = {c.doc_id: 0.0 for c in candidates}
        k1, b = self.params.k1, self.params.b
        for term in sorted(set(analyze(query.text, self.config))):
            plist = self.index.postings.get(term)
            if not plist:
                continue
            idf = bm25_idf(len(plist), self.index.n_docs)
            for ordinal, tf in plist:
                doc_id = wanted.get(ordinal)
                if doc_id is None:
                    continue
                norm = k1 * (1.0 - b + b * self.index.doc_lengths[ordinal] / self.index.avgdl)
                scores[doc_id] += idf * tf * (k1 + 1.0) / (tf + norm)
        return scores


def rerank(query: Query, candidates, config: RerankConfig, scorer=None) -> list[ScoredDoc]:
    """Re-score and re-sort the top ``config.depth`` candidates.

    The remainder keeps its original relative order below the reranked
    block; the output is always a permutation of the input. The identity
    scorer passes the list through untouched (ranks renumbered).
    """
    candidates = list(candidates)
    if config.scorer == "identity":
        return [ScoredDoc(c.doc_id, c.score, rank) for rank, c in enumerate(candidates, 1)]
    if scorer is None:
        raise ContractError(f"scorer {config.scorer!r} requires a scorer instance")

    head = candidates[:config.depth]
    tail = candidates[config.depth:]
    new_scores = scorer.score(query, head)
    missing = [c.doc_id for c in head if c.doc_id not in new_scores]
    if missing:
        raise ProtocolError(f"scorer returned no score for {missing}", payload=new_scores)

    resorted = sorted(((c.doc_id, float(new_scores[c.doc_id])) for c in head),
                      key=lambda pair: (-pair[1], pair[0]))
    out = [ScoredDoc(doc_id, score, rank)
           for rank, (doc_id, score) in enumerate(resorted, 1)]
    out.extend(ScoredDoc(c.doc_id, c.score, len(head) + i)
               for i, c in enumerate(tail, 1))
    return out
