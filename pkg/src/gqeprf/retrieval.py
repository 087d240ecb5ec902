"""BM25 ranked retrieval over the inverted index.

Uses the Lucene-style non-negative idf variant with defaults k1=0.9, b=0.4:

    idf(df, N)  = ln(1 + (N - df + 0.5) / (df + 0.5))
    score(t, d) = idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))

Document score is the weight-scaled sum over query terms. Ties are broken
by ascending external doc_id; zero-score documents are excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractError
from .index import InvertedIndex


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 < 0:
            raise ContractError(f"k1 must be non-negative, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ContractError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float
    rank: int  # 1-based


@dataclass
class WeightedQuery:
    """Analyzed query terms with non-negative weights.

    An unweighted query has all weights equal to 1; repeated tokens simply
    appear as repeated entries and accumulate additively during scoring.
    """

    terms: list[tuple[str, float]]

    def __post_init__(self):
        for term, weight in self.terms:
            if weight < 0:
                raise ContractError(f"negative weight {weight} for term {term!r}")

    @classmethod
    def from_tokens(cls, tokens) -> "WeightedQuery":
        return cls([(t, 1.0) for t in tokens])


def bm25_idf(df: int, n_docs: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def bm25_term_score(tf: int, df: int, doc_len: int, n_docs: int, avgdl: float,
                    params: Bm25Params | None = None) -> float:
    """Score one term occurrence profile; preconditions are enforced."""
    if params is None:
        params = Bm25Params()
    if tf < 1:
        raise ContractError(f"tf must be >= 1, got {tf}")
    if not 1 <= df <= n_docs:
        raise ContractError(f"df must be in [1, N], got df={df}, N={n_docs}")
    if n_docs < 1:
        raise ContractError(f"N must be >= 1, got {n_docs}")
    if avgdl <= 0:
        raise ContractError(f"avgdl must be positive, got {avgdl}")
    idf = bm25_idf(df, n_docs)
    norm = params.k1 * (1.0 - params.b + params.b * doc_len / avgdl)
    return idf * tf * (params.k1 + 1.0) / (tf + norm)


def search(index: InvertedIndex, query: WeightedQuery, k: int,
           params: Bm25Params | None = None) -> list[ScoredDoc]:
    """Top-k documents by summed weighted BM25 term scores.

    Deterministic: identical index, query and k give the identical ranked
    list including tie order (ascending doc_id on equal scores).
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if params is None:
        params = Bm25Params()

    # aggregate duplicate terms; iterate in sorted order so float
    # accumulation order is fixed
    weights: dict[str, float] = {}
    for term, weight in query.terms:
        weights[term] = weights.get(term, 0.0) + weight

    n = index.n_docs
    avgdl = index.avgdl
    k1, b = params.k1, params.b
    doc_lengths = index.doc_lengths
    scores: dict[int, float] = {}
    for term in sorted(weights):
        weight = weights[term]
        plist = index.postings.get(term)
        if not plist or weight == 0.0:
            continue
        idf = bm25_idf(len(plist), n)
        k1p1 = k1 + 1.0
        for ordinal, tf in plist:
            norm = k1 * (1.0 - b + b * doc_lengths[ordinal] / avgdl)
            term_score = idf * tf * k1p1 / (tf + norm)
            scores[ordinal] = scores.get(ordinal, 0.0) + weight * term_score

    doc_ids = index.doc_ids
    ranked = sorted(
        ((doc_ids[o], s) for o, s in scores.items() if s > 0.0),
        key=lambda pair: (-pair[1], pair[0]),
    )[:k]
    return [ScoredDoc(doc_id, score, rank)
            for rank, (doc_id, score) in enumerate(ranked, 1)]
