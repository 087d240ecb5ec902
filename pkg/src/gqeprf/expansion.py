"""Expansion-term production from pseudo-relevance feedback.

Three strategies over the same FeedbackSet:

  - rm3_expand: relevance-model interpolation, used as a weighted BM25 query
  - prf_offer_weight_expand: classic offer-weight term selection
  - generative_expand: per-feedback-document generation through a client
    speaking the generator protocol

plus ``reformulate``, which appends the top-n candidate terms to the query
text, and ``MockGenerator``, a deterministic in-process stand-in for the
neural generation service.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .analysis import AnalyzerConfig, analyze
from .corpus import Document, Query
from .errors import ContractError
from .genclient import GenRequest, build_input, request_terms
from .index import InvertedIndex
from .retrieval import Bm25Params, WeightedQuery, bm25_idf, search

DEFAULT_FB_DOCS = 10
DEFAULT_FB_TERMS = 10
DEFAULT_ORIG_WEIGHT = 0.5
DEFAULT_EXPANSION_TERMS = 7


@dataclass
class FeedbackSet:
    """The top pseudo-relevant documents for a query, with retrieval scores."""

    query: Query
    docs: list[tuple[Document, float]]  # descending score
    fb_docs: int


@dataclass(frozen=True)
class ExpansionTerm:
    term: str
    weight: float


@dataclass
class ExpandedQuery:
    original: Query
    added_terms: list[ExpansionTerm]  # deduplicated candidates, best first
    n: int                            # how many were actually appended
    text: str


def get_feedback(index: InvertedIndex, documents: dict[str, Document], query: Query,
                 fb_docs: int = DEFAULT_FB_DOCS, config: AnalyzerConfig | None = None,
                 params: Bm25Params | None = None) -> FeedbackSet:
    """Initial BM25 retrieval wrapped with full document texts attached."""
    if fb_docs < 1:
        raise ContractError(f"fb_docs must be >= 1, got {fb_docs}")
    tokens = analyze(query.text, config)
    hits = search(index, WeightedQuery.from_tokens(tokens), fb_docs, params) if tokens else []
    docs = []
    for hit in hits:
        if hit.doc_id not in documents:
            raise ContractError(f"no text available for retrieved doc {hit.doc_id!r}")
        docs.append((documents[hit.doc_id], hit.score))
    return FeedbackSet(query=query, docs=docs, fb_docs=fb_docs)


def _query_mle(query: Query, config: AnalyzerConfig | None) -> dict[str, float]:
    tokens = analyze(query.text, config)
    if not tokens:
        return {}
    counts = Counter(tokens)
    return {t: c / len(tokens) for t, c in sorted(counts.items())}


def rm3_expand(index: InvertedIndex, query: Query, feedback: FeedbackSet,
               fb_terms: int = DEFAULT_FB_TERMS, orig_weight: float = DEFAULT_ORIG_WEIGHT,
               config: AnalyzerConfig | None = None) -> WeightedQuery:
    """Relevance-model expansion interpolated with the original query.

    Feedback term probabilities are maximum-likelihood term distributions of
    the feedback documents, weighted by their normalized retrieval scores;
    the top fb_terms survive and are renormalized. Final weights are
    lam * P(t|q) + (1 - lam) * P(t|R) and sum to one.
    """
    if not 0.0 <= orig_weight <= 1.0:
        raise ContractError(f"orig_weight must be in [0, 1], got {orig_weight}")
    if fb_terms < 1:
        raise ContractError(f"fb_terms must be >= 1, got {fb_terms}")

    query_mle = _query_mle(query, config)

    p_rel: dict[str, float] = {}
    total_score = sum(score for _, score in feedback.docs)
    if feedback.docs and total_score > 0:
        for doc, score in feedback.docs:
            tokens = analyze(doc.text, config)
            if not tokens:
                continue
            doc_weight = score / total_score
            counts = Counter(tokens)
            for term, count in counts.items():
                p_rel[term] = p_rel.get(term, 0.0) + (count / len(tokens)) * doc_weight

    if not p_rel:
        # nothing usable in the feedback: fall back to the original query model
        return WeightedQuery(list(query_mle.items()))

    top = sorted(p_rel.items(), key=lambda kv: (-kv[1], kv[0]))[:fb_terms]
    norm = sum(v for _, v in top)
    feedback_model = {t: v / norm for t, v in top}

    lam = orig_weight
    terms = sorted(set(query_mle) | set(feedback_model))
    weighted = [(t, lam * query_mle.get(t, 0.0) + (1.0 - lam) * feedback_model.get(t, 0.0))
                for t in terms]
    return WeightedQuery(weighted)


def offer_weight(r: int, df: int, n_docs: int, n_feedback: int) -> float:
    """Robertson/Sparck-Jones offer weight for a candidate expansion term.

    r is the number of feedback documents containing the term, df its
    collection document frequency, over n_docs documents and n_feedback
    feedback documents.
    """
    num = (r + 0.5) * (n_docs - df - n_feedback + r + 0.5)
    den = (df - r + 0.5) * (n_feedback - r + 0.5)
    return r * math.log(num / den)


def prf_offer_weight_expand(index: InvertedIndex, feedback: FeedbackSet,
                            fb_terms: int = DEFAULT_FB_TERMS,
                            config: AnalyzerConfig | None = None) -> list[ExpansionTerm]:
    """Rank every feedback-document term by offer weight; keep the best."""
    if not feedback.docs:
        raise ContractError("offer-weight expansion needs a non-empty feedback set")
    if fb_terms < 1:
        raise ContractError(f"fb_terms must be >= 1, got {fb_terms}")
    n_feedback = len(feedback.docs)
    presence: Counter = Counter()
    for doc, _ in feedback.docs:
        presence.update(set(analyze(doc.text, config)))
    scored = []
    for term, r in presence.items():
        df = index.df(term)
        if df < r:
            # feedback docs are assumed to come from the indexed collection
            raise ContractError(
                f"term {term!r} occurs in {r} feedback docs but has collection df {df}")
        scored.append((term, offer_weight(r, df, index.n_docs, n_feedback)))
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    return [ExpansionTerm(t, w) for t, w in scored[:fb_terms]]


def generative_expand(query: Query, feedback: FeedbackSet, client, max_terms: int,
                      token_budget: int = 1024, timeout: float | None = None) -> list[ExpansionTerm]:
    """Ask the generator for terms once per feedback document and aggregate.

    Scores for identical terms are summed across documents, so the result is
    independent of document order; ties break lexicographically. An empty
    feedback set degrades to a single request with the bare query.
    """
    if max_terms < 1:
        raise ContractError(f"max_terms must be >= 1, got {max_terms}")
    docs = [doc for doc, _ in feedback.docs] or [Document("", "")]
    aggregate: dict[str, float] = {}
    for doc in docs:
        req = GenRequest(build_input(query, doc, token_budget), max_terms, token_budget)
        response = request_terms(client, req, timeout=timeout)
        for term, score in response.terms:
            aggregate[term] = aggregate.get(term, 0.0) + score
    ranked = sorted(aggregate.items(), key=lambda kv: (-kv[1], kv[0]))
    return [ExpansionTerm(t, s) for t, s in ranked[:max_terms]]


def reformulate(query: Query, terms, n: int,
                config: AnalyzerConfig | None = None) -> ExpandedQuery:
    """Append the top-n candidate terms to the query, space separated.

    Candidates whose analyzed form equals an analyzed original-query term
    are dropped first, so appending never merely repeats the query.
    """
    if n < 0:
        raise ContractError(f"n must be >= 0, got {n}")
    query_terms = set(analyze(query.text, config))
    kept = []
    for term in terms:
        analyzed = analyze(term.term, config)
        if len(analyzed) == 1 and analyzed[0] in query_terms:
            continue
        kept.append(term)
    appended = kept[:n]
    if appended:
        text = query.text + " " + " ".join(t.term for t in appended)
    else:
        text = query.text
    return ExpandedQuery(original=query, added_terms=kept, n=len(appended), text=text)


class MockGenerator:
    """Deterministic test double for the generation service.

    For an input ``q [SEP] d`` it answers with the top-10 terms of d ranked
    by tf(t, d) * idf(t) under the supplied index, scored by that product.
    Implements the same ``request(message)`` surface as a real connection,
    so it can be used wherever a generator connection is expected.
    """

    MAX_TERMS = 10

    def __init__(self, index: InvertedIndex, config: AnalyzerConfig | None = None):
        self.index = index
        self.config = config if config is not None else AnalyzerConfig()

    def terms_for(self, doc_text: str, max_terms: int) -> list[tuple[str, float]]:
        tokens = analyze(doc_text, self.config)
        if not tokens:
            return []
        counts = Counter(tokens)
        scored = [(term, tf * bm25_idf(self.index.df(term), self.index.n_docs))
                  for term, tf in counts.items()]
        scored.sort(key=lambda kv: (-kv[1], kv[0]))
        return scored[:min(self.MAX_TERMS, max_terms)]

    def handle(self, message) -> dict:
        if not isinstance(message, dict) or message.get("type") != "generate":
            return {"type": "error",
                    "error": f"unsupported message: {message.get('type') if isinstance(message, dict) else message!r}"}
        if not isinstance(message.get("input"), str) or not isinstance(message.get("max_terms"), int):
            return {"type": "error", "error": "generate needs string 'input' and int 'max_terms'"}
        if message["max_terms"] < 1:
            return {"type": "error", "error": "'max_terms' must be a positive integer"}
        text = message["input"]
        _, sep, doc_text = text.partition(" [SEP] ")
        if not sep:
            doc_text = ""
        terms = self.terms_for(doc_text, message["max_terms"])
        return {"type": "terms", "terms": [{"term": t, "score": s} for t, s in terms]}

    # connection interface
    def request(self, message: dict, timeout: float | None = None) -> dict:
        return self.handle(message)

    def close(self) -> None:
        pass
