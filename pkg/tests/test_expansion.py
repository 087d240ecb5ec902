import random
from collections import Counter

import pytest

from gqeprf.analysis import analyze, plain_config
from gqeprf.corpus import Document, Query
from gqeprf.errors import ContractError, TransportError
from gqeprf.expansion import (ExpansionTerm, FeedbackSet, MockGenerator, generative_expand,
                              get_feedback, offer_weight, prf_offer_weight_expand,
                              reformulate, rm3_expand)
from gqeprf.index import build_index
from gqeprf.retrieval import WeightedQuery, search

from oracles import random_corpus, random_query_terms

CFG = plain_config()


@pytest.fixture
def fruit_corpus():
    docs = [
        Document("d1", "apple banana"),
        Document("d2", "apple cherry"),
        Document("d3", "banana cherry"),
        Document("d4", "date"),
        Document("d5", "apple banana cherry"),
    ]
    index = build_index(docs, CFG)
    return index, {d.doc_id: d for d in docs}


class TestGetFeedback:
    def test_sizes_and_default(self, fruit_corpus):
        index, docs = fruit_corpus
        fb = get_feedback(index, docs, Query("q", "apple"), config=CFG)
        assert fb.fb_docs == 10
        assert len(fb.docs) == 3  # only 3 docs contain "apple"
        scores = [s for _, s in fb.docs]
        assert scores == sorted(scores, reverse=True)

    def test_no_overlap_is_empty_not_error(self, fruit_corpus):
        index, docs = fruit_corpus
        fb = get_feedback(index, docs, Query("q", "zzz"), config=CFG)
        assert fb.docs == []

    def test_size_bounded_by_corpus(self):
        docs = [Document("d1", "a"), Document("d2", "a")]
        index = build_index(docs, CFG)
        fb = get_feedback(index, {d.doc_id: d for d in docs}, Query("q", "a"),
                          fb_docs=10, config=CFG)
        assert len(fb.docs) <= 2

    def test_attaches_full_texts(self, fruit_corpus):
        index, docs = fruit_corpus
        fb = get_feedback(index, docs, Query("q", "date"), config=CFG)
        assert fb.docs[0][0].text == "date"

    def test_fb_docs_must_be_positive(self, fruit_corpus):
        index, docs = fruit_corpus
        with pytest.raises(ContractError):
            get_feedback(index, docs, Query("q", "apple"), fb_docs=0, config=CFG)


class TestRm3:
    def test_lambda_zero_single_doc_mle(self, fruit_corpus):
        index, _ = fruit_corpus
        query = Query("q", "x")
        fb = FeedbackSet(query, [(Document("f", "x x y"), 1.0)], 10)
        weighted = rm3_expand(index, query, fb, fb_terms=5, orig_weight=0.0, config=CFG)
        weights = dict(weighted.terms)
        assert weights["x"] == pytest.approx(2 / 3, abs=1e-12)
        assert weights["y"] == pytest.approx(1 / 3, abs=1e-12)

    def test_lambda_one_keeps_ranking(self, fruit_corpus):
        index, docs = fruit_corpus
        query = Query("q", "apple banana")
        fb = get_feedback(index, docs, query, config=CFG)
        weighted = rm3_expand(index, query, fb, orig_weight=1.0, config=CFG)
        expanded_ids = [h.doc_id for h in search(index, weighted, 10)]
        baseline = search(index, WeightedQuery.from_tokens(analyze(query.text, CFG)), 10)
        assert expanded_ids == [h.doc_id for h in baseline]

    def test_empty_feedback_returns_query_model(self, fruit_corpus):
        index, _ = fruit_corpus
        query = Query("q", "apple apple banana")
        weighted = rm3_expand(index, query, FeedbackSet(query, [], 10), config=CFG)
        assert dict(weighted.terms) == pytest.approx({"apple": 2 / 3, "banana": 1 / 3})

    def test_weights_sum_to_one_and_non_negative(self):
        rng = random.Random(7)
        for _ in range(5):
            docs, vocab = random_corpus(rng, max_docs=50, vocab_size=20)
            index = build_index(docs, CFG)
            doc_map = {d.doc_id: d for d in docs}
            query = Query("q", " ".join(random_query_terms(rng, vocab)))
            fb = get_feedback(index, doc_map, query, config=CFG)
            weighted = rm3_expand(index, query, fb, fb_terms=10, orig_weight=0.5, config=CFG)
            assert all(w >= 0 for _, w in weighted.terms)
            assert sum(w for _, w in weighted.terms) == pytest.approx(1.0, abs=1e-9)

    def test_against_independent_oracle(self, fruit_corpus):
        # independent evaluation of the relevance-model formula for one instance
        index, docs = fruit_corpus
        query = Query("q", "apple")
        fb = get_feedback(index, docs, query, fb_docs=2, config=CFG)
        lam = 0.5

        total = sum(s for _, s in fb.docs)
        p_rel = Counter()
        for doc, score in fb.docs:
            toks = analyze(doc.text, CFG)
            for t in set(toks):
                p_rel[t] += (toks.count(t) / len(toks)) * (score / total)
        top = dict(sorted(p_rel.items(), key=lambda kv: (-kv[1], kv[0]))[:10])
        norm = sum(top.values())
        q_toks = analyze(query.text, CFG)
        expected = {}
        for t in set(q_toks) | set(top):
            expected[t] = lam * q_toks.count(t) / len(q_toks) + (1 - lam) * top.get(t, 0) / norm

        got = dict(rm3_expand(index, query, fb, fb_terms=10, orig_weight=lam, config=CFG).terms)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_lambda_out_of_range(self, fruit_corpus):
        index, _ = fruit_corpus
        q = Query("q", "apple")
        with pytest.raises(ContractError):
            rm3_expand(index, q, FeedbackSet(q, [], 10), orig_weight=1.5, config=CFG)


# hand-evaluated offer weights, pinned by the oracle script in the repo history:
# ow(r, df, N, R) = r * ln(((r+.5)(N-df-R+r+.5)) / ((df-r+.5)(R-r+.5)))
OW_ORACLE = [
    ((3, 4, 20, 3), 13.031416265561052),    # 3*ln(77)
    ((2, 4, 20, 3), 4.670749831634073),
    ((1, 1, 20, 3), 3.044522437723423),     # ln(21)
    ((3, 18, 20, 3), 0.3640825710128026),
]


class TestOfferWeight:
    @pytest.mark.parametrize("args,expected", OW_ORACLE)
    def test_pinned_values(self, args, expected):
        assert offer_weight(*args) == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_feedback_incidence(self):
        # same df: the term present in all feedback docs outranks a one-doc term
        assert offer_weight(3, 5, 100, 3) > offer_weight(1, 5, 100, 3)

    def test_monotone_in_rarity(self):
        # R=1, doc "a b": rare a (df=1) outranks common b (df=50)
        assert offer_weight(1, 1, 100, 1) > offer_weight(1, 50, 100, 1)

    def test_corpus_fixture_exact_list(self, fruit_corpus):
        index, docs = fruit_corpus
        fb = get_feedback(index, docs, Query("q", "apple"), fb_docs=3, config=CFG)
        assert [d.doc_id for d, _ in fb.docs] == ["d1", "d2", "d5"]
        terms = prf_offer_weight_expand(index, fb, fb_terms=10, config=CFG)
        # apple: r=3, df=3; banana/cherry: r=2, df=3 (tie, lexicographic)
        assert [(t.term, t.weight) for t in terms] == [
            ("apple", pytest.approx(10.666044184468241, abs=1e-12)),
            ("banana", pytest.approx(1.0216512475319814, abs=1e-12)),
            ("cherry", pytest.approx(1.0216512475319814, abs=1e-12)),
        ]

    def test_empty_feedback_is_error(self, fruit_corpus):
        index, _ = fruit_corpus
        with pytest.raises(ContractError):
            prf_offer_weight_expand(index, FeedbackSet(Query("q", "x"), [], 10), config=CFG)

    def test_fb_terms_cuts_list(self, fruit_corpus):
        index, docs = fruit_corpus
        fb = get_feedback(index, docs, Query("q", "apple"), fb_docs=3, config=CFG)
        assert len(prf_offer_weight_expand(index, fb, fb_terms=2, config=CFG)) == 2


class _ConstantClient:
    """Returns fixed (term, score) lists keyed by the document part of the input."""

    def __init__(self, table, default=()):
        self.table = table
        self.default = default
        self.calls = []

    def request(self, message, timeout=None):
        self.calls.append(message)
        _, _, doc_text = message["input"].partition(" [SEP] ")
        terms = self.table.get(doc_text, self.default)
        return {"type": "terms", "terms": [{"term": t, "score": s} for t, s in terms]}


class TestGenerativeExpand:
    def _feedback(self, n_docs):
        docs = [(Document(f"f{i}", f"doc{i}"), float(n_docs - i)) for i in range(n_docs)]
        return FeedbackSet(Query("q", "base"), docs, 10)

    def test_aggregation_sums_scores(self):
        client = _ConstantClient({}, default=[("foo", 1.0)])
        terms = generative_expand(Query("q", "base"), self._feedback(10), client, max_terms=5)
        assert terms == [ExpansionTerm("foo", pytest.approx(10.0))]
        assert len(client.calls) == 10

    def test_sorted_by_aggregate_score(self):
        client = _ConstantClient({"doc0": [("a", 2.0)], "doc1": [("b", 3.0)]})
        terms = generative_expand(Query("q", "base"), self._feedback(2), client, max_terms=5)
        assert [t.term for t in terms] == ["b", "a"]

    def test_order_invariant_to_doc_order(self):
        table = {"doc0": [("a", 1.0), ("b", 0.5)], "doc1": [("b", 1.0)], "doc2": [("c", 0.2)]}
        fb = self._feedback(3)
        fwd = generative_expand(Query("q", "base"), fb, _ConstantClient(table), 5)
        fb_rev = FeedbackSet(fb.query, list(reversed(fb.docs)), 10)
        rev = generative_expand(Query("q", "base"), fb_rev, _ConstantClient(table), 5)
        assert fwd == rev

    def test_empty_feedback_sends_bare_query_once(self):
        client = _ConstantClient({"": [("solo", 1.0)]})
        fb = FeedbackSet(Query("q", "base"), [], 10)
        terms = generative_expand(Query("q", "base"), fb, client, max_terms=3)
        assert terms == [ExpansionTerm("solo", 1.0)]
        assert len(client.calls) == 1
        assert client.calls[0]["input"] == "base [SEP] "

    def test_all_empty_responses_give_empty_list(self):
        client = _ConstantClient({})
        assert generative_expand(Query("q", "base"), self._feedback(3), client, 5) == []

    def test_transport_error_propagates(self):
        class FailingClient:
            def request(self, message, timeout=None):
                raise TransportError("connection lost")

        with pytest.raises(TransportError):
            generative_expand(Query("q", "base"), self._feedback(1), FailingClient(), 5)

    def test_tie_broken_lexicographically(self):
        client = _ConstantClient({"doc0": [("zeta", 1.0), ("alpha", 1.0)]})
        terms = generative_expand(Query("q", "base"), self._feedback(1), client, 5)
        assert [t.term for t in terms] == ["alpha", "zeta"]


class TestReformulate:
    def test_appends_top_n(self):
        q = Query("q", "jaguar speed")
        terms = [ExpansionTerm(t, 1.0) for t in ["cat", "animal", "mph"]]
        out = reformulate(q, terms, 2, CFG)
        assert out.text == "jaguar speed cat animal"
        assert out.n == 2

    def test_empty_terms_identity(self):
        q = Query("q", "jaguar speed")
        assert reformulate(q, [], 5, CFG).text == q.text

    def test_n_zero_identity(self):
        q = Query("q", "jaguar speed")
        terms = [ExpansionTerm("cat", 1.0)]
        assert reformulate(q, terms, 0, CFG).text == q.text

    def test_duplicates_of_query_terms_dropped(self):
        q = Query("q", "fast car")
        terms = [ExpansionTerm("car", 1.0), ExpansionTerm("auto", 0.5)]
        out = reformulate(q, terms, 2, CFG)
        assert out.text == "fast car auto"
        assert [t.term for t in out.added_terms] == ["auto"]

    def test_dedup_uses_analyzed_form(self):
        # stemming collapses "cars" onto query term "car"
        from gqeprf.analysis import AnalyzerConfig
        stem_cfg = AnalyzerConfig(stopwords=frozenset(), stemmer="porter")
        q = Query("q", "fast car")
        terms = [ExpansionTerm("Cars", 1.0), ExpansionTerm("auto", 0.5)]
        out = reformulate(q, terms, 2, stem_cfg)
        assert out.text == "fast car auto"

    def test_text_starts_with_original(self):
        q = Query("q", "original words")
        terms = [ExpansionTerm("extra", 1.0)]
        assert reformulate(q, terms, 1, CFG).text.startswith(q.text)

    def test_negative_n_rejected(self):
        with pytest.raises(ContractError):
            reformulate(Query("q", "x"), [], -1, CFG)


class TestMockGenerator:
    @pytest.fixture
    def xyz_index(self):
        return build_index([Document("d1", "x x y"), Document("d2", "y z")], CFG)

    def test_exact_tf_idf_scores(self, xyz_index):
        # hand computation: idf(x) = ln 2, idf(y) = ln 1.2
        mock = MockGenerator(xyz_index, CFG)
        resp = mock.request({"type": "generate", "input": "q [SEP] x x y", "max_terms": 10})
        assert resp["type"] == "terms"
        assert resp["terms"] == [
            {"term": "x", "score": pytest.approx(1.3862943611198906, abs=1e-12)},
            {"term": "y", "score": pytest.approx(0.1823215567939546, abs=1e-12)},
        ]

    def test_tf_ordering_when_idf_equal(self, xyz_index):
        mock = MockGenerator(xyz_index, CFG)
        resp = mock.request({"type": "generate", "input": "q [SEP] x x y", "max_terms": 10})
        assert [t["term"] for t in resp["terms"]] == ["x", "y"]

    def test_empty_document_gives_no_terms(self, xyz_index):
        mock = MockGenerator(xyz_index, CFG)
        resp = mock.request({"type": "generate", "input": "q [SEP] ", "max_terms": 5})
        assert resp["terms"] == []

    def test_max_terms_respected(self, xyz_index):
        mock = MockGenerator(xyz_index, CFG)
        resp = mock.request({"type": "generate", "input": "q [SEP] x y z", "max_terms": 1})
        assert len(resp["terms"]) == 1

    def test_bad_message_gets_error_response(self, xyz_index):
        mock = MockGenerator(xyz_index, CFG)
        assert mock.request({"type": "score"})["type"] == "error"
        assert mock.request({"type": "generate", "input": 3, "max_terms": 1})["type"] == "error"

    def test_deterministic(self, xyz_index):
        mock = MockGenerator(xyz_index, CFG)
        msg = {"type": "generate", "input": "q [SEP] y z x", "max_terms": 10}
        assert mock.request(msg) == mock.request(msg)
