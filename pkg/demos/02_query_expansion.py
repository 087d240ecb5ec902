"""Compare the three expansion strategies on one query.

RM3 produces a weighted query; offer-weight PRF and the generative path
produce candidate terms that get appended to the query text. The generative
path here uses the deterministic in-process mock; point it at a running
generation service for the neural version.

Run with:  python demos/02_query_expansion.py
"""

from gqeprf import AnalyzerConfig, Document, Query
from gqeprf.expansion import (MockGenerator, generative_expand, get_feedback,
                              prf_offer_weight_expand, reformulate, rm3_expand)
from gqeprf.index import build_index
from gqeprf.retrieval import search

docs = [
    Document("d1", "solar panels convert sunlight into electricity"),
    Document("d2", "photovoltaic cells and solar energy power homes"),
    Document("d3", "wind turbines also generate renewable electricity"),
    Document("d4", "fossil fuel plants burn coal for power"),
    Document("d5", "rooftop solar installation lowers electricity bills"),
    Document("d6", "battery storage keeps solar power available at night"),
]
config = AnalyzerConfig()
index = build_index(docs, config)
doc_map = {d.doc_id: d for d in docs}

query = Query("q1", "solar power")
feedback = get_feedback(index, doc_map, query, fb_docs=4, config=config)
print("pseudo-relevant feedback:",
      [(doc.doc_id, round(score, 3)) for doc, score in feedback.docs])

# --- RM3: interpolated term distribution, searched as a weighted query -----
weighted = rm3_expand(index, query, feedback, fb_terms=8, orig_weight=0.5,
                      config=config)
print("\nRM3 weighted query:")
for term, weight in weighted.terms:
    print(f"  {term:<12} {weight:.4f}")
hits = search(index, weighted, 4)
print("RM3 top docs:", [h.doc_id for h in hits])

# --- Offer-weight PRF: rank candidate terms, append the top n --------------
candidates = prf_offer_weight_expand(index, feedback, fb_terms=8, config=config)
print("\noffer-weight candidates:",
      [(t.term, round(t.weight, 2)) for t in candidates[:5]])
expanded = reformulate(query, candidates, n=3, config=config)
print("reformulated query:", repr(expanded.text))

# --- Generative expansion through the wire protocol (mock here) ------------
mock = MockGenerator(index, config)
terms = generative_expand(query, feedback, mock, max_terms=8)
print("\ngenerated candidates:", [(t.term, round(t.weight, 2)) for t in terms[:5]])
expanded = reformulate(query, terms, n=3, config=config)
print("reformulated query:", repr(expanded.text))
