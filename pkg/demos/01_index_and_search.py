"""Build an inverted index over a small corpus and run BM25 searches.

Run with:  python demos/01_index_and_search.py
"""

import tempfile
from pathlib import Path

from gqeprf import AnalyzerConfig, Document, WeightedQuery, analyze
from gqeprf.index import build_index, load_index, save_index
from gqeprf.retrieval import Bm25Params, search

# ---------------------------------------------------------------------------
# A toy corpus. Real collections load from TSV with corpus.load_documents.
# ---------------------------------------------------------------------------
docs = [
    Document("d1", "the quick brown fox jumps over the lazy dog"),
    Document("d2", "a fast auburn fox leaped across sleeping hounds"),
    Document("d3", "quantum computing uses qubits for parallel computation"),
    Document("d4", "classical computers use binary bits and logic gates"),
    Document("d5", "the fox is a small omnivorous mammal"),
    Document("d6", "dogs are loyal domesticated animals related to wolves"),
]

config = AnalyzerConfig()  # lowercase + stopwords + Porter stemming
index = build_index(docs, config)
print(f"indexed {index.n_docs} docs, avgdl={index.avgdl:.2f}, "
      f"vocabulary={index.vocab_size} terms")

# ---------------------------------------------------------------------------
# Queries go through the same analyzer before scoring.
# ---------------------------------------------------------------------------
for text in ["quick fox", "computing machines", "sleeping dogs"]:
    tokens = analyze(text, config)
    hits = search(index, WeightedQuery.from_tokens(tokens), k=3,
                  params=Bm25Params(k1=0.9, b=0.4))
    print(f"\nquery: {text!r}  ->  tokens {tokens}")
    for hit in hits:
        print(f"  {hit.rank}. {hit.doc_id}  score={hit.score:.4f}")

# ---------------------------------------------------------------------------
# Indexes persist to a single versioned binary file and round-trip exactly.
# ---------------------------------------------------------------------------
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.idx"
    save_index(index, path)
    reloaded = load_index(path)
    print(f"\nround-trip: {path.stat().st_size} bytes on disk, "
          f"N={reloaded.n_docs}, avgdl matches: {reloaded.avgdl == index.avgdl}")
