"""Score runs against judgments and sweep the expansion-term count.

Run with:  python demos/03_evaluate_and_sweep.py
"""

from gqeprf import Document, Query
from gqeprf.evaluation import EvalConfig, evaluate_run, grid_search_n
from gqeprf.index import build_index
from gqeprf.pipeline import PipelineConfig, SearchEngine, run_queries

docs = [
    Document("d1", "bread recipe flour yeast water salt kneading"),
    Document("d2", "sourdough starter fermentation wild yeast baking"),
    Document("d3", "cake recipe sugar butter eggs vanilla frosting"),
    Document("d4", "pizza dough flour yeast olive oil baking stone"),
    Document("d5", "pasta fresh eggs flour rolling machine"),
    Document("d6", "yeast biology fermentation carbon dioxide alcohol"),
]
queries = [Query("q1", "bread baking yeast"), Query("q2", "cake recipe")]
qrels = {
    "q1": {"d1": 3, "d2": 2, "d4": 1, "d6": 1},
    "q2": {"d3": 3, "d5": 1},
}

config = PipelineConfig(method="gqe", generator="mock", depth=6, fb_docs=3, n=2)
engine = SearchEngine(build_index(docs, config.analyzer()),
                      {d.doc_id: d for d in docs}, config)

# --- evaluate one run -------------------------------------------------------
run = run_queries(engine, queries)
report = evaluate_run(run, qrels, EvalConfig(threshold=2, precision_cutoffs=(1, 3)))
print("macro metrics for the gqe run (n=2):")
print(report.table())

# --- sweep the number of appended terms ------------------------------------
def run_for(n: int):
    engine.config.n = n
    return run_queries(engine, queries)

best_n, rows = grid_search_n(run_for, range(1, 11), qrels, objective="AP",
                             config=EvalConfig(threshold=2, precision_cutoffs=(1, 3)))
print(f"\nper-n sweep (best n = {best_n}):")
print("  n   AP       P@1      P@3")
for row in rows:
    print(f"  {row['n']:<3} {row['AP']:<8.4f} {row['P@1']:<8.4f} {row['P@3']:<8.4f}")
