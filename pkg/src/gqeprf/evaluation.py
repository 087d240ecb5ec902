"""Retrieval metrics (P@k, MAP, nDCG), run files, and the n-sweep driver.

Run files use the TREC 6-column format ``qid Q0 docid rank score tag``.
"Top-k retrieval accuracy" is macro-averaged precision@k with denominator
k, binarized at a configurable grade threshold; nDCG uses exponential
gains (2^g - 1) and a log2(r + 1) discount.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

from .errors import ContractError, ParseError
from .retrieval import ScoredDoc


@dataclass(frozen=True)
class EvalConfig:
    threshold: int = 1            # grade >= threshold counts as relevant
    precision_cutoffs: tuple = (5, 10)
    ndcg_cutoff: int = 20

    def metric_names(self) -> list[str]:
        return [f"P@{k}" for k in self.precision_cutoffs] + ["AP", f"nDCG@{self.ndcg_cutoff}"]


@dataclass
class EvalReport:
    config: EvalConfig
    per_query: dict[str, dict[str, float]]   # metric -> qid -> value
    macro: dict[str, float]                  # metric -> mean over evaluated queries
    unjudged_queries: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "config": {
                "threshold": self.config.threshold,
                "precision_cutoffs": list(self.config.precision_cutoffs),
                "ndcg_cutoff": self.config.ndcg_cutoff,
            },
            "macro": self.macro,
            "per_query": self.per_query,
            "unjudged_queries": self.unjudged_queries,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def table(self) -> str:
        """Aligned-column text table of the macro averages."""
        names = list(self.macro)
        width = max(len(n) for n in names)
        lines = [f"{n:<{width}}  {self.macro[n]:.4f}" for n in names]
        return "\n".join(lines)


def precision_at_k(run, qrels_for_query: dict[str, int], k: int, threshold: int) -> float:
    """Fraction of the top-k retrieved documents judged relevant.

    The denominator is always k, so short runs are penalized; unjudged
    documents count as non-relevant.
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    hits = sum(1 for doc in run[:k] if qrels_for_query.get(_doc_id(doc), 0) >= threshold)
    return hits / k


def average_precision(run, qrels_for_query: dict[str, int], threshold: int) -> float:
    """Mean of precision at each relevant retrieved rank, over all relevant docs."""
    n_relevant = sum(1 for grade in qrels_for_query.values() if grade >= threshold)
    if n_relevant == 0:
        return 0.0
    hits = 0
    total = 0.0
    for rank, doc in enumerate(run, 1):
        if qrels_for_query.get(_doc_id(doc), 0) >= threshold:
            hits += 1
            total += hits / rank
    return total / n_relevant


def ndcg(run, qrels_for_query: dict[str, int], cutoff: int) -> float:
    """Normalized DCG with gains 2^grade - 1 and discount log2(rank + 1).

    Defined as 0 when the ideal DCG is 0 (no judged gain for the query).
    """
    if cutoff < 1:
        raise ContractError(f"cutoff must be >= 1, got {cutoff}")
    dcg = 0.0
    for rank, doc in enumerate(run[:cutoff], 1):
        grade = qrels_for_query.get(_doc_id(doc), 0)
        dcg += (2.0 ** grade - 1.0) / math.log2(rank + 1)
    ideal = sorted(qrels_for_query.values(), reverse=True)[:cutoff]
    idcg = sum((2.0 ** g - 1.0) / math.log2(r + 1) for r, g in enumerate(ideal, 1))
    if idcg == 0.0:
        return 0.0
    return dcg / idcg


def _doc_id(doc) -> str:
    return doc.doc_id if isinstance(doc, ScoredDoc) else doc


def evaluate_run(run: dict[str, list], qrels: dict[str, dict[str, int]],
                 config: EvalConfig | None = None) -> EvalReport:
    """Per-query metrics plus macro-averages.

    Judged queries missing from the run contribute zeros; run queries with
    no judgments score zero and are flagged, never crash.
    """
    if config is None:
        config = EvalConfig()
    qids = sorted(set(qrels) | set(run))
    names = config.metric_names()
    per_query: dict[str, dict[str, float]] = {name: {} for name in names}
    unjudged = []
    for qid in qids:
        ranking = run.get(qid, [])
        judgments = qrels.get(qid)
        if judgments is None:
            judgments = {}
            unjudged.append(qid)
        for k in config.precision_cutoffs:
            per_query[f"P@{k}"][qid] = precision_at_k(ranking, judgments, k, config.threshold)
        per_query["AP"][qid] = average_precision(ranking, judgments, config.threshold)
        per_query[f"nDCG@{config.ndcg_cutoff}"][qid] = ndcg(ranking, judgments, config.ndcg_cutoff)
    macro = {}
    for name in names:
        values = per_query[name]
        macro[name] = sum(values.values()) / len(values) if values else 0.0
    return EvalReport(config=config, per_query=per_query, macro=macro,
                      unjudged_queries=unjudged)


def write_run(run: dict[str, list[ScoredDoc]], path, tag: str = "gqeprf") -> None:
    """Write a ranked run in TREC format, queries in dict order."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for qid, ranking in run.items():
            for doc in ranking:
                f.write(f"{qid} Q0 {doc.doc_id} {doc.rank} {doc.score:.6f} {tag}\n")


def read_run(path) -> dict[str, list[ScoredDoc]]:
    """Read a TREC run file; rankings are ordered by the rank column."""
    per_query: dict[str, list[ScoredDoc]] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise ParseError(f"expected 6 columns, got {len(parts)}",
                                 path=path, line_no=line_no)
            qid, _, doc_id, rank_str, score_str, _ = parts
            try:
                rank = int(rank_str)
                score = float(score_str)
            except ValueError:
                raise ParseError("bad rank or score", path=path, line_no=line_no)
            per_query.setdefault(qid, []).append(ScoredDoc(doc_id, score, rank))
    for qid, ranking in per_query.items():
        ranking.sort(key=lambda d: d.rank)
        seen = set()
        for expected, doc in enumerate(ranking, 1):
            if doc.rank != expected:
                raise ParseError(f"ranks for query {qid} are not consecutive from 1", path=path)
            if doc.doc_id in seen:
                raise ParseError(f"duplicate doc {doc.doc_id} for query {qid}", path=path)
            seen.add(doc.doc_id)
    return per_query


def grid_search_n(run_pipeline, n_values, qrels: dict[str, dict[str, int]],
                  objective: str = "AP", config: EvalConfig | None = None):
    """Run the expansion pipeline once per n and pick the best.

    ``run_pipeline(n)`` must return a run dict for that term count. Returns
    ``(best_n, rows)`` where rows hold every metric per n; ties go to the
    smallest n. Any pipeline failure aborts with the failing n identified.
    """
    n_values = sorted(set(n_values))
    if not n_values:
        raise ContractError("n_values must be non-empty")
    if config is None:
        config = EvalConfig()
    if objective not in config.metric_names():
        raise ContractError(
            f"objective {objective!r} not among computed metrics {config.metric_names()}")
    rows = []
    for n in n_values:
        try:
            run = run_pipeline(n)
        except Exception as exc:
            raise RuntimeError(f"pipeline failed for n={n}: {exc}") from exc
        report = evaluate_run(run, qrels, config)
        row = {"n": n}
        row.update(report.macro)
        rows.append(row)
    best = max(rows, key=lambda row: (row[objective], -row["n"]))
    return best["n"], rows


def write_sweep_csv(rows, path) -> None:
    """Per-n metric table as CSV for plotting."""
    if not rows:
        raise ContractError("no sweep rows to write")
    fields = list(rows[0])
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
