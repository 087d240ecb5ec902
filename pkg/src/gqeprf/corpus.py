"""Corpus artifacts: documents, queries, relevance judgments, and their file I/O.

File formats:
  - documents / queries: ``id<TAB>text`` UTF-8, LF line endings, no header,
    or JSONL with ``{"id": ..., "text": ...}`` records
  - qrels: the TREC 4-column whitespace format ``qid 0 docid grade``
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import DuplicateKeyError, ParseError


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str


@dataclass(frozen=True)
class Judgment:
    query_id: str
    doc_id: str
    grade: int


def _iter_tsv(path):
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip("\n").rstrip("\r")
            if "\t" not in line:
                raise ParseError("expected id<TAB>text", path=path, line_no=line_no)
            rec_id, text = line.split("\t", 1)
            if not rec_id:
                raise ParseError("empty identifier", path=path, line_no=line_no)
            yield line_no, rec_id, text


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", path=path, line_no=line_no)
            if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
                raise ParseError("record must have 'id' and 'text' fields",
                                 path=path, line_no=line_no)
            rec_id = str(rec["id"])
            if not rec_id:
                raise ParseError("empty identifier", path=path, line_no=line_no)
            yield line_no, rec_id, str(rec["text"])


def _load_records(path, fmt):
    if fmt == "tsv":
        rows = _iter_tsv(path)
    elif fmt == "jsonl":
        rows = _iter_jsonl(path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    seen = set()
    out = []
    for line_no, rec_id, text in rows:
        if rec_id in seen:
            raise DuplicateKeyError(f"duplicate id {rec_id!r} in {path} line {line_no}")
        seen.add(rec_id)
        out.append((rec_id, text))
    return out


def load_documents(path, fmt: str = "tsv") -> list[Document]:
    """Load a document collection; duplicate doc_ids are an error."""
    return [Document(i, t) for i, t in _load_records(path, fmt)]


def load_queries(path, fmt: str = "tsv") -> list[Query]:
    """Load a query set; duplicate query_ids are an error."""
    return [Query(i, t) for i, t in _load_records(path, fmt)]


def save_documents(docs, path) -> None:
    """Write documents as ``id<TAB>text`` TSV (texts must not contain newlines)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for d in docs:
            f.write(f"{d.doc_id}\t{d.text}\n")


def load_qrels(path) -> list[Judgment]:
    """Load TREC qrels; one judgment per (query, doc), grades kept exactly."""
    judgments = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise ParseError(f"expected 4 columns, got {len(parts)}",
                                 path=path, line_no=line_no)
            qid, _, doc_id, grade_str = parts
            try:
                grade = int(grade_str)
            except ValueError:
                raise ParseError(f"non-integer grade {grade_str!r}",
                                 path=path, line_no=line_no)
            if (qid, doc_id) in seen:
                raise DuplicateKeyError(
                    f"duplicate judgment for ({qid}, {doc_id}) in {path} line {line_no}")
            seen.add((qid, doc_id))
            judgments.append(Judgment(qid, doc_id, grade))
    return judgments


def save_qrels(judgments, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for j in judgments:
            f.write(f"{j.query_id} 0 {j.doc_id} {j.grade}\n")


def qrels_by_query(judgments) -> dict[str, dict[str, int]]:
    """Group judgments as query_id -> {doc_id: grade}."""
    grouped: dict[str, dict[str, int]] = {}
    for j in judgments:
        grouped.setdefault(j.query_id, {})[j.doc_id] = j.grade
    return grouped
