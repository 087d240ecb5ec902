import pytest

from gqeprf.analysis import AnalyzerConfig, plain_config
from gqeprf.corpus import Document, Query
from gqeprf.index import build_index

FIXTURE_DOCS = [
    Document("d1", "the quick brown fox jumps over the lazy dog"),
    Document("d2", "a fast auburn fox leaped across sleeping hounds"),
    Document("d3", "quantum computing uses qubits for parallel computation"),
    Document("d4", "classical computers use binary bits and logic gates"),
    Document("d5", "the fox is a small omnivorous mammal"),
    Document("d6", "dogs are loyal domesticated animals related to wolves"),
    Document("d7", "computing machinery and intelligence discusses thinking machines"),
    Document("d8", "brown bears hibernate during the long cold winter"),
]

FIXTURE_QUERIES = [
    Query("q1", "quick fox"),
    Query("q2", "computing machines"),
    Query("q3", "hibernating bears"),
]

FIXTURE_QRELS_LINES = [
    "q1 0 d1 3",
    "q1 0 d2 2",
    "q1 0 d5 1",
    "q2 0 d3 2",
    "q2 0 d7 3",
    "q3 0 d8 3",
]


@pytest.fixture(scope="session")
def fixture_docs():
    return list(FIXTURE_DOCS)


@pytest.fixture(scope="session")
def fixture_doc_map():
    return {d.doc_id: d for d in FIXTURE_DOCS}


@pytest.fixture(scope="session")
def fixture_queries():
    return list(FIXTURE_QUERIES)


@pytest.fixture(scope="session")
def default_index():
    return build_index(FIXTURE_DOCS, AnalyzerConfig())


@pytest.fixture(scope="session")
def plain_index():
    return build_index(FIXTURE_DOCS, plain_config())


@pytest.fixture
def fixture_files(tmp_path):
    """The fixture corpus written out in its on-disk formats."""
    docs = tmp_path / "docs.tsv"
    docs.write_text("".join(f"{d.doc_id}\t{d.text}\n" for d in FIXTURE_DOCS),
                    encoding="utf-8")
    queries = tmp_path / "queries.tsv"
    queries.write_text("".join(f"{q.query_id}\t{q.text}\n" for q in FIXTURE_QUERIES),
                       encoding="utf-8")
    qrels = tmp_path / "qrels.txt"
    qrels.write_text("".join(line + "\n" for line in FIXTURE_QRELS_LINES),
                     encoding="utf-8")
    return {"docs": docs, "queries": queries, "qrels": qrels, "dir": tmp_path}
