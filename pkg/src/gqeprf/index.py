"""Inverted index with the collection statistics BM25 and RM3 need.

The on-disk format is a single versioned binary file:

    magic "GQEPRF-IDX" | version u8 | analyzer fingerprint (str) |
    N u32 | avgdl f64 |
    N x (doc_id str, doc_length u32) |
    vocab_size u32 |
    vocab_size x (term str, postings_len u32, postings_len x (ordinal u32, tf u32))

Strings are u32-length-prefixed UTF-8; terms are written sorted so that
identical indexes serialize to identical bytes. The layout is versioned:
round-trip fidelity is the contract, not cross-version byte compatibility.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .analysis import AnalyzerConfig, analyze
from .errors import ContractError, CorruptIndexError, DuplicateKeyError, UnsupportedVersionError

MAGIC = b"GQEPRF-IDX"
FORMAT_VERSION = 1


@dataclass
class InvertedIndex:
    """Immutable after construction; safe for concurrent readers."""

    postings: dict[str, list[tuple[int, int]]]  # term -> [(ordinal, tf)], sorted
    doc_ids: list[str]                          # ordinal -> external id
    doc_lengths: list[int]                      # ordinal -> token count
    avgdl: float
    analyzer_fingerprint: str
    _ordinals: dict[str, int] = field(default=None, repr=False)

    def __post_init__(self):
        if self._ordinals is None:
            self._ordinals = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def vocab_size(self) -> int:
        return len(self.postings)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def ordinal(self, doc_id: str) -> int:
        return self._ordinals[doc_id]


def build_index(documents, config: AnalyzerConfig | None = None) -> InvertedIndex:
    """Index a document collection. Ordinals follow ingestion order."""
    if config is None:
        config = AnalyzerConfig()
    docs = list(documents)
    if not docs:
        raise ContractError("cannot index an empty collection (avgdl undefined)")

    doc_ids: list[str] = []
    doc_lengths: list[int] = []
    postings: dict[str, list[tuple[int, int]]] = {}
    seen = set()
    for ordinal, doc in enumerate(docs):
        if doc.doc_id in seen:
            raise DuplicateKeyError(f"duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        tokens = analyze(doc.text, config)
        doc_ids.append(doc.doc_id)
        doc_lengths.append(len(tokens))
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((ordinal, tf))

    # built in ascending ordinal order already; keep the invariant explicit
    for plist in postings.values():
        plist.sort(key=lambda p: p[0])

    avgdl = sum(doc_lengths) / len(docs)
    return InvertedIndex(
        postings=postings,
        doc_ids=doc_ids,
        doc_lengths=doc_lengths,
        avgdl=avgdl,
        analyzer_fingerprint=config.fingerprint(),
    )


def _write_str(f, s: str) -> None:
    data = s.encode("utf-8")
    f.write(struct.pack("<I", len(data)))
    f.write(data)


def save_index(index: InvertedIndex, path) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<B", FORMAT_VERSION))
        _write_str(f, index.analyzer_fingerprint)
        f.write(struct.pack("<Id", index.n_docs, index.avgdl))
        for doc_id, length in zip(index.doc_ids, index.doc_lengths):
            _write_str(f, doc_id)
            f.write(struct.pack("<I", length))
        f.write(struct.pack("<I", index.vocab_size))
        for term in sorted(index.postings):
            plist = index.postings[term]
            _write_str(f, term)
            f.write(struct.pack("<I", len(plist)))
            f.write(struct.pack(f"<{2 * len(plist)}I", *(x for p in plist for x in p)))


class _Reader:
    def __init__(self, f, path):
        self.f = f
        self.path = path

    def read(self, n: int) -> bytes:
        data = self.f.read(n)
        if len(data) != n:
            raise CorruptIndexError(f"truncated index file {self.path}")
        return data

    def read_struct(self, fmt: str):
        return struct.unpack(fmt, self.read(struct.calcsize(fmt)))

    def read_str(self) -> str:
        (length,) = self.read_struct("<I")
        try:
            return self.read(length).decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptIndexError(f"bad string encoding in {self.path}")


def load_index(path) -> InvertedIndex:
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise UnsupportedVersionError(f"{path} is not a GQEPRF-IDX index file")
        r = _Reader(f, path)
        (version,) = r.read_struct("<B")
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(
                f"{path} has format version {version}, expected {FORMAT_VERSION}")
        fingerprint = r.read_str()
        n, avgdl = r.read_struct("<Id")
        doc_ids = []
        doc_lengths = []
        for _ in range(n):
            doc_ids.append(r.read_str())
            doc_lengths.append(r.read_struct("<I")[0])
        (vocab_size,) = r.read_struct("<I")
        postings: dict[str, list[tuple[int, int]]] = {}
        for _ in range(vocab_size):
            term = r.read_str()
            (plen,) = r.read_struct("<I")
            flat = r.read_struct(f"<{2 * plen}I")
            plist = [(flat[2 * i], flat[2 * i + 1]) for i in range(plen)]
            for ordinal, tf in plist:
                if ordinal >= n or tf < 1:
                    raise CorruptIndexError(f"inconsistent posting in {path}")
            postings[term] = plist
        if f.read(1):
            raise CorruptIndexError(f"trailing bytes in {path}")
    return InvertedIndex(
        postings=postings,
        doc_ids=doc_ids,
        doc_lengths=doc_lengths,
        avgdl=avgdl,
        analyzer_fingerprint=fingerprint,
    )
