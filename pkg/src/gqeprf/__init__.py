"""Sparse retrieval engine with pluggable query expansion.

BM25 retrieval over a self-contained inverted index, pseudo-relevance
feedback expansion (RM3, offer-weight PRF, and generative expansion through
an external service), second-stage reranking, and TREC-style evaluation.
"""

from .analysis import AnalyzerConfig, analyze, porter_stem
from .corpus import Document, Judgment, Query, load_documents, load_qrels, load_queries
from .errors import (ContractError, CorruptIndexError, DuplicateKeyError, GqeprfError,
                     ParseError, ProtocolError, TransportError, UnsupportedVersionError)
from .expansion import (ExpandedQuery, ExpansionTerm, FeedbackSet, MockGenerator,
                        generative_expand, get_feedback, prf_offer_weight_expand,
                        reformulate, rm3_expand)
from .genclient import GenRequest, GenResponse, build_input, connect, request_terms
from .index import InvertedIndex, build_index, load_index, save_index
from .rerank import RerankConfig, rerank
from .retrieval import Bm25Params, ScoredDoc, WeightedQuery, bm25_term_score, search
from .evaluation import (EvalConfig, EvalReport, average_precision, evaluate_run,
                         grid_search_n, ndcg, precision_at_k, read_run, write_run)

__version__ = "0.1.0"
