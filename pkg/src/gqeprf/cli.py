"""Command-line surface: ``gqeprf index|run|eval|sweep|serve-mock``.

All diagnostics go to stderr, data to files or stdout. Exit status 0 on
success, 2 for missing/unreadable inputs, 1 for runtime failures. Reruns
with identical inputs and config produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import evaluation
from .corpus import load_documents, load_qrels, load_queries, qrels_by_query
from .errors import GqeprfError
from .expansion import MockGenerator
from .genclient import ENDPOINT_ENV_VAR
from .index import build_index, load_index, save_index
from .pipeline import SearchEngine, make_config, run_queries


def _fail(message: str, code: int = 1) -> int:
    print(f"gqeprf: {message}", file=sys.stderr)
    return code


def _require_file(path: str) -> bool:
    return path is not None and os.path.isfile(path)


def cmd_index(args) -> int:
    if not _require_file(args.docs):
        return _fail(f"document file not found: {args.docs}", 2)
    cfg = make_config(args.config, stopwords_path=args.stopwords, stemmer=args.stemmer)
    try:
        docs = load_documents(args.docs, args.format)
        index = build_index(docs, cfg.analyzer())
        save_index(index, args.out)
    except GqeprfError as exc:
        return _fail(str(exc))
    print(f"indexed {index.n_docs} documents  avgdl={index.avgdl:.4f}  "
          f"vocabulary={index.vocab_size}")
    return 0


def _load_engine(args, need_docs: bool):
    if not _require_file(args.index):
        raise SystemExit(_fail(f"index file not found: {args.index}", 2))
    cfg = make_config(
        args.config,
        k1=args.k1, b=args.b, depth=args.depth, method=args.method,
        fb_docs=args.fb_docs, fb_terms=args.fb_terms, orig_weight=args.orig_weight,
        n=args.n, token_budget=args.token_budget, generator=args.generator,
        timeout=args.timeout, rerank_scorer=args.rerank_scorer,
        rerank_depth=args.rerank_depth, scorer_endpoint=args.scorer_endpoint,
        workers=args.workers, stopwords_path=args.stopwords, stemmer=args.stemmer,
    )
    documents = None
    if need_docs or cfg.method != "none" or cfg.rerank_scorer == "external":
        if not _require_file(args.docs):
            raise SystemExit(_fail(
                f"document file needed for method={cfg.method}: {args.docs}", 2))
        documents = {d.doc_id: d for d in load_documents(args.docs, args.format)}
    index = load_index(args.index)
    return SearchEngine(index, documents, cfg), cfg


def cmd_run(args) -> int:
    if not _require_file(args.queries):
        return _fail(f"query file not found: {args.queries}", 2)
    try:
        engine, cfg = _load_engine(args, need_docs=False)
        with engine:
            queries = load_queries(args.queries)
            run = run_queries(engine, queries)
        evaluation.write_run(run, args.out, tag=cfg.run_tag())
    except SystemExit as exc:
        return exc.code
    except (GqeprfError, RuntimeError) as exc:
        return _fail(str(exc))
    n_results = sum(len(r) for r in run.values())
    print(f"wrote {n_results} results for {len(run)} queries to {args.out}",
          file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    for path in (args.run, args.qrels):
        if not _require_file(path):
            return _fail(f"file not found: {path}", 2)
    try:
        run = evaluation.read_run(args.run)
        qrels = qrels_by_query(load_qrels(args.qrels))
        config = evaluation.EvalConfig(threshold=args.threshold,
                                       precision_cutoffs=tuple(args.p_cutoffs),
                                       ndcg_cutoff=args.ndcg_cutoff)
        report = evaluation.evaluate_run(run, qrels, config)
    except GqeprfError as exc:
        return _fail(str(exc))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as f:
            f.write(report.to_json() + "\n")
    print(report.table())
    if report.unjudged_queries:
        print(f"warning: {len(report.unjudged_queries)} run queries have no judgments",
              file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    for path in (args.queries, args.qrels):
        if not _require_file(path):
            return _fail(f"file not found: {path}", 2)
    try:
        engine, cfg = _load_engine(args, need_docs=False)
        with engine:
            queries = load_queries(args.queries)
            qrels = qrels_by_query(load_qrels(args.qrels))
            eval_config = evaluation.EvalConfig(threshold=cfg.threshold,
                                                ndcg_cutoff=cfg.ndcg_cutoff)
            n_values = range(args.n_min, args.n_max + 1)

            def run_for(n: int):
                engine.config.n = n
                return run_queries(engine, queries)

            best_n, rows = evaluation.grid_search_n(run_for, n_values, qrels,
                                                    objective=args.objective,
                                                    config=eval_config)
        evaluation.write_sweep_csv(rows, args.csv)
    except SystemExit as exc:
        return exc.code
    except (GqeprfError, RuntimeError) as exc:
        return _fail(str(exc))
    print(f"best n = {best_n} by {args.objective}; table written to {args.csv}")
    return 0


class _MockHandler(BaseHTTPRequestHandler):
    mock: MockGenerator = None

    def do_POST(self):
        if self.path != "/generate":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            message = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            response = {"type": "error", "error": "invalid JSON"}
        else:
            response = self.mock.handle(message)
        body = json.dumps(response, ensure_ascii=False).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):  # quiet by default
        pass


def serve_mock_stdio(mock: MockGenerator, stdin=None, stdout=None) -> None:
    """Answer JSON-lines generate requests until EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            response = {"type": "error", "error": "invalid JSON"}
        else:
            response = mock.handle(message)
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()


def cmd_serve_mock(args) -> int:
    if not _require_file(args.index):
        return _fail(f"index file not found: {args.index}", 2)
    cfg = make_config(args.config, stopwords_path=args.stopwords, stemmer=args.stemmer)
    try:
        index = load_index(args.index)
    except GqeprfError as exc:
        return _fail(str(exc))
    mock = MockGenerator(index, cfg.analyzer())
    if args.port is not None:
        _MockHandler.mock = mock
        server = ThreadingHTTPServer((args.host, args.port), _MockHandler)
        print(f"mock generator listening on http://{args.host}:{server.server_address[1]}/generate",
              file=sys.stderr)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        return 0
    serve_mock_stdio(mock)
    return 0


def _add_analyzer_flags(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--stopwords", help="stopword list file, one token per line")
    p.add_argument("--stemmer", choices=["porter", "none"], default=None)


def _add_pipeline_flags(p):
    _add_analyzer_flags(p)
    p.add_argument("--index", required=True, help="index file built by 'gqeprf index'")
    p.add_argument("--docs", help="document TSV/JSONL (needed for expansion/rerank)")
    p.add_argument("--format", choices=["tsv", "jsonl"], default="tsv")
    p.add_argument("--method", choices=["none", "rm3", "prf", "gqe"], default=None)
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--depth", type=int, default=None, help="retrieval depth (default 1000)")
    p.add_argument("--fb-docs", type=int, default=None, dest="fb_docs")
    p.add_argument("--fb-terms", type=int, default=None, dest="fb_terms")
    p.add_argument("--orig-weight", type=float, default=None, dest="orig_weight")
    p.add_argument("-n", "--n", type=int, default=None,
                   help="number of expansion terms appended (default 7)")
    p.add_argument("--token-budget", type=int, default=None, dest="token_budget")
    p.add_argument("--generator", default=os.environ.get(ENDPOINT_ENV_VAR),
                   help="'mock', http(s)://..., or stdio:COMMAND "
                        f"(default: ${ENDPOINT_ENV_VAR} or 'mock')")
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--rerank-scorer", choices=["none", "identity", "bm25_rescore", "external"],
                   default=None, dest="rerank_scorer")
    p.add_argument("--rerank-depth", type=int, default=None, dest="rerank_depth")
    p.add_argument("--scorer-endpoint", default=None, dest="scorer_endpoint")
    p.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gqeprf",
        description="Sparse retrieval with pluggable query expansion.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and save an inverted index")
    _add_analyzer_flags(p)
    p.add_argument("--docs", required=True)
    p.add_argument("--format", choices=["tsv", "jsonl"], default="tsv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("run", help="expand, retrieve and write a TREC run file")
    _add_pipeline_flags(p)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score a run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--threshold", type=int, default=1,
                   help="grade >= threshold counts as relevant")
    p.add_argument("--p-cutoffs", type=int, nargs="+", default=[5, 10], dest="p_cutoffs")
    p.add_argument("--ndcg-cutoff", type=int, default=20, dest="ndcg_cutoff")
    p.add_argument("--json", help="also write the full report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid-search the number of expansion terms")
    _add_pipeline_flags(p)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--n-min", type=int, default=1, dest="n_min")
    p.add_argument("--n-max", type=int, default=10, dest="n_max")
    p.add_argument("--objective", default="AP")
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve-mock",
                       help="serve the deterministic mock generator on the wire protocol")
    _add_analyzer_flags(p)
    p.add_argument("--index", required=True)
    p.add_argument("--port", type=int, default=None,
                   help="serve HTTP on this port instead of stdio")
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve_mock)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "generator", None) is None and hasattr(args, "generator"):
        args.generator = "mock"
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
