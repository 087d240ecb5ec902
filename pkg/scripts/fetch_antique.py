#!/usr/bin/env python3
"""Download the ANTIQUE collection, test queries and qrels.

The files are already in the formats the engine reads (id<TAB>text and
TREC qrels), so they are saved as-is. Afterwards:

    export GQEPRF_ANTIQUE_DIR=data/antique
    pytest tests/test_acceptance.py -k antique -s

Not part of the engine contract; needs network access.
"""

import argparse
import sys
from pathlib import Path

import requests

BASE = "https://ciir.cs.umass.edu/downloads/Antique"
FILES = [
    "antique-collection.txt",      # 34,011 docs, doc_id<TAB>text
    "antique-test-queries.txt",    # 200 test queries, qid<TAB>text
    "antique-test.qrel",           # graded judgments, grades 1-4
    "antique-train-queries.txt",
    "antique-train.qrel",
]


def fetch(url: str, dest: Path) -> None:
    print(f"fetching {url}")
    resp = requests.get(url, timeout=120, stream=True)
    resp.raise_for_status()
    with open(dest, "wb") as f:
        for chunk in resp.iter_content(1 << 20):
            f.write(chunk)
    print(f"  -> {dest} ({dest.stat().st_size:,} bytes)")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/antique", help="target directory")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in FILES:
        dest = out / name
        if dest.exists():
            print(f"already present: {dest}")
            continue
        fetch(f"{BASE}/{name}", dest)
    print(f"\ndone; set GQEPRF_ANTIQUE_DIR={out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
