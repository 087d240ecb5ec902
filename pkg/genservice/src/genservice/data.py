"""Toy training data and adversarial sample construction.

A toy sample is a query with one relevant document, one irrelevant document
and the target expansion terms. Adversarial batches pair genuine
(query [SEP] relevant document) positives against two kinds of negatives:
the query with an irrelevant document, and a generator-expanded query with
its pseudo-relevance feedback.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

SEP = "[SEP]"

NEGATIVE_IRRELEVANT = "irrelevant_doc"
NEGATIVE_GENERATED = "generated_query"

# topic -> (query word pool, document word pool)
_TOPICS = {
    "solar": (["solar", "panel", "sunlight"],
              ["photovoltaic", "energy", "grid", "rooftop", "inverter", "watt"]),
    "baking": (["bread", "oven", "dough"],
               ["yeast", "flour", "knead", "crust", "proof", "bake"]),
    "ocean": (["ocean", "tide", "reef"],
              ["coral", "salt", "wave", "current", "marine", "kelp"]),
    "space": (["rocket", "orbit", "launch"],
              ["booster", "payload", "thrust", "stage", "capsule", "apogee"]),
    "music": (["guitar", "chord", "melody"],
              ["string", "fret", "rhythm", "tune", "scale", "amplifier"]),
}


@dataclass(frozen=True)
class ToySample:
    query: str
    relevant_doc: str
    irrelevant_doc: str
    target_terms: str  # space-separated expansion terms the generator learns


@dataclass
class CganBatch:
    positives: list[str]
    negatives: list[tuple[str, str]]  # (text, negative type tag)


def make_toy_dataset(n_samples: int = 100, seed: int = 0) -> list[ToySample]:
    rng = random.Random(seed)
    topics = list(_TOPICS)
    samples = []
    for _ in range(n_samples):
        topic = rng.choice(topics)
        other = rng.choice([t for t in topics if t != topic])
        q_pool, d_pool = _TOPICS[topic]
        query = " ".join(rng.sample(q_pool, rng.randint(2, 3)))
        relevant = " ".join(rng.choices(q_pool + d_pool, k=rng.randint(8, 14)))
        o_q, o_d = _TOPICS[other]
        irrelevant = " ".join(rng.choices(o_q + o_d, k=rng.randint(8, 14)))
        targets = " ".join(rng.sample(d_pool, 3))
        samples.append(ToySample(query, relevant, irrelevant, targets))
    return samples


def all_texts(samples) -> list[str]:
    out = []
    for s in samples:
        out.extend([s.query, s.relevant_doc, s.irrelevant_doc, s.target_terms, SEP])
    return out


def save_dataset(samples, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in samples:
            f.write(json.dumps(s.__dict__, ensure_ascii=False) + "\n")


def load_dataset(path) -> list[ToySample]:
    samples = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                samples.append(ToySample(**json.loads(line)))
    return samples


def make_cgan_samples(query: str, relevant_docs, irrelevant_docs, generate_terms) -> CganBatch:
    """Build one adversarial batch for a query.

    ``generate_terms(text)`` runs the current generator on a
    "query [SEP] document" input and returns term strings. The query's
    pseudo-relevance feedback at toy scale is its relevant documents.
    """
    relevant_docs = list(relevant_docs)
    irrelevant_docs = list(irrelevant_docs)
    if not relevant_docs or not irrelevant_docs:
        raise ValueError("need at least one relevant and one irrelevant document")

    positives = [f"{query} {SEP} {doc}" for doc in relevant_docs]
    negatives = [(f"{query} {SEP} {doc}", NEGATIVE_IRRELEVANT) for doc in irrelevant_docs]

    generated = []
    for doc in relevant_docs:
        generated.extend(generate_terms(f"{query} {SEP} {doc}"))
    expanded = query if not generated else query + " " + " ".join(dict.fromkeys(generated))
    negatives.extend((f"{expanded} {SEP} {doc}", NEGATIVE_GENERATED) for doc in relevant_docs)
    return CganBatch(positives=positives, negatives=negatives)
