"""Text analysis: tokenization, stopword removal, Porter stemming.

The default configuration (lowercase, Unicode-alphanumeric tokens, a fixed
33-word English stopword list shipped with the package, Porter stemming)
approximates the classic Lucene English analyzer. Analysis is deterministic:
the same config and text always produce the same token sequence.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import ContractError

# Maximal runs of Unicode alphanumerics (underscore excluded).
DEFAULT_TOKEN_PATTERN = r"[^\W_]+"

_VOWELS = "aeiou"


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        # y is a consonant unless preceded by a consonant
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences in ``stem`` (the form [C](VC)^m[V])."""
    n = len(stem)
    i = 0
    while i < n and _is_cons(stem, i):
        i += 1
    m = 0
    while i < n:
        while i < n and not _is_cons(stem, i):
            i += 1
        if i >= n:
            break
        m += 1
        while i < n and _is_cons(stem, i):
            i += 1
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _is_cons(word, len(word) - 1)


def _ends_cvc(word: str) -> bool:
    # consonant-vowel-consonant, final consonant not w, x or y
    n = len(word)
    if n < 3:
        return False
    if not (_is_cons(word, n - 3) and not _is_cons(word, n - 2) and _is_cons(word, n - 1)):
        return False
    return word[-1] not in "wxy"


# (suffix, replacement) tables for steps 2-4; within a step only the rule
# with the longest matching suffix is considered.
_STEP2 = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]

_STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4 = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]


def _longest_match(word: str, suffixes) -> str | None:
    best = None
    for suf in suffixes:
        if word.endswith(suf) and (best is None or len(suf) > len(best)):
            best = suf
    return best


@lru_cache(maxsize=100_000)
def porter_stem(word: str) -> str:
    """Stem a lowercase word with the classic Porter suffix-stripping algorithm.

    Follows the original 1980 rule tables, including the reference
    implementation's convention of leaving words of length <= 2 untouched.
    """
    if len(word) <= 2:
        return word
    w = word

    # step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    # step 1b
    stripped = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed"):
        if _has_vowel(w[:-2]):
            w = w[:-2]
            stripped = True
    elif w.endswith("ing"):
        if _has_vowel(w[:-3]):
            w = w[:-3]
            stripped = True
    if stripped:
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _ends_double_cons(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w += "e"

    # step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # step 2
    suf = _longest_match(w, (s for s, _ in _STEP2))
    if suf is not None:
        stem = w[: -len(suf)]
        if _measure(stem) > 0:
            w = stem + dict(_STEP2)[suf]

    # step 3
    suf = _longest_match(w, (s for s, _ in _STEP3))
    if suf is not None:
        stem = w[: -len(suf)]
        if _measure(stem) > 0:
            w = stem + dict(_STEP3)[suf]

    # step 4
    suf = _longest_match(w, _STEP4)
    if suf is not None:
        stem = w[: -len(suf)]
        if _measure(stem) > 1:
            if suf != "ion" or (stem and stem[-1] in "st"):
                w = stem

    # step 5a
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            w = stem

    # step 5b
    if w.endswith("l") and _ends_double_cons(w) and _measure(w) > 1:
        w = w[:-1]

    return w


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    """The packaged English stopword list (one token per line)."""
    text = resources.files("gqeprf").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def load_stopwords(path) -> frozenset[str]:
    """Load a stopword list from a UTF-8 file, one token per line."""
    with open(path, encoding="utf-8") as f:
        return frozenset(line.strip() for line in f if line.strip())


@dataclass(frozen=True)
class AnalyzerConfig:
    """Deterministic analysis settings shared by indexing and expansion."""

    lowercase: bool = True
    stopwords: frozenset = field(default_factory=default_stopwords)
    stemmer: str = "porter"  # "porter" or "none"
    token_pattern: str = DEFAULT_TOKEN_PATTERN

    def __post_init__(self):
        if self.stemmer not in ("porter", "none"):
            raise ContractError(f"unknown stemmer {self.stemmer!r}")
        if not isinstance(self.stopwords, frozenset):
            object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def fingerprint(self) -> str:
        """Stable hash of the configuration, stored in index files."""
        payload = json.dumps(
            [self.lowercase, sorted(self.stopwords), self.stemmer, self.token_pattern],
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def plain_config() -> AnalyzerConfig:
    """Lowercase-only analysis: no stopwords, no stemming."""
    return AnalyzerConfig(stopwords=frozenset(), stemmer="none")


@lru_cache(maxsize=16)
def _compiled(pattern: str):
    return re.compile(pattern)


def analyze(text: str, config: AnalyzerConfig | None = None) -> list[str]:
    """Turn raw text into the normalized token sequence used everywhere.

    Pipeline: tokenize, lowercase, drop stopwords, stem. Empty text gives
    an empty sequence.
    """
    if config is None:
        config = AnalyzerConfig()
    tokens = _compiled(config.token_pattern).findall(text)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    if config.stemmer == "porter":
        tokens = [porter_stem(t) for t in tokens]
    return tokens
