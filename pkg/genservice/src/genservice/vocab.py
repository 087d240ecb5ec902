"""Word-level tokenizer built from a training corpus.

The sandbox trains from scratch at toy scale, so the tokenizer is a plain
whitespace word-level vocabulary rather than a pretrained subword model.
Special tokens follow the BART conventions plus the literal "[SEP]" marker
used between query and document text.
"""

from __future__ import annotations

from collections import Counter

from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from transformers import PreTrainedTokenizerFast

PAD, BOS, EOS, UNK, SEP = "<pad>", "<s>", "</s>", "<unk>", "[SEP]"
SPECIALS = [PAD, BOS, EOS, UNK, SEP]


def build_tokenizer(texts, min_freq: int = 1, max_words: int = 2000) -> PreTrainedTokenizerFast:
    """Vocabulary = the most frequent whitespace words of ``texts``."""
    counts = Counter()
    for text in texts:
        counts.update(text.split())
    words = [w for w, c in counts.most_common(max_words)
             if c >= min_freq and w not in SPECIALS]
    vocab = {tok: i for i, tok in enumerate(SPECIALS + sorted(words))}
    core = Tokenizer(WordLevel(vocab, unk_token=UNK))
    core.pre_tokenizer = Whitespace()
    return PreTrainedTokenizerFast(
        tokenizer_object=core,
        pad_token=PAD, bos_token=BOS, eos_token=EOS, unk_token=UNK,
        additional_special_tokens=[SEP],
    )


def special_ids(tokenizer: PreTrainedTokenizerFast) -> set[int]:
    return set(tokenizer.all_special_ids)
