"""Generator and discriminator models.

The generator is a small encoder-decoder of the BART architecture family;
the discriminator reuses the same encoder architecture with a binary
classification head on the final-position hidden state. Inputs longer than
1024 tokens are always truncated model-side, whatever the client sent.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import torch
from torch import nn
from transformers import BartConfig, BartForConditionalGeneration, PreTrainedTokenizerFast
from transformers.models.bart.modeling_bart import BartEncoder
from transformers.utils import logging as hf_logging

hf_logging.disable_progress_bar()

MAX_INPUT_TOKENS = 1024

# keep the discriminator's probability strictly inside (0, 1)
_PROB_EPS = 1e-6


@dataclass
class ModelSize:
    d_model: int = 64
    layers: int = 2
    heads: int = 2
    ffn: int = 128


def make_bart_config(vocab_size: int, size: ModelSize) -> BartConfig:
    return BartConfig(
        vocab_size=vocab_size,
        d_model=size.d_model,
        encoder_layers=size.layers,
        decoder_layers=size.layers,
        encoder_attention_heads=size.heads,
        decoder_attention_heads=size.heads,
        encoder_ffn_dim=size.ffn,
        decoder_ffn_dim=size.ffn,
        max_position_embeddings=MAX_INPUT_TOKENS,
        pad_token_id=0,
        bos_token_id=1,
        eos_token_id=2,
        decoder_start_token_id=2,
        forced_eos_token_id=None,
    )


def build_generator(vocab_size: int, size: ModelSize | None = None) -> BartForConditionalGeneration:
    config = make_bart_config(vocab_size, size or ModelSize())
    return BartForConditionalGeneration(config)


class Discriminator(nn.Module):
    """Feedback-conditioned binary classifier over (query [SEP] document) text."""

    def __init__(self, config: BartConfig):
        super().__init__()
        self.config = config
        self.encoder = BartEncoder(config)
        self.head = nn.Linear(config.d_model, 1)

    def forward(self, input_ids, attention_mask):
        hidden = self.encoder(input_ids=input_ids,
                              attention_mask=attention_mask).last_hidden_state
        # hidden state of the last real (non-padding) token of each sequence
        last = attention_mask.sum(dim=1) - 1
        final = hidden[torch.arange(hidden.size(0)), last]
        logits = self.head(final).squeeze(-1)
        return torch.sigmoid(logits).clamp(_PROB_EPS, 1.0 - _PROB_EPS)


def encode_texts(tokenizer: PreTrainedTokenizerFast, texts, device="cpu"):
    batch = tokenizer(list(texts), return_tensors="pt", padding=True,
                      truncation=True, max_length=MAX_INPUT_TOKENS)
    return {k: v.to(device) for k, v in batch.items()}


def save_checkpoint(path, generator, discriminator, tokenizer, meta=None) -> None:
    """Checkpoint layout: generator/ tokenizer/ discriminator.pt meta.json."""
    os.makedirs(path, exist_ok=True)
    generator.save_pretrained(os.path.join(path, "generator"))
    tokenizer.save_pretrained(os.path.join(path, "tokenizer"))
    torch.save(discriminator.state_dict(), os.path.join(path, "discriminator.pt"))
    with open(os.path.join(path, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta or {}, f, indent=2)


def load_checkpoint(path):
    generator = BartForConditionalGeneration.from_pretrained(os.path.join(path, "generator"))
    tokenizer = PreTrainedTokenizerFast.from_pretrained(os.path.join(path, "tokenizer"))
    discriminator = Discriminator(generator.config)
    state = torch.load(os.path.join(path, "discriminator.pt"), weights_only=True)
    discriminator.load_state_dict(state)
    with open(os.path.join(path, "meta.json"), encoding="utf-8") as f:
        meta = json.load(f)
    return generator, discriminator, tokenizer, meta
