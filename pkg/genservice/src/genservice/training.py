"""Adversarial training of the expansion-term generator.

Generator and discriminator are both conditioned on pseudo-relevance
feedback and updated alternately: the discriminator minimizes binary
cross-entropy separating genuine (query [SEP] relevant document) pairs
from the two negative types, and the generator minimizes a supervised
sequence likelihood on the target expansion terms plus
``alpha * (-log D(expanded query [SEP] feedback))`` evaluated with the
discriminator frozen. The adversarial term carries no gradient into the
generator (the expansion is discretely decoded), so it acts as a monitored
component while parameter updates flow through the supervised term.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace

import torch
from torch import nn

from .data import NEGATIVE_GENERATED, all_texts, make_cgan_samples
from .model import Discriminator, ModelSize, build_generator, encode_texts, save_checkpoint
from .vocab import build_tokenizer


class DivergenceError(RuntimeError):
    """Raised when a loss goes non-finite; the last good checkpoint stays on disk."""


@dataclass
class TrainConfig:
    epochs: int = 2
    batch_size: int = 4          # toy scale: <= 8
    lr: float = 1e-3
    alpha: float = 0.1
    gen_steps: int = 1           # generator updates per batch, 0 freezes it
    max_steps: int = 500
    seed: int = 0
    max_new_tokens: int = 8
    d_model: int = 64
    layers: int = 2
    heads: int = 2
    ffn: int = 128

    def size(self) -> ModelSize:
        return ModelSize(self.d_model, self.layers, self.heads, self.ffn)


def load_train_config(path) -> TrainConfig:
    """Parse the ``key = value`` training config file."""
    types = {f.name: f.type for f in fields(TrainConfig)}
    casts = {"int": int, "float": float}
    overrides = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path} line {line_no}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in types:
                raise ValueError(f"{path} line {line_no}: unknown key {key!r}")
            overrides[key] = casts[types[key]](value.strip())
    return replace(TrainConfig(), **overrides)


def init_models(samples, config: TrainConfig):
    """Seeded model construction; identical config + samples give identical weights."""
    torch.manual_seed(config.seed)
    tokenizer = build_tokenizer(all_texts(samples))
    generator = build_generator(len(tokenizer), config.size())
    discriminator = Discriminator(generator.config)
    return generator, discriminator, tokenizer


def _assert_finite(value: float, what: str, step: int) -> None:
    if not torch.isfinite(torch.tensor(value)):
        raise DivergenceError(f"{what} went non-finite at step {step}; "
                              "last good checkpoint retained")


def _supervised_loss(generator, tokenizer, batch, device) -> torch.Tensor:
    inputs = encode_texts(tokenizer, [f"{s.query} [SEP] {s.relevant_doc}" for s in batch], device)
    target_ids = [tokenizer(s.target_terms)["input_ids"] + [tokenizer.eos_token_id]
                  for s in batch]
    width = max(len(ids) for ids in target_ids)
    labels = torch.full((len(batch), width), -100, dtype=torch.long, device=device)
    for i, ids in enumerate(target_ids):
        labels[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
    return generator(**inputs, labels=labels).loss


def train_prf_cgan(samples, config: TrainConfig, out_dir) -> list[dict]:
    """Run the alternating loop; returns the per-step loss log.

    Checkpoints land in ``out_dir`` (initial state first, then after every
    epoch), so a divergence abort always leaves the last good state behind.
    The loss log is also written to ``out_dir/losses.jsonl``.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("no training samples")
    device = "cpu"
    generator, discriminator, tokenizer = init_models(samples, config)
    meta = {"train_config": config.__dict__}
    save_checkpoint(out_dir, generator, discriminator, tokenizer, meta)

    from .service import GenerationService  # shared greedy decode path
    service = GenerationService(generator, tokenizer, max_new_tokens=config.max_new_tokens)

    opt_d = torch.optim.Adam(discriminator.parameters(), lr=config.lr)
    opt_g = torch.optim.Adam(generator.parameters(), lr=config.lr)
    bce = nn.BCELoss()
    log: list[dict] = []
    step = 0

    for epoch in range(config.epochs):
        for start in range(0, len(samples), config.batch_size):
            if step >= config.max_steps:
                break
            batch = samples[start: start + config.batch_size]

            # adversarial samples from the current generator (greedy, no grads)
            generator.eval()
            positives, negatives = [], []
            for s in batch:
                cgan = make_cgan_samples(
                    s.query, [s.relevant_doc], [s.irrelevant_doc],
                    lambda text: [t for t, _ in service.generate_terms(text, max_terms=8)])
                positives.extend(cgan.positives)
                negatives.extend(cgan.negatives)
            generator.train()

            # discriminator step: BCE over genuine vs negative pairs
            discriminator.train()
            texts = positives + [t for t, _ in negatives]
            labels = torch.tensor([1.0] * len(positives) + [0.0] * len(negatives))
            probs = discriminator(**encode_texts(tokenizer, texts, device))
            d_loss = bce(probs, labels)
            opt_d.zero_grad()
            d_loss.backward()
            opt_d.step()
            _assert_finite(d_loss.item(), "discriminator loss", step)

            # generator step(s): supervised likelihood + frozen-discriminator term
            g_ce = g_adv = g_total = None
            for _ in range(config.gen_steps):
                ce = _supervised_loss(generator, tokenizer, batch, device)
                expanded = [t for t, tag in negatives if tag == NEGATIVE_GENERATED]
                with torch.no_grad():
                    discriminator.eval()
                    d_on_expanded = discriminator(**encode_texts(tokenizer, expanded, device))
                    adv = (-torch.log(d_on_expanded)).mean().item()
                total = ce + config.alpha * adv  # adv is a constant w.r.t. the generator
                opt_g.zero_grad()
                total.backward()
                opt_g.step()
                g_ce, g_adv, g_total = ce.item(), adv, total.item()
                _assert_finite(g_total, "generator loss", step)

            log.append({"step": step, "epoch": epoch, "d_loss": d_loss.item(),
                        "g_loss": g_total, "g_ce": g_ce, "g_adv": g_adv})
            step += 1
        save_checkpoint(out_dir, generator, discriminator, tokenizer, meta)

    with open(os.path.join(out_dir, "losses.jsonl"), "w", encoding="utf-8") as f:
        for entry in log:
            f.write(json.dumps(entry) + "\n")
    return log


def train_discriminator_only(positives, negatives, config: TrainConfig, tokenizer=None,
                             discriminator=None, eval_split: float = 0.2):
    """Plain supervised discriminator training on labelled text pairs.

    Used for the separability sanity check; returns (discriminator,
    held-out accuracy, steps used).
    """
    torch.manual_seed(config.seed)
    if tokenizer is None:
        tokenizer = build_tokenizer(list(positives) + list(negatives))
    if discriminator is None:
        discriminator = Discriminator(build_generator(len(tokenizer), config.size()).config)

    texts = list(positives) + list(negatives)
    labels = [1.0] * len(positives) + [0.0] * len(negatives)
    order = torch.randperm(len(texts)).tolist()
    texts = [texts[i] for i in order]
    labels = [labels[i] for i in order]
    n_eval = max(1, int(len(texts) * eval_split))
    train_texts, eval_texts = texts[n_eval:], texts[:n_eval]
    train_labels, eval_labels = labels[n_eval:], labels[:n_eval]

    opt = torch.optim.Adam(discriminator.parameters(), lr=config.lr)
    bce = nn.BCELoss()
    step = 0
    for step in range(1, config.max_steps + 1):
        i = (step * config.batch_size) % max(1, len(train_texts))
        batch = train_texts[i: i + config.batch_size] or train_texts[: config.batch_size]
        batch_labels = train_labels[i: i + config.batch_size] or train_labels[: config.batch_size]
        discriminator.train()
        probs = discriminator(**encode_texts(tokenizer, batch))
        loss = bce(probs, torch.tensor(batch_labels))
        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % 25 == 0 and _held_out_accuracy(discriminator, tokenizer,
                                                 eval_texts, eval_labels) >= 0.95:
            break
    accuracy = _held_out_accuracy(discriminator, tokenizer, eval_texts, eval_labels)
    return discriminator, accuracy, step


def _held_out_accuracy(discriminator, tokenizer, texts, labels) -> float:
    discriminator.eval()
    with torch.no_grad():
        probs = discriminator(**encode_texts(tokenizer, texts))
    predictions = (probs >= 0.5).float()
    return (predictions == torch.tensor(labels)).float().mean().item()
