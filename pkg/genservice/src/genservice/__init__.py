"""Expansion-term generation service with adversarial feedback-conditioned training."""

from .data import CganBatch, ToySample, make_cgan_samples, make_toy_dataset
from .model import Discriminator, ModelSize, build_generator, load_checkpoint, save_checkpoint
from .training import DivergenceError, TrainConfig, init_models, train_prf_cgan
from .vocab import build_tokenizer

__version__ = "0.1.0"
