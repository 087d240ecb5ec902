import pytest

from genservice.data import make_toy_dataset
from genservice.model import save_checkpoint
from genservice.training import TrainConfig, init_models


@pytest.fixture(scope="session")
def toy_samples():
    return make_toy_dataset(100, seed=0)


@pytest.fixture(scope="session")
def base_models(toy_samples):
    """Untrained generator/discriminator/tokenizer over the toy vocabulary."""
    return init_models(toy_samples, TrainConfig(seed=0))


@pytest.fixture(scope="session")
def base_checkpoint(base_models, tmp_path_factory):
    generator, discriminator, tokenizer = base_models
    path = tmp_path_factory.mktemp("ckpt") / "base"
    save_checkpoint(path, generator, discriminator, tokenizer, {"trained": False})
    return path
