import pytest

import realpg as rpg


def _small_document(**sections):
    document = {
        "name": "tiny",
        "policy": {"vocab": {"vocab_size": 12}, "cot_length": 2},
        "train": {"steps": 3, "batch_size": 4, "group_size": 4, "log_interval": 1},
        "data": {"n_train": 16, "n_test": 12},
        "infer": {"n": 3},
    }
    for key, value in sections.items():
        document.setdefault(key, {}).update(value)
    return document


@pytest.fixture
def small_document():
    return _small_document


@pytest.fixture
def small_config():
    def _make(**sections):
        return rpg.config.validate(_small_document(**sections))

    return _make


@pytest.fixture
def datasets():
    env = rpg.config.EnvConfig()
    return rpg.data.make_dataset(env, 16, seed=1), rpg.data.make_dataset(env, 12, seed=2)
