import os

import pytest
import torch

import realpg as rpg
from realpg.utils import make_temp_directory


@pytest.fixture
def ds():
    return rpg.data.make_dataset(rpg.config.EnvConfig(), 20, seed=0)


def test_get(ds):
    assert isinstance(ds[0], rpg.data.JudgeExample)


def test_len(ds):
    assert len(ds) == 20


def test_index_type(ds):
    with pytest.raises(TypeError):
        ds[:5]


def test_save_and_load(ds):
    with make_temp_directory() as tempdir:
        path = os.path.join(tempdir, "train.jsonl")
        ds.save(path)
        with open(path) as handle:
            assert len(handle.read().splitlines()) == 21
        loaded = rpg.data.JudgeDataset.load(path)
    assert torch.equal(loaded.features, ds.features)
    assert torch.equal(loaded.golds, ds.golds)
    assert torch.equal(loaded.qualities, ds.qualities)
    assert loaded.seed == 0
    assert loaded.config == ds.config


def test_save_byte_identical():
    config = rpg.config.EnvConfig()
    with make_temp_directory() as tempdir:
        paths = [os.path.join(tempdir, name) for name in ("a.jsonl", "b.jsonl")]
        for path in paths:
            rpg.data.make_dataset(config, 50, seed=9).save(path)
        contents = [open(path, "rb").read() for path in paths]
    assert contents[0] == contents[1]


def test_truncated_file(ds):
    with make_temp_directory() as tempdir:
        path = os.path.join(tempdir, "train.jsonl")
        ds.save(path)
        with open(path) as handle:
            lines = handle.read().splitlines()
        with open(path, "w") as handle:
            handle.write("\n".join(lines[:-3]) + "\n")
        with pytest.raises(rpg.exceptions.CompatibilityError):
            rpg.data.JudgeDataset.load(path)


def test_record_cut_mid_line(ds):
    with make_temp_directory() as tempdir:
        path = os.path.join(tempdir, "train.jsonl")
        ds.save(path)
        with open(path, "rb") as handle:
            content = handle.read()
        with open(path, "wb") as handle:
            handle.write(content[:-20])
        with pytest.raises(rpg.exceptions.CompatibilityError):
            rpg.data.JudgeDataset.load(path)


def test_record_missing_field(ds):
    with make_temp_directory() as tempdir:
        path = os.path.join(tempdir, "train.jsonl")
        ds.save(path)
        with open(path) as handle:
            lines = handle.read().splitlines()
        lines[3] = '{"q": 2, "f": [0.0, 1.0, 0.0, 0.0, 0.0]}'
        with open(path, "w") as handle:
            handle.write("\n".join(lines) + "\n")
        with pytest.raises(rpg.exceptions.CompatibilityError):
            rpg.data.JudgeDataset.load(path)


def test_missing_file():
    with make_temp_directory() as tempdir:
        with pytest.raises(rpg.exceptions.ConfigError):
            rpg.data.JudgeDataset.load(os.path.join(tempdir, "absent.jsonl"))
