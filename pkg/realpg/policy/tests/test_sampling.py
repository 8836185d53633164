import math

import numpy as np
import pytest
import torch

import realpg as rpg
from realpg.policy import sampling, softmax
from realpg.utils import TRAIN, stream


@pytest.fixture
def config():
    return rpg.config.PolicyConfig(vocab={"vocab_size": 12}, cot_length=3)


def test_single_cot_token_support(config):
    # a bias that swamps every other CoT token leaves one token of support
    params = torch.zeros(config.n_params, dtype=torch.float64)
    params[-config.vocab_size + 10] = 1000.0
    traj = sampling.sample_trajectory(params, torch.zeros(5), 0, config, stream(0, TRAIN, 0, 0))
    assert traj.cot.tolist() == [10, 10, 10]
    assert traj.logp_cot == 0.0
    assert traj.response_length == 4


def test_trajectory_fields(config):
    params = softmax.init_policy(config, 0)
    traj = sampling.sample_trajectory(params, torch.ones(5), 3, config, stream(0, TRAIN, 0, 3, 0))
    assert traj.prompt_idx == 3
    assert all(10 <= t < 12 for t in traj.cot.tolist())
    assert 0 <= traj.score < 12
    assert traj.logp_cot <= 0.0
    assert float(traj.score_dist.sum()) == pytest.approx(1.0, abs=1e-12)


def test_sample_trajectory_deterministic(config):
    params = softmax.init_policy(config, 0)
    a = sampling.sample_trajectory(params, torch.ones(5), 0, config, stream(4, TRAIN, 0, 0, 1))
    b = sampling.sample_trajectory(params, torch.ones(5), 0, config, stream(4, TRAIN, 0, 0, 1))
    assert torch.equal(a.cot, b.cot) and a.score == b.score and a.logp_cot == b.logp_cot


def test_group_matches_single_draws(config):
    params = softmax.init_policy(config, 1)
    prompt = torch.ones(5)
    group = sampling.sample_group(params, prompt, 2, 6, config, seed=9, key=(TRAIN, 0))
    smaller = sampling.sample_group(params, prompt, 2, 3, config, seed=9, key=(TRAIN, 0))
    for i, traj in enumerate(group):
        single = sampling.sample_trajectory(params, prompt, 2, config, stream(9, TRAIN, 0, 2, i))
        assert torch.equal(traj.cot, single.cot)
        assert traj.score == single.score
    for a, b in zip(smaller, group):
        assert torch.equal(a.cot, b.cot) and a.score == b.score


def test_uniform_score_frequencies(config):
    n = 100000
    params = torch.zeros(config.n_params, dtype=torch.float64)
    draws = np.random.default_rng(0).random((n, config.cot_length + 1))
    draws = 1.0 - draws
    _, score = sampling.sample_from_uniforms(params, torch.zeros(5), draws, config)
    counts = torch.bincount(score, minlength=12).to(torch.float64)
    p = 1.0 / 12
    sigma = math.sqrt(n * p * (1 - p))
    assert torch.all((counts - n * p).abs() <= 3 * sigma + 1)


def test_cot_sequences():
    config = rpg.config.PolicyConfig(vocab={"vocab_size": 12}, cot_length=2)
    seqs = sampling.cot_sequences(config)
    assert seqs.shape == (4, 2)
    assert seqs.tolist() == [[10, 10], [10, 11], [11, 10], [11, 11]]


def test_greedy_peaked(config):
    params = torch.zeros(config.n_params, dtype=torch.float64)
    params[-config.vocab_size + 5] = 3.0
    _, score = sampling.greedy_decode(params, torch.zeros(5), config)
    assert score == 5


def test_greedy_tie_lowest_id(config):
    params = torch.zeros(config.n_params, dtype=torch.float64)
    params[-config.vocab_size + 2] = 2.0
    params[-config.vocab_size + 7] = 2.0
    cot, score = sampling.greedy_decode(params, torch.zeros(5), config)
    assert score == 2
    assert cot.tolist() == [10, 10, 10]


def test_greedy_temperature_invariant():
    prompt = torch.randn(5, generator=torch.Generator().manual_seed(0), dtype=torch.float64)
    results = []
    for T in (0.5, 1.0, 3.0):
        config = rpg.config.PolicyConfig(vocab={"vocab_size": 14}, temperature=T)
        params = softmax.init_policy(config.model_copy(update={"init_scale": 1.0}), 2)
        cot, score = sampling.greedy_decode(params, prompt, config)
        results.append((cot.tolist(), score))
    assert results[0] == results[1] == results[2]
