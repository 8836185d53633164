import math
import os

import pandas as pd
import pytest
import torch

import realpg as rpg
from realpg import infer
from realpg.policy import sampling, softmax
from realpg.utils import EVAL, make_temp_directory, stream


@pytest.fixture
def config():
    return rpg.config.PolicyConfig(vocab={"vocab_size": 12}, cot_length=2)


@pytest.fixture
def dataset():
    return rpg.data.make_dataset(rpg.config.EnvConfig(), 30, seed=0)


def _params(config, seed, scale=0.5):
    g = torch.Generator().manual_seed(seed)
    return (torch.rand(config.n_params, generator=g, dtype=torch.float64) * 2 - 1) * scale


def test_rail_uniform_head(config):
    params = torch.zeros(config.n_params, dtype=torch.float64)
    for i in range(5):
        pred = infer.rail_predict(params, torch.ones(5), config, stream(i, EVAL, 0))
        assert pred.pred == pytest.approx(3.75)
        assert pred.mode == "rail"


def test_rail_symmetric_mass(config):
    params = torch.zeros(config.n_params, dtype=torch.float64)
    b = params[-config.vocab_size :]
    b[:] = -1000.0
    b[4] = b[6] = 0.0
    assert infer.rail_predict(params, torch.ones(5), config, stream(0, EVAL, 0)).pred == pytest.approx(5.0)


def test_rail_in_range(config, dataset):
    params = _params(config, 0, scale=2.0)
    for p in infer.predict(params, dataset, config, "rail", seed=1):
        assert 0.0 <= p.pred <= 9.0


def test_rail_distribution_matches_enumeration(config):
    params = _params(config, 1, scale=1.0)
    prompt = torch.ones(5, dtype=torch.float64)

    cots = sampling.cot_sequences(config)
    ev = softmax.evaluate(params, prompt, cots, config)
    weights = ev.logp_cot().exp()
    y_hat, _ = ev.rail()
    mean = float((weights * y_hat).sum())
    std = math.sqrt(float((weights * (y_hat - mean) ** 2).sum()))

    n = 4000
    rng = stream(3, EVAL, 0)
    values = [infer.rail_predict(params, prompt, config, rng).pred for _ in range(n)]
    assert abs(sum(values) / n - mean) <= 3 * std / math.sqrt(n) + 1e-12


def test_greedy_integer(config):
    params = torch.zeros(config.n_params, dtype=torch.float64)
    params[-config.vocab_size + 5] = 3.0
    pred = infer.greedy_predict(params, torch.ones(5), config)
    assert pred.pred == 5.0
    assert pred.mode == "greedy"


def test_average_of_one_is_rail(config):
    params = _params(config, 2)
    prompt = torch.ones(5, dtype=torch.float64)
    single = infer.rail_predict(params, prompt, config, stream(7, EVAL, 3))
    averaged = infer.average_of_n(params, prompt, config, 1, stream(7, EVAL, 3))
    assert single.pred == averaged.pred
    assert averaged.mode == "rail_avg_n(1)"


def test_average_of_n_is_mean_of_constituents(config):
    params = _params(config, 3)
    prompt = torch.ones(5, dtype=torch.float64)
    rng = stream(0, EVAL, 0)
    constituents = [infer.rail_predict(params, prompt, config, rng).pred for _ in range(4)]
    averaged = infer.average_of_n(params, prompt, config, 4, stream(0, EVAL, 0))
    assert averaged.pred == pytest.approx(sum(constituents) / 4, abs=1e-12)


def test_average_variance_non_increasing(config):
    params = _params(config, 4, scale=1.0)
    prompt = torch.ones(5, dtype=torch.float64)
    variances = []
    for n in (1, 4, 10):
        values = torch.tensor(
            [infer.average_of_n(params, prompt, config, n, stream(s, EVAL, 0)).pred for s in range(300)]
        )
        variances.append(float(values.var()))
    assert variances[0] >= variances[1] >= variances[2]


def test_predict_deterministic(config, dataset):
    params = _params(config, 5)
    a = infer.predict(params, dataset, config, "rail_avg_n", n=3, seed=2)
    b = infer.predict(params, dataset, config, "rail_avg_n", n=3, seed=2)
    assert [p.pred for p in a] == [p.pred for p in b]


def test_predictions_csv(config, dataset):
    params = _params(config, 6)
    predictions = infer.predict(params, dataset, config, "greedy")
    with make_temp_directory() as tempdir:
        path = os.path.join(tempdir, "pred.csv")
        infer.write_predictions(predictions, dataset, path)
        df = pd.read_csv(path)
    assert list(df.columns) == ["prompt_idx", "pred", "gold", "mode"]
    assert len(df) == len(dataset)


def test_score(config, dataset):
    params = _params(config, 7)
    predictions = infer.predict(params, dataset, config, "rail", seed=0)
    report = infer.score(predictions, dataset, config)
    assert report.n == len(dataset)
    assert report.mean_resp_len == 3
    assert report.rmse >= report.mae >= 0


def test_averaging_lowers_rmse(config):
    # the last CoT token decides the score: 10 gives 2, 11 gives 6
    params = torch.zeros(config.n_params, dtype=torch.float64)
    W, b = softmax.split_params(params, config)
    d = 5
    W[2, d + 10] = 40.0
    W[6, d + 11] = 40.0
    b[:10] = -20.0
    data = rpg.data.make_dataset(rpg.config.EnvConfig(), 300, seed=4)
    golds = data.golds

    def _rmse(n):
        predictions = infer.predict(params, data, config, "rail_avg_n", n=n, seed=9)
        return rpg.metrics.rmse(torch.tensor([p.pred for p in predictions], dtype=torch.float64), golds)

    single = _rmse(1)
    assert _rmse(10) <= single + 1e-3
    assert _rmse(10) < single - 0.3
