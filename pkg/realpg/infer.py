""" Inference-time predictors: RAIL, greedy decoding and average-of-N.

"""

# =============================================================================
# IMPORTS
# =============================================================================
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
import torch

from . import metrics
from .policy import softmax
from .policy.sampling import greedy_decode, sample_from_uniforms, uniforms
from .utils import EVAL, parallel_map, stream

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
MODES = ("rail", "greedy", "rail_avg_n")
COLUMNS = ["prompt_idx", "pred", "gold", "mode"]


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class Prediction:
    """A predicted score.

    Attributes
    ----------
    prompt_idx : int
    pred : float
        In `[0, 9]`; an integer for greedy decoding.
    mode : str
        `rail`, `greedy` or `rail_avg_n(N)`.
    entropy : float
        Mean per-token entropy of the generations behind the prediction.
    """

    prompt_idx: int
    pred: float
    mode: str
    entropy: float = 0.0


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def _rail_values(params, prompt, config, draws):
    cot, _ = sample_from_uniforms(params, prompt, draws, config)
    ev = softmax.evaluate(params, prompt, cot, config)
    y_hat, _ = ev.rail(config.renormalize_digits)
    return y_hat, ev.entropy()


def rail_predict(params, prompt, config, rng, prompt_idx=0):
    """Sample one CoT at temperature T and return its RAIL value.

    Parameters
    ----------
    params : torch.Tensor
    prompt : torch.Tensor, shape=(d, )
    config : realpg.config.PolicyConfig
    rng : numpy.random.Generator
    prompt_idx : int

    Returns
    -------
    Prediction
    """
    y_hat, entropy = _rail_values(params, prompt, config, uniforms(rng, config)[None, :])
    return Prediction(int(prompt_idx), float(y_hat[0]), "rail", float(entropy[0]))


def average_of_n(params, prompt, config, n, rng, prompt_idx=0):
    """Mean of `n` RAIL values over independent CoTs.

    The CoTs consume `rng` in order, so `n=1` reproduces `rail_predict`
    called with the same stream.
    """
    if n < 1:
        raise ValueError("average_of_n needs n >= 1, got %d" % n)
    draws = np.stack([uniforms(rng, config) for _ in range(n)])
    y_hat, entropy = _rail_values(params, prompt, config, draws)
    return Prediction(
        int(prompt_idx),
        float(y_hat.mean()),
        "rail_avg_n(%d)" % n,
        float(entropy.mean()),
    )


def greedy_predict(params, prompt, config, prompt_idx=0):
    """Argmax CoT, then the argmax digit."""
    cot, score = greedy_decode(params, prompt, config)
    entropy = softmax.evaluate(params, prompt, cot, config).entropy()
    return Prediction(int(prompt_idx), float(score), "greedy", float(entropy[0]))


def predict(params, dataset, config, mode="rail", n=1, seed=0):
    """Predict every prompt of a dataset.

    Prompt `i` draws from the stream `(seed, EVAL, i)`, so predictions do
    not depend on how prompts are scheduled across workers.

    Parameters
    ----------
    params : torch.Tensor
    dataset : realpg.data.JudgeDataset
    config : realpg.config.PolicyConfig
    mode : {"rail", "greedy", "rail_avg_n"}
    n : int
        Generations per prompt for `rail_avg_n`.
    seed : int

    Returns
    -------
    List[Prediction]
    """
    if mode not in MODES:
        raise ValueError("unknown inference mode %r" % (mode,))

    def _one(idx):
        prompt = dataset[idx].features
        if mode == "greedy":
            return greedy_predict(params, prompt, config, idx)
        rng = stream(seed, EVAL, idx)
        if mode == "rail":
            return rail_predict(params, prompt, config, rng, idx)
        return average_of_n(params, prompt, config, n, rng, idx)

    return parallel_map(_one, range(len(dataset)))


def predictions_frame(predictions, dataset):
    """Predictions as a `prompt_idx,pred,gold,mode` table."""
    return pd.DataFrame(
        [[p.prompt_idx, p.pred, dataset[p.prompt_idx].gold, p.mode] for p in predictions],
        columns=COLUMNS,
    )


def write_predictions(predictions, dataset, path):
    predictions_frame(predictions, dataset).to_csv(path, index=False)


def score(predictions, dataset, config, tau_variant="b"):
    """`MetricsReport` of a set of predictions against the gold scores."""
    preds = torch.tensor([p.pred for p in predictions], dtype=softmax.DTYPE)
    golds = torch.tensor([dataset[p.prompt_idx].gold for p in predictions], dtype=softmax.DTYPE)
    entropy = float(np.mean([p.entropy for p in predictions]))
    return metrics.report(
        preds,
        golds,
        mean_entropy=entropy,
        mean_resp_len=config.cot_length + 1,
        tau_variant=tau_variant,
    )
