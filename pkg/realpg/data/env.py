""" Synthetic pointwise-judging environment.

Latent quality `q` is uniform over the score range, prompt features are a
scaled one-hot of `q` plus isotropic Gaussian noise, and the gold score is
`q` moved by one step with probability `p` (half up, half down) and clamped
back into range. Both the generative process and its Bayes posterior are
available, so the environment doubles as an oracle.
"""

# =============================================================================
# IMPORTS
# =============================================================================
import logging
from dataclasses import dataclass

import numpy as np
import torch

from ..config import SCORE_MAX, SCORE_MIN
from ..exceptions import DegenerateInputError
from ..utils import DATA, stream

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
DTYPE = torch.float64
SCORES = np.arange(SCORE_MIN, SCORE_MAX + 1)


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class JudgeExample:
    """One prompt of the judge environment.

    Attributes
    ----------
    features : torch.Tensor, shape=(d, )
    gold : int
        Gold score `y*` in `1 .. 5`.
    quality : int
        Latent quality `q`; only oracles look at it.
    """

    features: torch.Tensor
    gold: int
    quality: int


# =============================================================================
# UTILITY FUNCTIONS
# =============================================================================
def centers(config):
    """Mixture centers `alpha * onehot5(q)`, shape `(5, 5)`."""
    return config.signal_scale * torch.eye(len(SCORES), dtype=DTYPE)


def label_kernel(config):
    """`P(y* | q)` as a `(5, 5)` matrix, rows indexed by `q`."""
    p = config.label_flip_prob
    kernel = np.zeros((len(SCORES), len(SCORES)))
    for i in range(len(SCORES)):
        kernel[i, i] += 1.0 - p
        kernel[i, max(i - 1, 0)] += p / 2.0
        kernel[i, min(i + 1, len(SCORES) - 1)] += p / 2.0
    return torch.as_tensor(kernel, dtype=DTYPE)


def expected_gold(config):
    """`E[y* | q]` for `q = 1 .. 5`."""
    return label_kernel(config) @ torch.as_tensor(SCORES, dtype=DTYPE)


def change_prob(config):
    """Marginal `P(y* != q)` under uniform `q`, accounting for the clamp."""
    kernel = label_kernel(config)
    return float(1.0 - torch.diagonal(kernel).mean())


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def make_dataset(config, n, seed):
    """Draw `n` examples from the environment.

    Parameters
    ----------
    config : realpg.config.EnvConfig
    n : int
    seed : int

    Returns
    -------
    realpg.data.dataset.JudgeDataset
    """
    from .dataset import JudgeDataset

    if n < 1:
        raise ValueError("n must be at least 1, got %d" % n)

    rng = stream(seed, DATA)
    quality = rng.integers(SCORE_MIN, SCORE_MAX + 1, size=n)
    noise = rng.normal(0.0, config.feature_noise, size=(n, len(SCORES)))
    u = rng.random(n)

    p = config.label_flip_prob
    delta = np.where(u < p / 2.0, -1, np.where(u < p, 1, 0))
    gold = np.clip(quality + delta, SCORE_MIN, SCORE_MAX)

    features = config.signal_scale * np.eye(len(SCORES))[quality - SCORE_MIN] + noise
    examples = [
        JudgeExample(
            features=torch.as_tensor(features[i], dtype=DTYPE),
            gold=int(gold[i]),
            quality=int(quality[i]),
        )
        for i in range(n)
    ]
    logger.debug("drew %d examples with seed %d", n, seed)
    return JudgeDataset(examples, config=config, seed=seed)


def posterior(config, features):
    """Exact `P(q | f_x)` over the five mixture components.

    Parameters
    ----------
    config : realpg.config.EnvConfig
    features : torch.Tensor, shape=(d, ) or (N, d)

    Returns
    -------
    torch.Tensor, shape=(5, ) or (N, 5)
    """
    features = torch.as_tensor(features, dtype=DTYPE)
    squeeze = features.dim() == 1
    features = features.reshape(-1, len(SCORES))
    sq_dist = ((features.unsqueeze(1) - centers(config).unsqueeze(0)) ** 2).sum(-1)

    sigma = config.feature_noise
    if sigma > 0:
        probs = torch.softmax(-sq_dist / (2.0 * sigma ** 2), dim=-1)
    else:
        on_lattice = sq_dist == 0
        if not on_lattice.any(dim=-1).all():
            raise DegenerateInputError(
                "posterior undefined: noiseless environment and features off the lattice"
            )
        probs = on_lattice.to(DTYPE)
        probs = probs / probs.sum(-1, keepdim=True)

    return probs[0] if squeeze else probs


def posterior_mean(config, features):
    """Bayes-optimal prediction `E[y* | f_x]`, in `[1, 5]`.

    Returns a float for a single feature vector, a tensor for a batch.
    """
    mu = posterior(config, features) @ expected_gold(config)
    return float(mu) if mu.dim() == 0 else mu


def nearest_center(config, features):
    """Maximum-a-posteriori quality, `1 .. 5`."""
    features = torch.as_tensor(features, dtype=DTYPE).reshape(-1, len(SCORES))
    sq_dist = ((features.unsqueeze(1) - centers(config).unsqueeze(0)) ** 2).sum(-1)
    return torch.argmin(sq_dist, dim=-1) + SCORE_MIN
