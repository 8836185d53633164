""" Trajectory sampling and decoding. """

# =============================================================================
# IMPORTS
# =============================================================================
import itertools
import logging
from dataclasses import dataclass

import numpy as np
import torch

from ..config import N_DIGITS
from ..utils import stream
from .softmax import COT, DTYPE, SCORE, evaluate, logits, masked_log_softmax, position_features

logger = logging.getLogger(__name__)


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class Trajectory:
    """One sampled generation.

    Attributes
    ----------
    prompt_idx : int
    cot : torch.Tensor of int64, shape=(L, )
    score : int
        Sampled score token, any id in `0 .. V - 1`.
    logp_cot : float
        `log pi(c | x)`, non-positive.
    score_dist : torch.Tensor, shape=(V, )
        Score-position distribution at the sampling temperature.
    entropy : float
        Mean per-token entropy (nats) over the L + 1 positions.
    """

    prompt_idx: int
    cot: torch.Tensor
    score: int
    logp_cot: float
    score_dist: torch.Tensor
    entropy: float

    @property
    def response_length(self):
        return int(self.cot.shape[0]) + 1


# =============================================================================
# UTILITY FUNCTIONS
# =============================================================================
def uniforms(rng, config):
    """`L + 1` draws in `(0, 1]`, one per position."""
    return 1.0 - rng.random(config.cot_length + 1)


def _inverse_cdf(dist, u):
    """Token whose cumulative mass first reaches `u`, restricted to the
    support so rounding in the cumulative sum never selects a zero-mass
    token.

    Parameters
    ----------
    dist : torch.Tensor, shape=(N, V)
    u : torch.Tensor, shape=(N, )
    """
    cdf = torch.cumsum(dist, dim=-1)
    idx = torch.searchsorted(cdf, u.unsqueeze(-1)).squeeze(-1)
    V = dist.shape[-1]
    last = V - 1 - torch.argmax(torch.flip(dist > 0, dims=(-1,)).to(torch.int64), dim=-1)
    return torch.minimum(idx, last)


def cot_sequences(config):
    """Every CoT sequence of the policy, shape `(V_cot ** L, L)`."""
    tokens = config.vocab.cot_tokens
    seqs = list(itertools.product(tokens, repeat=config.cot_length))
    return torch.tensor(seqs, dtype=torch.int64).reshape(len(seqs), config.cot_length)


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def sample_from_uniforms(params, prompt, draws, config):
    """Sample generations for one prompt from pre-drawn uniforms.

    Parameters
    ----------
    params : torch.Tensor
    prompt : torch.Tensor, shape=(d, )
    draws : numpy.ndarray, shape=(N, L + 1)
    config : realpg.config.PolicyConfig

    Returns
    -------
    cot : torch.Tensor of int64, shape=(N, L)
    score : torch.Tensor of int64, shape=(N, )
    """
    draws = torch.as_tensor(np.asarray(draws), dtype=DTYPE)
    n = draws.shape[0]
    L, T = config.cot_length, config.temperature
    prompts = torch.as_tensor(prompt, dtype=DTYPE).unsqueeze(0).expand(n, -1)

    tokens = []
    prev = None
    for t in range(L + 1):
        x = position_features(prompts, prev, t, config)
        mask = COT if t < L else SCORE
        dist = masked_log_softmax(logits(params, x, config), mask, T).exp()
        prev = _inverse_cdf(dist, draws[:, t])
        tokens.append(prev)

    cot = torch.stack(tokens[:-1], dim=-1)
    return cot, tokens[-1]


def trajectories(params, prompt, prompt_idx, cot, score, config):
    """Wrap sampled tokens into `Trajectory` records with cached distributions."""
    ev = evaluate(params, prompt, cot, config)
    logp = ev.logp_cot()
    dists = ev.score_dist
    entropy = ev.entropy()
    return [
        Trajectory(
            prompt_idx=int(prompt_idx),
            cot=cot[i],
            score=int(score[i]),
            logp_cot=float(logp[i]),
            score_dist=dists[i],
            entropy=float(entropy[i]),
        )
        for i in range(cot.shape[0])
    ]


def sample_trajectory(params, prompt, prompt_idx, config, rng):
    """Sample one generation: L CoT tokens under the CoT mask, then a score
    token over the full vocabulary, both at temperature T.

    Parameters
    ----------
    params : torch.Tensor
    prompt : torch.Tensor, shape=(d, )
    prompt_idx : int
    config : realpg.config.PolicyConfig
    rng : numpy.random.Generator
        Stream derived from `(seed, ..., prompt_idx, sample_idx)`.

    Returns
    -------
    Trajectory
    """
    draws = uniforms(rng, config)[None, :]
    cot, score = sample_from_uniforms(params, prompt, draws, config)
    return trajectories(params, prompt, prompt_idx, cot, score, config)[0]


def sample_group(params, prompt, prompt_idx, k, config, seed, key):
    """Sample `k` generations for a prompt, sample `i` using the stream
    `(seed, *key, prompt_idx, i)`.

    The result for sample `i` equals `sample_trajectory` called with that
    stream, independent of `k` and of any other group.
    """
    draws = np.stack([uniforms(stream(seed, *key, prompt_idx, i), config) for i in range(k)])
    cot, score = sample_from_uniforms(params, prompt, draws, config)
    return trajectories(params, prompt, prompt_idx, cot, score, config)


def greedy_decode(params, prompt, config):
    """Per-step argmax under the CoT mask, then argmax over digit tokens.

    Ties resolve to the lowest token id.

    Returns
    -------
    cot : torch.Tensor of int64, shape=(L, )
    score : int
    """
    prompts = torch.as_tensor(prompt, dtype=DTYPE).unsqueeze(0)
    L = config.cot_length
    prev = None
    cot = []
    for t in range(L):
        z = logits(params, position_features(prompts, prev, t, config), config)
        z = z.clone()
        z[..., :N_DIGITS] = float("-inf")
        prev = torch.argmax(z, dim=-1)
        cot.append(prev)
    z = logits(params, position_features(prompts, prev, L, config), config)
    score = int(torch.argmax(z[0, :N_DIGITS]))
    return torch.cat(cot), score
