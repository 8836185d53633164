""" Exact objectives and gradients by enumeration on tiny instances.

Everything here is computed independently of the estimators in
`realpg.pg`: the objective and its gradient enumerate every CoT sequence,
and `estimator_expectation` enumerates every K-tuple of sampled outcomes,
weighting the sampled estimator by the probability of the tuple.
"""

# =============================================================================
# IMPORTS
# =============================================================================
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
import torch

from ..config import EnvConfig, EstimatorConfig, PolicyConfig
from ..data import make_dataset
from ..exceptions import EnumerationTooLargeError
from ..pg import estimate, make_group
from ..policy import softmax
from ..policy.sampling import cot_sequences, sample_from_uniforms, trajectories
from ..utils import ORACLE, stream

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
MAX_PROMPTS = 4
MAX_COT_SEQUENCES = 4
MAX_TUPLES = 4 ** 4
MAX_OUTCOMES = 4096

# sub-keys of the ORACLE stream
INSTANCE_TAG = 1
SAMPLE_TAG = 4


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class TinyInstance:
    """An instance small enough to enumerate.

    Attributes
    ----------
    policy : realpg.config.PolicyConfig
    dataset : realpg.data.JudgeDataset
        At most four prompts, weighted uniformly.
    lam : float
        Gold log-likelihood weight of the reward.
    """

    policy: PolicyConfig
    dataset: object
    lam: float = 1.0

    def __post_init__(self):
        if len(self.dataset) > MAX_PROMPTS:
            raise EnumerationTooLargeError(
                "tiny instances hold at most %d prompts, got %d" % (MAX_PROMPTS, len(self.dataset))
            )
        if self.n_sequences > MAX_COT_SEQUENCES:
            raise EnumerationTooLargeError(
                "%d CoT sequences exceed the enumeration bound of %d"
                % (self.n_sequences, MAX_COT_SEQUENCES)
            )

    @property
    def n_sequences(self):
        return self.policy.vocab.n_cot ** self.policy.cot_length

    @property
    def weights(self):
        return torch.full((len(self.dataset),), 1.0 / len(self.dataset), dtype=softmax.DTYPE)


def random_instance(seed, index=0, cot_length=1, lam=1.0, n_prompts=2, scale=1.0, temperature=1.0):
    """Random parameters and a random tiny instance with two CoT tokens.

    Returns
    -------
    params : torch.Tensor
    instance : TinyInstance
    """
    rng = stream(seed, ORACLE, INSTANCE_TAG, index)
    policy = PolicyConfig(vocab={"vocab_size": 12}, cot_length=cot_length, temperature=temperature)
    dataset = make_dataset(EnvConfig(), n_prompts, seed=int(rng.integers(2 ** 31)))
    params = torch.from_numpy(rng.uniform(-scale, scale, size=policy.n_params))
    return params, TinyInstance(policy=policy, dataset=dataset, lam=lam)


# =============================================================================
# HELPER FUNCTIONS
# =============================================================================
def _enumerated(params, instance, idx):
    """Forward pass over every CoT sequence of prompt `idx`."""
    cots = cot_sequences(instance.policy)
    example = instance.dataset[idx]
    ev = softmax.evaluate(params, example.features, cots, instance.policy)
    y_hat, rail_z = ev.rail(instance.policy.renormalize_digits)
    logp_gold = ev.logp_token(example.gold)
    return cots, ev, y_hat, rail_z, logp_gold


def _check_tuples(n):
    if n > MAX_TUPLES:
        raise EnumerationTooLargeError("%d K-tuples exceed the enumeration bound of %d" % (n, MAX_TUPLES))


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def exact_objective(params, instance):
    """Regression-aware loss by full enumeration.

    `L = sum_x P(x) sum_c pi(c | x) [(y_hat(x, c) - y*)^2 - lam log pi(y* | x, c)]`

    Every (prompt, CoT sequence) pair goes through a single forward pass.
    """
    cots = cot_sequences(instance.policy)
    n_prompts, n_cots = len(instance.dataset), cots.shape[0]
    prompts = instance.dataset.features.repeat_interleave(n_cots, dim=0)
    golds = instance.dataset.golds.to(softmax.DTYPE).repeat_interleave(n_cots)
    ev = softmax.evaluate(params, prompts, cots.repeat(n_prompts, 1), instance.policy)
    y_hat, _ = ev.rail(instance.policy.renormalize_digits)
    loss = (y_hat - golds) ** 2 - instance.lam * ev.logp_token(golds.to(torch.int64))
    per_prompt = (ev.logp_cot().exp() * loss).reshape(n_prompts, n_cots).sum(dim=1)
    return float(instance.weights @ per_prompt)


def exact_gradient(params, instance):
    """Ascent direction `grad J`, `J = -L`, by enumeration.

    `sum_x P(x) sum_c [pi grad log pi(c | x) r + pi grad r]` with
    `r = -(y_hat - y*)^2 + lam log pi(y* | x, c)`.
    """
    policy = instance.policy
    grad = torch.zeros(policy.n_params, dtype=softmax.DTYPE)
    for idx, w in enumerate(instance.weights):
        _, ev, y_hat, rail_z, logp_gold = _enumerated(params, instance, idx)
        gold = instance.dataset[idx].gold
        pi = ev.logp_cot().exp()
        reward = -((y_hat - gold) ** 2) + instance.lam * logp_gold

        score_function = softmax.project(
            (pi * reward)[:, None, None] * ev.grad_logp_cot_z(), ev.cot_features, policy
        )
        reward_z = -2.0 * (y_hat - gold)[:, None] * rail_z + instance.lam * ev.grad_logp_token_z(gold)
        pathwise = softmax.project(pi[:, None] * reward_z, ev.score_features, policy)
        grad = grad + w * (score_function + pathwise)
    return grad


def reinforce_gradient(params, instance, table):
    """`sum_x P(x) sum_c pi(c | x) r(x, c) grad log pi(c | x)` for a reward
    table that does not depend on the parameters.

    Parameters
    ----------
    table : torch.Tensor, shape=(n_prompts, n_sequences)
    """
    policy = instance.policy
    table = torch.as_tensor(table, dtype=softmax.DTYPE)
    grad = torch.zeros(policy.n_params, dtype=softmax.DTYPE)
    for idx, w in enumerate(instance.weights):
        _, ev, _, _, _ = _enumerated(params, instance, idx)
        pi = ev.logp_cot().exp()
        grad = grad + w * softmax.project(
            (pi * table[idx])[:, None, None] * ev.grad_logp_cot_z(), ev.cot_features, policy
        )
    return grad


def exact_accuracy_gradient(params, instance):
    """Gradient of the expected binary accuracy `P(y = y*)`."""
    policy = instance.policy
    grad = torch.zeros(policy.n_params, dtype=softmax.DTYPE)
    for idx, w in enumerate(instance.weights):
        _, ev, _, _, logp_gold = _enumerated(params, instance, idx)
        gold = instance.dataset[idx].gold
        pi = ev.logp_cot().exp()
        acc = logp_gold.exp()
        grad = grad + w * (
            softmax.project((pi * acc)[:, None, None] * ev.grad_logp_cot_z(), ev.cot_features, policy)
            + softmax.project(pi[:, None] * ev.grad_prob_token_z(gold), ev.score_features, policy)
        )
    return grad


def monte_carlo_objective(params, instance, n, seed):
    """Sampled estimate of `exact_objective`.

    Returns
    -------
    mean : float
    stderr : float
    """
    policy = instance.policy
    mean, var = 0.0, 0.0
    for idx, w in enumerate(instance.weights):
        example = instance.dataset[idx]
        draws = 1.0 - stream(seed, ORACLE, SAMPLE_TAG, idx).random((n, policy.cot_length + 1))
        cots, _ = sample_from_uniforms(params, example.features, draws, policy)
        ev = softmax.evaluate(params, example.features, cots, policy)
        y_hat, _ = ev.rail(policy.renormalize_digits)
        loss = (y_hat - example.gold) ** 2 - instance.lam * ev.logp_token(example.gold)
        mean += float(w) * float(loss.mean())
        var += float(w) ** 2 * float(loss.var()) / n
    return mean, math.sqrt(var)


def estimator_expectation(kind, params, instance, k, config=None, table=None):
    """Exact expectation of a sampled estimator over all K-tuples.

    Parameters
    ----------
    kind : str
        Estimator kind.
    params : torch.Tensor
    instance : TinyInstance
    k : int
        Group size.
    config : realpg.config.EstimatorConfig, optional
        Stabilization flags and weights; `kind` and `lam` are taken from the
        arguments and the instance.
    table : torch.Tensor, shape=(n_prompts, n_sequences), optional
        Parameter-independent rewards replacing the configured reward.

    Returns
    -------
    torch.Tensor
        Ascent direction, comparable with `exact_gradient`.
    """
    config = config if config is not None else EstimatorConfig()
    config = config.model_copy(update={"kind": kind, "lam": instance.lam})
    policy = instance.policy
    n_seq = instance.n_sequences
    _check_tuples(n_seq ** k)
    if table is not None:
        table = torch.as_tensor(table, dtype=softmax.DTYPE)

    grad = torch.zeros(policy.n_params, dtype=softmax.DTYPE)
    for idx, w in enumerate(instance.weights):
        example = instance.dataset[idx]
        cots, ev, _, _, _ = _enumerated(params, instance, idx)
        pi = ev.logp_cot().exp()
        score_dists = ev.score_dist

        for seq_tuple in itertools.product(range(n_seq), repeat=k):
            seq_tuple = list(seq_tuple)
            p_cots = float(torch.prod(pi[seq_tuple]))
            rewards = table[idx][seq_tuple] if table is not None else None

            if kind == "standard_rl":
                outcomes = itertools.product(range(policy.vocab_size), repeat=k)
                if policy.vocab_size ** k > MAX_OUTCOMES:
                    raise EnumerationTooLargeError("score outcomes exceed %d" % MAX_OUTCOMES)
            else:
                # the score token does not enter these estimators
                outcomes = [(0,) * k]

            for scores in outcomes:
                p = p_cots
                if kind == "standard_rl":
                    p *= float(np.prod([float(score_dists[s, y]) for s, y in zip(seq_tuple, scores)]))
                if p == 0.0:
                    continue
                trajs = trajectories(
                    params, example.features, idx, cots[seq_tuple], torch.tensor(scores), policy
                )
                group = make_group(trajs, params, instance.dataset, config, policy, rewards=rewards)
                grad = grad + w * p * estimate(group, config, policy)
    return grad


def cosine(a, b):
    """Cosine of the angle between two gradient vectors."""
    return float(torch.dot(a, b) / (torch.linalg.vector_norm(a) * torch.linalg.vector_norm(b)))
