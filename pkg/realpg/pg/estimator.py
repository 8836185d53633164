""" Policy-gradient estimators for a group of sampled trajectories.

Every estimator returns an ascent direction on expected reward, averaged
over the K trajectories of its group. Gradients are built in logit space
and projected onto the parameter layout once per group.

The REAL estimator has two parts:

  * the score-function term, `A~_i * grad log pi(c_i | x)`, weighted by the
    standardized clipped leave-one-out advantage;
  * the reward-gradient term, `beta * grad r(theta, x, c_i)`, present because
    the reward itself depends on the policy through the RAIL value and the
    gold-token log-likelihood.

The other estimators reuse the same pieces.
"""

# =============================================================================
# IMPORTS
# =============================================================================
import logging
from dataclasses import dataclass
from typing import List

import torch

from ..policy import softmax
from ..policy.sampling import Trajectory
from ..reward import binary_reward, group_accuracy, real_reward
from .advantage import rloo_advantages

logger = logging.getLogger(__name__)


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class Group:
    """The K trajectories of one prompt, scored at the current parameters.

    Attributes
    ----------
    prompt_idx : int
    gold : int
    trajectories : List[Trajectory]
    evaluation : realpg.policy.softmax.Evaluation
        Forward pass over the group's CoTs at the parameters being updated.
    y_hat : torch.Tensor, shape=(K, )
        RAIL value per trajectory.
    rail_grad_z : torch.Tensor, shape=(K, V)
    logp_gold : torch.Tensor, shape=(K, )
    rewards, baselines, advantages, std_advantages : torch.Tensor, shape=(K, )
    accuracy : float
    policy_dependent : bool
        Whether the rewards depend on the parameters.
    """

    prompt_idx: int
    gold: int
    trajectories: List[Trajectory]
    evaluation: softmax.Evaluation
    y_hat: torch.Tensor
    rail_grad_z: torch.Tensor
    logp_gold: torch.Tensor
    rewards: torch.Tensor
    baselines: torch.Tensor
    advantages: torch.Tensor
    std_advantages: torch.Tensor
    accuracy: float
    policy_dependent: bool

    @property
    def size(self):
        return len(self.trajectories)

    @property
    def scores(self):
        return torch.tensor([traj.score for traj in self.trajectories], dtype=torch.int64)

    @property
    def entropy(self):
        return float(sum(traj.entropy for traj in self.trajectories) / self.size)

    @property
    def response_length(self):
        return float(sum(traj.response_length for traj in self.trajectories) / self.size)


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def make_group(trajectories, params, dataset, config, policy_config, reward_kind=None, rewards=None):
    """Score a prompt's trajectories and compute their advantages.

    Parameters
    ----------
    trajectories : List[Trajectory]
        All of the same prompt.
    params : torch.Tensor
        Parameters being updated; for `tract` these differ from the ones
        the CoTs were sampled with.
    dataset : realpg.data.JudgeDataset
    config : realpg.config.EstimatorConfig
    policy_config : realpg.config.PolicyConfig
    reward_kind : {"real", "binary"}, optional
        Defaults to binary for `standard_rl` and real otherwise.
    rewards : torch.Tensor, optional
        Fixed rewards that do not depend on the parameters; replaces the
        configured reward.

    Returns
    -------
    Group
    """
    prompt_idx = trajectories[0].prompt_idx
    example = dataset[prompt_idx]
    gold = example.gold
    cots = torch.stack([traj.cot for traj in trajectories])
    scores = torch.tensor([traj.score for traj in trajectories], dtype=torch.int64)

    ev = softmax.evaluate(params, example.features, cots, policy_config)
    y_hat, rail_grad_z = ev.rail(policy_config.renormalize_digits)
    logp_gold = ev.logp_token(gold)

    if reward_kind is None:
        reward_kind = "binary" if config.kind == "standard_rl" else "real"

    if rewards is not None:
        rewards = torch.as_tensor(rewards, dtype=softmax.DTYPE)
        policy_dependent = False
    elif reward_kind == "binary":
        rewards = binary_reward(scores, gold)
        policy_dependent = False
    else:
        rewards = real_reward(y_hat, logp_gold, gold, config.lam)
        policy_dependent = True

    signal = logp_gold if config.kind == "jepo" else rewards
    stabilize = not (config.kind == "jepo" and config.raw_jepo_weights)
    baselines, advantages, std_advantages = rloo_advantages(
        signal,
        baseline=config.baseline,
        standardize=config.standardize and stabilize,
        clip=config.clip and stabilize,
        eps=config.eps,
        clip_bound=config.clip_bound,
    )

    return Group(
        prompt_idx=prompt_idx,
        gold=gold,
        trajectories=list(trajectories),
        evaluation=ev,
        y_hat=y_hat,
        rail_grad_z=rail_grad_z,
        logp_gold=logp_gold,
        rewards=rewards,
        baselines=baselines,
        advantages=advantages,
        std_advantages=std_advantages,
        accuracy=group_accuracy(trajectories, gold),
        policy_dependent=policy_dependent,
    )


def cot_term(group, weights, policy_config):
    """`sum_i w_i grad log pi(c_i | x)`."""
    ev = group.evaluation
    grad_z = ev.grad_logp_cot_z() * weights[:, None, None]
    return softmax.project(grad_z, ev.cot_features, policy_config)


def score_term(group, grad_z, policy_config):
    """Project per-trajectory score-position logit gradients, summed over K."""
    return softmax.project(grad_z, group.evaluation.score_features, policy_config)


def reward_gradient_z(group, lam):
    """`grad r(theta, x, c_i)` in score-position logit space, shape `(K, V)`.

    `-2 (y_hat_i - y*) grad y_hat_i + lam grad log pi(y* | x, c_i)`
    """
    residual = group.y_hat - group.gold
    return -2.0 * residual[:, None] * group.rail_grad_z + lam * group.evaluation.grad_logp_token_z(group.gold)


def real_gradient(group, config, policy_config):
    """Score-function term weighted by advantages plus `beta` times the
    reward gradient.

    The reward-gradient term is dropped when the group's rewards do not
    depend on the parameters (binary reward, fixed reward tables).
    """
    grad = cot_term(group, group.std_advantages, policy_config)
    if group.policy_dependent and config.beta != 0.0:
        grad = grad + config.beta * score_term(group, reward_gradient_z(group, config.lam), policy_config)
    return grad / group.size


def standard_rl_gradient(group, config, policy_config):
    """Advantage-weighted gradient of the full sequence log-probability,
    CoT and sampled score token alike."""
    weights = group.std_advantages
    grad_z = group.evaluation.grad_logp_token_z(group.scores) * weights[:, None]
    grad = cot_term(group, weights, policy_config) + score_term(group, grad_z, policy_config)
    return grad / group.size


def raft_gradient(group, config, policy_config):
    """Reward gradient only, on self-sampled CoTs; no CoT exploration."""
    return score_term(group, reward_gradient_z(group, config.lam), policy_config) / group.size


def jepo_gradient(group, config, policy_config):
    """Advantages of the gold log-likelihood weight the CoT term; the gold
    log-likelihood gradient is added unweighted."""
    grad_z = group.evaluation.grad_logp_token_z(group.gold)
    grad = cot_term(group, group.std_advantages, policy_config) + score_term(group, grad_z, policy_config)
    return grad / group.size


def sft_gradient(group, config, policy_config):
    """Next-token gradient on the gold score after each self-sampled CoT."""
    grad_z = group.evaluation.grad_logp_token_z(group.gold)
    return score_term(group, grad_z, policy_config) / group.size


# CoTs come from a frozen source policy; the update is the RAFT one
tract_gradient = raft_gradient

ESTIMATORS = {
    "real": real_gradient,
    "standard_rl": standard_rl_gradient,
    "raft": raft_gradient,
    "jepo": jepo_gradient,
    "sft": sft_gradient,
    "tract": tract_gradient,
}


def estimate(group, config, policy_config):
    """Gradient of the configured estimator kind for one group."""
    try:
        fn = ESTIMATORS[config.kind]
    except KeyError:
        raise ValueError("unknown estimator %r" % (config.kind,))
    return fn(group, config, policy_config)
