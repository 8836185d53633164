""" Leave-one-out baselines and standardized clipped advantages. """

# =============================================================================
# IMPORTS
# =============================================================================
import torch

from ..config import ADVANTAGE_EPS, CLIP_BOUND

DTYPE = torch.float64


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def loo_baselines(rewards):
    """Mean of the other `K - 1` rewards, per sample."""
    rewards = torch.as_tensor(rewards, dtype=DTYPE)
    k = rewards.shape[0]
    if k < 2:
        raise ValueError("leave-one-out baselines need K >= 2, got K=%d" % k)
    return (rewards.sum() - rewards) / (k - 1)


def rloo_advantages(
    rewards,
    baseline=True,
    standardize=True,
    clip=True,
    eps=ADVANTAGE_EPS,
    clip_bound=CLIP_BOUND,
):
    """Raw and stabilized advantages of a group.

    `A = r - b` with the leave-one-out baseline `b`, then
    `A~ = clip(A / (std(A) + eps), -1, 1)` with the population standard
    deviation.

    Parameters
    ----------
    rewards : torch.Tensor, shape=(K, )
    baseline, standardize, clip : bool
        Switch the corresponding stage off to audit the raw estimator.

    Returns
    -------
    baselines : torch.Tensor, shape=(K, )
    advantages : torch.Tensor, shape=(K, )
    std_advantages : torch.Tensor, shape=(K, )
    """
    rewards = torch.as_tensor(rewards, dtype=DTYPE)
    baselines = loo_baselines(rewards) if baseline else torch.zeros_like(rewards)
    advantages = rewards - baselines
    if baseline and torch.all(rewards == rewards[0]):
        # exact zeros; rounding in the leave-one-out mean must not survive standardization
        advantages = torch.zeros_like(rewards)
    weights = advantages
    if standardize:
        sigma = torch.sqrt(torch.mean((advantages - advantages.mean()) ** 2))
        weights = advantages / (sigma + eps)
    if clip:
        weights = torch.clamp(weights, -clip_bound, clip_bound)
    return baselines, advantages, weights
