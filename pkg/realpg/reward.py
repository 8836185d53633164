""" Rewards over sampled trajectories.

"""

# =============================================================================
# IMPORTS
# =============================================================================
import torch

from .config import N_DIGITS

DTYPE = torch.float64


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def real_reward(y_hat, logp_gold, gold, lam):
    """Policy-dependent reward `-(y_hat - y*)^2 + lam * log pi(y* | x, c)`.

    Works elementwise on tensors as well as on floats.
    """
    return -((y_hat - gold) ** 2) + lam * logp_gold


def binary_reward(score, gold):
    """`1` iff the sampled score token is the digit token of `y*`.

    CoT tokens never match.
    """
    score = torch.as_tensor(score)
    gold = torch.as_tensor(gold)
    return ((score == gold) & (score < N_DIGITS)).to(DTYPE)


def correct(group, gold):
    """Correctness flag per trajectory, shape `(K, )`."""
    trajectories = getattr(group, "trajectories", group)
    scores = torch.tensor([traj.score for traj in trajectories], dtype=torch.int64)
    return binary_reward(scores, gold)


def group_accuracy(group, gold):
    """Fraction of a group's sampled scores equal to `y*`.

    Parameters
    ----------
    group : realpg.pg.Group or List[realpg.policy.Trajectory]
    gold : int
    """
    return float(correct(group, gold).mean())


def keep_group(accuracy, mode):
    """Dynamic-sampling filter on group accuracy.

    Parameters
    ----------
    accuracy : float
    mode : {"all", "partial", "exclude_all_wrong", "exclude_all_right"}
    """
    if mode == "all":
        return True
    elif mode == "partial":
        return 0.0 < accuracy < 1.0
    elif mode == "exclude_all_wrong":
        return accuracy > 0.0
    elif mode == "exclude_all_right":
        return accuracy < 1.0
    raise ValueError("unknown filter %r" % (mode,))
