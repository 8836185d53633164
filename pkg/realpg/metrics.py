""" Metrics to evaluate judges and diagnose policies.

"""

# =============================================================================
# IMPORTS
# =============================================================================
import json
import math

import torch
from pydantic import BaseModel, ConfigDict
from scipy.stats import rankdata

from .exceptions import DegenerateInputError

# =============================================================================
# CONSTANTS
# =============================================================================
DTYPE = torch.float64

# rows per block when counting pairs for Kendall's tau
PAIR_BLOCK = 1024


# =============================================================================
# HELPER FUNCTIONS
# =============================================================================
def _pair(input, target, min_n=2):
    input = torch.as_tensor(input, dtype=DTYPE).flatten()
    target = torch.as_tensor(target, dtype=DTYPE).flatten()
    if input.shape != target.shape:
        raise ValueError("input and target differ in length: %d vs %d" % (len(input), len(target)))
    if input.shape[0] < min_n:
        raise DegenerateInputError("need at least %d samples, got %d" % (min_n, input.shape[0]))
    return input, target


def rank(x):
    """Average ranks (ties share the mean of their rank span)."""
    x = torch.as_tensor(x, dtype=DTYPE).flatten()
    return torch.as_tensor(rankdata(x.numpy(), method="average"), dtype=DTYPE)


def pair_counts(input, target):
    """Exact pair statistics over all `i < j`.

    Returns
    -------
    s : float
        Concordant minus discordant pairs, `C - D`.
    n0 : float
        Number of pairs.
    n_untied_input : float
        Pairs not tied in `input`.
    n_untied_target : float
        Pairs not tied in `target`.
    """
    n = input.shape[0]
    s = 0.0
    untied_input = 0.0
    untied_target = 0.0
    for start in range(0, n, PAIR_BLOCK):
        stop = min(start + PAIR_BLOCK, n)
        rows = torch.arange(start, stop).unsqueeze(-1)
        upper = torch.arange(n).unsqueeze(0) > rows
        dx = torch.sign(input[start:stop].unsqueeze(-1) - input.unsqueeze(0))
        dy = torch.sign(target[start:stop].unsqueeze(-1) - target.unsqueeze(0))
        s += float((dx * dy)[upper].sum())
        untied_input += float((dx != 0)[upper].sum())
        untied_target += float((dy != 0)[upper].sum())
    return s, n * (n - 1) / 2.0, untied_input, untied_target


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def pearson(input, target):
    """Sample Pearson correlation coefficient.

    Raises `DegenerateInputError` when either argument has zero variance.
    """
    input, target = _pair(input, target)
    input = input - input.mean()
    target = target - target.mean()
    var_input = (input * input).sum()
    var_target = (target * target).sum()
    if var_input <= 0 or var_target <= 0:
        raise DegenerateInputError("Pearson correlation undefined for zero-variance input")
    r = float((input * target).sum() / torch.sqrt(var_input * var_target))
    return max(-1.0, min(1.0, r))


def spearman(input, target):
    """Spearman's rho: Pearson correlation of average ranks."""
    input, target = _pair(input, target)
    return pearson(rank(input), rank(target))


def kendall_tau_b(input, target):
    """Kendall's tau-b by exact pair counting, with tie corrections.

    `(C - D) / sqrt((C + D + T_x) (C + D + T_y))`
    """
    input, target = _pair(input, target)
    s, _, untied_input, untied_target = pair_counts(input, target)
    if untied_input == 0 or untied_target == 0:
        raise DegenerateInputError("Kendall's tau undefined for a fully tied vector")
    return s / math.sqrt(untied_input * untied_target)


def kendall_tau_a(input, target):
    """Kendall's tau-a, `(C - D) / (n (n - 1) / 2)`."""
    input, target = _pair(input, target)
    s, n0, untied_input, untied_target = pair_counts(input, target)
    if untied_input == 0 or untied_target == 0:
        raise DegenerateInputError("Kendall's tau undefined for a fully tied vector")
    return s / n0


def rmse(input, target):
    input, target = _pair(input, target, min_n=1)
    return float(torch.sqrt(torch.mean((input - target) ** 2)))


def mae(input, target):
    input, target = _pair(input, target, min_n=1)
    return float(torch.mean(torch.abs(input - target)))


def error_metrics(input, target):
    """Root-mean-square and mean absolute error."""
    return rmse(input, target), mae(input, target)


def token_entropy(dist):
    """Entropy in nats, with `0 log 0 = 0`."""
    dist = torch.as_tensor(dist, dtype=DTYPE)
    terms = torch.where(dist > 0, dist * torch.log(dist), torch.zeros_like(dist))
    return float(-terms.sum())


# =============================================================================
# MODULE CLASSES
# =============================================================================
class MetricsReport(BaseModel):
    """Correlation and error metrics of a set of predictions.

    Attributes
    ----------
    r, rho, tau : float
        Pearson, Spearman and Kendall correlations.
    rmse, mae : float
        Score units.
    n : int
    mean_entropy : float
        Nats per token.
    mean_resp_len : float
        Tokens per response.
    """

    model_config = ConfigDict(extra="forbid")

    r: float
    rho: float
    tau: float
    rmse: float
    mae: float
    n: int
    mean_entropy: float = 0.0
    mean_resp_len: float = 0.0

    def to_json(self):
        return json.dumps(self.model_dump(), indent=2, sort_keys=True)


def report(input, target, mean_entropy=0.0, mean_resp_len=0.0, tau_variant="b"):
    """Build a `MetricsReport`.

    Correlations of degenerate (constant) predictions are reported as 0.0
    rather than raised, so that the initial near-uniform policy can still
    be evaluated.
    """
    input, target = _pair(input, target, min_n=1)
    tau = kendall_tau_b if tau_variant == "b" else kendall_tau_a

    def _safe(metric):
        try:
            return metric(input, target)
        except DegenerateInputError:
            return 0.0

    rmse_, mae_ = error_metrics(input, target)
    return MetricsReport(
        r=_safe(pearson),
        rho=_safe(spearman),
        tau=_safe(tau),
        rmse=rmse_,
        mae=mae_,
        n=int(input.shape[0]),
        mean_entropy=float(mean_entropy),
        mean_resp_len=float(mean_resp_len),
    )
