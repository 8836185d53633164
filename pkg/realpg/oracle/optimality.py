""" Brute-force checks that the conditional mean is the best predictor.

For a random discrete joint `P(x) pi(c | x) P(y | x)` the conditional mean
`mu(x, c) = E[y | x, c]` must minimize the population MSE among all
predictors of `(x, c)`, maximize the population Pearson correlation with
`y`, keep that correlation under positive affine maps, and reduce to
`E[y | x]` because `c` and `y` are independent given `x`.
"""

# =============================================================================
# IMPORTS
# =============================================================================
import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from ..utils import ORACLE, stream

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
MAX_SUPPORT = 5
SUM_TOL = 1e-12
# slack for population statistics accumulated over at most 5^3 cells
RTOL = 1e-12
VAR_FLOOR = 1e-14
JOINT_TAG = 0


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class DiscreteJoint:
    """Factorized joint over finite supports.

    Attributes
    ----------
    p_x : torch.Tensor, shape=(n_x, )
    pi_c : torch.Tensor, shape=(n_x, n_c)
        Rows are `pi(c | x)`.
    p_y : torch.Tensor, shape=(n_x, n_y)
        Rows are `P(y | x)`.
    y_values : torch.Tensor, shape=(n_y, )
    """

    p_x: torch.Tensor
    pi_c: torch.Tensor
    p_y: torch.Tensor
    y_values: torch.Tensor

    def __post_init__(self):
        for name, probs in (("p_x", self.p_x), ("pi_c", self.pi_c), ("p_y", self.p_y)):
            if (probs < 0).any() or ((probs.sum(dim=-1) - 1.0).abs() > SUM_TOL).any():
                raise ValueError("%s is not a probability table" % name)

    @property
    def p_xc(self):
        """Marginal of `(x, c)`, shape `(n_x, n_c)`."""
        return self.p_x[:, None] * self.pi_c

    def joint(self):
        """`P(x, c, y)`, shape `(n_x, n_c, n_y)`."""
        return self.p_xc[:, :, None] * self.p_y[:, None, :]

    def posterior_mean(self):
        """`E[y | x, c]` computed by conditioning the full joint."""
        joint = self.joint()
        mass = joint.sum(dim=-1)
        safe = torch.where(mass > 0, mass, torch.ones_like(mass))
        return (joint * self.y_values).sum(dim=-1) / safe

    def mean_given_x(self):
        """`E[y | x]`, shape `(n_x, )`."""
        return self.p_y @ self.y_values

    def y_moments(self):
        marginal = self.p_x @ self.p_y
        mean = marginal @ self.y_values
        return mean, marginal @ (self.y_values - mean) ** 2

    def mse(self, f):
        """Population MSE of predictors `f`, shape `(..., n_x, n_c)`."""
        residual = f[..., None] - self.y_values
        return (self.joint() * residual ** 2).sum(dim=(-3, -2, -1))

    def pearson(self, f):
        """Population Pearson correlation of predictors `f` with `y`.

        `cov(f, y) = cov(f, mu)` under the `(x, c)` marginal.
        """
        weights = self.p_xc
        mu = self.posterior_mean()
        mean_y, var_y = self.y_moments()
        mean_f = (weights * f).sum(dim=(-2, -1))
        f_c = f - mean_f[..., None, None]
        var_f = (weights * f_c ** 2).sum(dim=(-2, -1))
        cov = (weights * f_c * (mu - mean_y)).sum(dim=(-2, -1))
        return cov / torch.sqrt(var_f * var_y)

    def var_mu(self):
        mu = self.posterior_mean()
        weights = self.p_xc
        mean = (weights * mu).sum()
        return (weights * (mu - mean) ** 2).sum()


@dataclass
class OptimalityReport:
    joints: int = 0
    skipped: int = 0
    violations: dict = field(
        default_factory=lambda: {"mse": 0, "pearson": 0, "affine": 0, "reduction": 0}
    )
    max_errors: dict = field(
        default_factory=lambda: {"mse": 0.0, "pearson": 0.0, "affine": 0.0, "reduction": 0.0}
    )

    @property
    def passed(self):
        return sum(self.violations.values()) == 0

    def as_dict(self):
        return {
            "joints": self.joints,
            "skipped": self.skipped,
            "violations": dict(self.violations),
            "max_errors": dict(self.max_errors),
            "passed": self.passed,
        }


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def random_joint(rng, max_support=MAX_SUPPORT):
    """Random factorized joint with supports of size `1 .. max_support`
    (at least two score values)."""
    n_x, n_c = (int(n) for n in rng.integers(1, max_support + 1, size=2))
    n_y = int(rng.integers(2, max_support + 1))
    y_values = np.sort(rng.choice(np.arange(1, max_support + 1), size=n_y, replace=False))

    def _table(*shape):
        return torch.from_numpy(rng.dirichlet(np.ones(shape[-1]), size=shape[:-1]))

    return DiscreteJoint(
        p_x=torch.from_numpy(rng.dirichlet(np.ones(n_x))),
        pi_c=_table(n_x, n_c),
        p_y=_table(n_x, n_y),
        y_values=torch.from_numpy(y_values.astype(np.float64)),
    )


def check_joint(joint, competitors, scale, shift, report):
    """Run the four checks on one joint and update `report` in place.

    Parameters
    ----------
    joint : DiscreteJoint
    competitors : torch.Tensor, shape=(m, n_x, n_c)
    scale : torch.Tensor, shape=(m, )
        Positive slopes of the affine candidates.
    shift : torch.Tensor, shape=(m, )
    report : OptimalityReport

    Returns
    -------
    bool
        False when the joint was skipped as degenerate.
    """
    _, var_y = joint.y_moments()
    if float(var_y) <= VAR_FLOOR or float(joint.var_mu()) <= VAR_FLOOR:
        report.skipped += 1
        return False
    report.joints += 1

    mu = joint.posterior_mean()
    affine_mu = scale[:, None, None] * mu + shift[:, None, None]
    affine_f = scale[:, None, None] * competitors + shift[:, None, None]
    candidates = torch.cat([competitors, affine_f, affine_mu])

    def _record(name, excess):
        report.max_errors[name] = max(report.max_errors[name], float(excess.max().clamp(min=0.0)))
        report.violations[name] += int((excess > 0).sum())

    mse_mu = joint.mse(mu)
    mse_candidates = joint.mse(candidates)
    _record("mse", mse_mu - mse_candidates - RTOL * mse_candidates.abs().clamp(min=1.0))

    rho_mu = joint.pearson(mu)
    rho_candidates = joint.pearson(torch.cat([competitors, affine_f]))
    rho_candidates = torch.nan_to_num(rho_candidates, nan=-1.0)
    _record("pearson", rho_candidates - rho_mu - RTOL)

    _record("affine", (joint.pearson(affine_mu) - rho_mu).abs() - RTOL)

    reduction = (mu - joint.mean_given_x()[:, None]).abs()
    reduction = torch.where(joint.p_xc > 0, reduction, torch.zeros_like(reduction))
    _record("reduction", reduction - RTOL * joint.y_values.abs().max())
    return True


def optimality_suite(n_joints, n_competitors, seed):
    """Brute-force audit over random joints.

    Parameters
    ----------
    n_joints : int
    n_competitors : int
        Random predictors per joint; each also enters through a random
        positive affine map, as does the conditional mean itself.
    seed : int

    Returns
    -------
    OptimalityReport
        Degenerate joints (zero score variance or constant conditional
        mean) are counted in `skipped`.
    """
    report = OptimalityReport()
    for j in range(n_joints):
        rng = stream(seed, ORACLE, JOINT_TAG, j)
        joint = random_joint(rng)
        n_x, n_c = joint.pi_c.shape
        y_min, y_max = float(joint.y_values.min()), float(joint.y_values.max())
        competitors = torch.from_numpy(rng.uniform(y_min, y_max, size=(n_competitors, n_x, n_c)))
        scale = torch.from_numpy(rng.uniform(0.1, 10.0, size=n_competitors))
        shift = torch.from_numpy(rng.uniform(-5.0, 5.0, size=n_competitors))
        check_joint(joint, competitors, scale, shift, report)

    logger.info(
        "optimality suite: %d joints, %d skipped, violations %s",
        report.joints, report.skipped, report.violations,
    )
    return report
