""" Linear-softmax autoregressive policy with closed-form gradients.

The policy scores token `k` at a position with context features `x` as
`z_k = W_k . x + b_k` and samples from `softmax(z / T)`. CoT positions mask
the ten digit tokens out; the score position is a softmax over the whole
vocabulary. Every gradient is assembled in logit space first (`..._z`
arrays of shape `(..., V)`) and then projected onto the flat parameter
vector by `project`.
"""

# =============================================================================
# IMPORTS
# =============================================================================
import logging
from dataclasses import dataclass

import torch

from ..config import N_DIGITS
from ..exceptions import CompatibilityError, NumericalError
from ..utils import INIT, stream

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
DTYPE = torch.float64

COT = "cot"
SCORE = "score"


# =============================================================================
# UTILITY FUNCTIONS
# =============================================================================
def split_params(params, config):
    """View the flat parameter vector as `(W, b)`.

    Parameters
    ----------
    params : torch.Tensor, shape=(V * F + V, )
    config : realpg.config.PolicyConfig

    Returns
    -------
    W : torch.Tensor, shape=(V, F)
    b : torch.Tensor, shape=(V, )
    """
    V, F = config.vocab_size, config.feature_dim
    if params.dim() != 1 or params.shape[0] != config.n_params:
        raise CompatibilityError(
            "parameter vector of shape %s does not match V=%d, F=%d (expected %d entries)"
            % (tuple(params.shape), V, F, config.n_params)
        )
    return params[: V * F].view(V, F), params[V * F :]


def project(grad_z, features, config, batch_dims=0):
    """Map logit-space gradients onto the flat parameter layout.

    Sums `grad_z (x) features` over every axis except the leading
    `batch_dims` ones; the bias receives `grad_z` directly.

    Parameters
    ----------
    grad_z : torch.Tensor, shape=(*batch, *rest, V)
    features : torch.Tensor, shape=(*batch, *rest, F)
    config : realpg.config.PolicyConfig
    batch_dims : int

    Returns
    -------
    torch.Tensor, shape=(*batch, V * F + V)
    """
    V, F = config.vocab_size, config.feature_dim
    batch = grad_z.shape[:batch_dims]
    grad_z = grad_z.reshape(*batch, -1, V)
    features = features.reshape(*batch, -1, F)
    grad_w = torch.einsum("...rv,...rf->...vf", grad_z, features)
    grad_b = grad_z.sum(dim=-2)
    return torch.cat([grad_w.reshape(*batch, V * F), grad_b], dim=-1)


def digit_values(vocab_size):
    """`k` for digit token `k`, zero for CoT tokens."""
    values = torch.zeros(vocab_size, dtype=DTYPE)
    values[:N_DIGITS] = torch.arange(N_DIGITS, dtype=DTYPE)
    return values


def digit_mask(vocab_size):
    mask = torch.zeros(vocab_size, dtype=DTYPE)
    mask[:N_DIGITS] = 1.0
    return mask


# =============================================================================
# FEATURES AND DISTRIBUTIONS
# =============================================================================
def position_features(prompt, prev_token, position, config):
    """Context features at one position.

    Parameters
    ----------
    prompt : torch.Tensor, shape=(N, d)
    prev_token : torch.Tensor of int64, shape=(N, ), or None
        Previous token; `None` at the first position.
    position : int
        `0 .. L`, where `L` is the score position.
    config : realpg.config.PolicyConfig

    Returns
    -------
    torch.Tensor, shape=(N, F)
    """
    n = prompt.shape[0]
    V, L = config.vocab_size, config.cot_length
    one_hot = torch.zeros(n, V, dtype=DTYPE)
    if prev_token is not None:
        one_hot[torch.arange(n), prev_token] = 1.0
    pos = torch.full((n, 1), position / L, dtype=DTYPE)
    return torch.cat([prompt.to(DTYPE), one_hot, pos], dim=-1)


def context_features(prompt, cot, config):
    """Context features at every position of a generation.

    Parameters
    ----------
    prompt : torch.Tensor, shape=(N, d)
    cot : torch.Tensor of int64, shape=(N, L)

    Returns
    -------
    torch.Tensor, shape=(N, L + 1, F)
        Positions `0 .. L - 1` are the CoT positions, `L` the score position.
    """
    L = config.cot_length
    positions = [position_features(prompt, None, 0, config)]
    for t in range(1, L + 1):
        positions.append(position_features(prompt, cot[:, t - 1], t, config))
    return torch.stack(positions, dim=1)


def logits(params, features, config):
    """`W . features + b`; raises `NumericalError` on non-finite output."""
    W, b = split_params(params, config)
    z = features @ W.t() + b
    if not torch.isfinite(z).all():
        raise NumericalError(
            "non-finite logits, parameters have blown up",
            state={"param_abs_max": float(params.abs().max())},
        )
    return z


def masked_log_softmax(z, mask, temperature):
    """Log of the tempered softmax; `mask=COT` removes the digit tokens."""
    z = z / temperature
    if mask == COT:
        z = z.clone()
        z[..., :N_DIGITS] = float("-inf")
    elif mask != SCORE:
        raise ValueError("unknown position kind %r" % (mask,))
    return torch.log_softmax(z, dim=-1)


def token_dist(params, features, mask, config, temperature=None):
    """Next-token distribution at a position.

    Parameters
    ----------
    params : torch.Tensor
    features : torch.Tensor, shape=(..., F)
    mask : {"cot", "score"}
    config : realpg.config.PolicyConfig
    temperature : float, optional
        Defaults to `config.temperature`.

    Returns
    -------
    torch.Tensor, shape=(..., V)
        Digit entries are exactly zero under `mask="cot"`.
    """
    if temperature is None:
        temperature = config.temperature
    if temperature <= 0:
        raise ValueError("temperature must be positive, got %r" % (temperature,))
    return torch.exp(masked_log_softmax(logits(params, features, config), mask, temperature))


def init_policy(config, seed):
    """Parameters drawn i.i.d. uniform in `[-init_scale, init_scale]`."""
    rng = stream(seed, INIT)
    scale = config.init_scale
    values = rng.uniform(-scale, scale, size=config.n_params)
    return torch.from_numpy(values).to(DTYPE)


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class Evaluation:
    """Distributions and logit-space gradient pieces for N generations.

    Attributes
    ----------
    features : torch.Tensor, shape=(N, L + 1, F)
    cot : torch.Tensor of int64, shape=(N, L)
    cot_log_dists : torch.Tensor, shape=(N, L, V)
    score_log_dist : torch.Tensor, shape=(N, V)
    temperature : float
    """

    features: torch.Tensor
    cot: torch.Tensor
    cot_log_dists: torch.Tensor
    score_log_dist: torch.Tensor
    temperature: float

    @property
    def cot_dists(self):
        return self.cot_log_dists.exp()

    @property
    def score_dist(self):
        return self.score_log_dist.exp()

    @property
    def cot_features(self):
        return self.features[:, :-1]

    @property
    def score_features(self):
        return self.features[:, -1]

    def logp_cot(self):
        """`log pi(c | x)` per row, shape `(N, )`."""
        chosen = self.cot_log_dists.gather(-1, self.cot.unsqueeze(-1)).squeeze(-1)
        return chosen.sum(dim=-1)

    def logp_token(self, token):
        """`log pi(token | x, c)` at the score position.

        Parameters
        ----------
        token : int or torch.Tensor of int64, shape=(N, )
        """
        token = self._as_rows(token)
        value = self.score_log_dist.gather(-1, token.unsqueeze(-1)).squeeze(-1)
        if torch.isneginf(value).any():
            raise NumericalError("score token has probability exactly zero")
        return value

    def grad_logp_cot_z(self):
        """`d log pi(c | x) / dz` at each CoT position, shape `(N, L, V)`."""
        one_hot = torch.nn.functional.one_hot(self.cot, self.cot_log_dists.shape[-1]).to(DTYPE)
        return (one_hot - self.cot_dists) / self.temperature

    def grad_logp_token_z(self, token):
        """`d log pi(token | x, c) / dz` at the score position, shape `(N, V)`."""
        token = self._as_rows(token)
        p = self.score_dist
        one_hot = torch.nn.functional.one_hot(token, p.shape[-1]).to(DTYPE)
        return (one_hot - p) / self.temperature

    def grad_prob_token_z(self, token):
        """`d pi(token | x, c) / dz`: the softmax Jacobian row, shape `(N, V)`."""
        token = self._as_rows(token)
        p = self.score_dist
        p_k = p.gather(-1, token.unsqueeze(-1))
        return p_k * self.grad_logp_token_z(token)

    def rail(self, renormalize=False):
        """RAIL value and its logit-space gradient.

        Returns
        -------
        y_hat : torch.Tensor, shape=(N, )
        grad_z : torch.Tensor, shape=(N, V)
        """
        p = self.score_dist
        V = p.shape[-1]
        values = digit_values(V)
        y_hat = p @ values
        if not renormalize:
            return y_hat, p * (values - y_hat.unsqueeze(-1)) / self.temperature

        mask = digit_mask(V)
        mass = p @ mask
        y_norm = y_hat / mass
        grad_z = p * (values - y_norm.unsqueeze(-1) * mask) / (self.temperature * mass.unsqueeze(-1))
        return y_norm, grad_z

    def entropy(self):
        """Mean per-token entropy (nats) over the `L + 1` positions, shape `(N, )`."""
        log_dists = torch.cat([self.cot_log_dists, self.score_log_dist.unsqueeze(1)], dim=1)
        dists = log_dists.exp()
        terms = torch.where(dists > 0, dists * log_dists, torch.zeros_like(dists))
        return -terms.sum(dim=-1).mean(dim=-1)

    def _as_rows(self, token):
        n = self.cot.shape[0]
        if isinstance(token, torch.Tensor):
            return token.to(torch.int64).reshape(-1).expand(n)
        return torch.full((n,), int(token), dtype=torch.int64)


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def evaluate(params, prompt, cot, config):
    """Forward pass over fixed generations.

    Parameters
    ----------
    params : torch.Tensor
    prompt : torch.Tensor, shape=(N, d) or (d, )
    cot : torch.Tensor of int64, shape=(N, L) or (L, )
    config : realpg.config.PolicyConfig

    Returns
    -------
    Evaluation
    """
    prompt = torch.as_tensor(prompt, dtype=DTYPE)
    cot = torch.as_tensor(cot, dtype=torch.int64)
    if cot.dim() == 1:
        cot = cot.unsqueeze(0)
    if prompt.dim() == 1:
        prompt = prompt.unsqueeze(0).expand(cot.shape[0], -1)

    features = context_features(prompt, cot, config)
    z = logits(params, features, config)
    T = config.temperature
    return Evaluation(
        features=features,
        cot=cot,
        cot_log_dists=masked_log_softmax(z[:, :-1], COT, T),
        score_log_dist=masked_log_softmax(z[:, -1], SCORE, T),
        temperature=T,
    )


def log_prob_token(params, prompt, cot, token, config):
    """`log pi(token | x, c)` at the score position following `cot`."""
    return float(evaluate(params, prompt, cot, config).logp_token(token)[0])


def grad_log_prob_cot(params, prompt, cot, config):
    """`grad_theta log pi(c | x)`; digit rows receive nothing."""
    ev = evaluate(params, prompt, cot, config)
    return project(ev.grad_logp_cot_z()[0], ev.cot_features[0], config)


def grad_token_prob(params, prompt, cot, token, config):
    """`grad_theta pi(token | x, c)` at the score position."""
    ev = evaluate(params, prompt, cot, config)
    return project(ev.grad_prob_token_z(token)[0], ev.score_features[0], config)


def rail_value_and_grad(params, prompt, cot, config):
    """RAIL prediction `sum_k k pi(k | x, c)` over digits and its gradient.

    Uses the raw score-position probabilities unless
    `config.renormalize_digits` is set.

    Returns
    -------
    y_hat : float
    grad : torch.Tensor, shape=(n_params, )
    """
    ev = evaluate(params, prompt, cot, config)
    y_hat, grad_z = ev.rail(config.renormalize_digits)
    return float(y_hat[0]), project(grad_z[0], ev.score_features[0], config)
