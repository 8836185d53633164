""" Functional optimizers on flat parameter vectors.

Updates are ascent directions: the caller applies `params + delta`.
"""

# =============================================================================
# IMPORTS
# =============================================================================
from dataclasses import dataclass, replace
from typing import Optional

import torch

DTYPE = torch.float64


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class OptimizerState:
    """Optimizer hyperparameters and moments.

    Attributes
    ----------
    kind : {"sgd", "adam"}
    beta1, beta2, eps : float
        Adam constants, ignored by sgd.
    t : int
        Number of updates applied so far.
    m, v : torch.Tensor or None
        Adam first and second moments.
    """

    kind: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Optional[torch.Tensor] = None
    v: Optional[torch.Tensor] = None

    @classmethod
    def from_config(cls, config, n_params):
        """Fresh state for a `TrainConfig`."""
        state = cls(
            kind=config.optimizer,
            beta1=config.adam_beta1,
            beta2=config.adam_beta2,
            eps=config.adam_eps,
        )
        if state.kind == "adam":
            state.m = torch.zeros(n_params, dtype=DTYPE)
            state.v = torch.zeros(n_params, dtype=DTYPE)
        return state

    def meta(self):
        return {
            "kind": self.kind,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "t": self.t,
        }


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def optimizer_update(state, grad, eta):
    """One optimizer step.

    Parameters
    ----------
    state : OptimizerState
    grad : torch.Tensor
        Ascent direction.
    eta : float
        Learning rate.

    Returns
    -------
    state : OptimizerState
        New state; the input state is not modified.
    delta : torch.Tensor
        Parameter increment.
    """
    if state.kind == "sgd":
        return replace(state, t=state.t + 1), eta * grad

    elif state.kind == "adam":
        m = state.m if state.m is not None else torch.zeros_like(grad)
        v = state.v if state.v is not None else torch.zeros_like(grad)
        t = state.t + 1

        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)

        delta = eta * m_hat / (torch.sqrt(v_hat) + state.eps)
        return replace(state, t=t, m=m, v=v), delta

    raise ValueError("unknown optimizer %r" % (state.kind,))
