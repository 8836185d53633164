""" Central finite differences for checking analytic gradients. """

# =============================================================================
# IMPORTS
# =============================================================================
import logging

import torch

from ..policy.softmax import DTYPE
from .exact import exact_objective

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
STEP = 1e-5
RTOL = 1e-6
ATOL = 1e-8


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def central_difference(fn, params, step=STEP):
    """Coordinate-wise centered differences of a scalar or vector function.

    All `2 n_params` perturbed points are built as one batch, so a function
    returning several outputs is differenced in a single pass.

    Parameters
    ----------
    fn : callable
        Maps a flat parameter tensor to a float or a 1-D tensor of outputs.
    params : torch.Tensor
    step : float

    Returns
    -------
    torch.Tensor, shape=(n_params, ) or (n_params, n_outputs)
    """
    x0 = params.detach().clone().to(DTYPE)
    shift = step * torch.eye(x0.shape[0], dtype=DTYPE)
    points = torch.cat([x0 + shift, x0 - shift])
    values = torch.stack([torch.as_tensor(fn(x), dtype=DTYPE) for x in points])
    f_plus, f_minus = values.split(x0.shape[0])
    return (f_plus - f_minus) / (2 * step)


def finite_diff_gradient(params, instance, step=STEP, objective="reward"):
    """Central differences of the exact objective.

    Parameters
    ----------
    objective : {"reward", "loss"}
        `"reward"` differences `J = -L`, comparable with
        `exact.exact_gradient`; `"loss"` differences `L` itself.
    """
    if objective not in ("reward", "loss"):
        raise ValueError("objective must be 'reward' or 'loss', got %r" % (objective,))
    sign = -1.0 if objective == "reward" else 1.0
    logger.debug("finite differences over %d parameters, step %g", params.shape[0], step)
    return central_difference(lambda x: sign * exact_objective(x, instance), params, step)


def relative_error(actual, expected, atol=ATOL, rtol=RTOL):
    """Largest elementwise error relative to `|expected|`, with the
    absolute floor `atol / rtol` on the denominator."""
    actual = torch.as_tensor(actual, dtype=DTYPE)
    expected = torch.as_tensor(expected, dtype=DTYPE)
    scale = torch.clamp(expected.abs(), min=atol / rtol)
    return float(((actual - expected).abs() / scale).max())


def agrees(actual, expected, rtol=RTOL, atol=ATOL):
    """`|actual - expected| <= max(rtol |expected|, atol)` elementwise."""
    return relative_error(actual, expected, atol=atol, rtol=rtol) <= rtol


def step_sweep(fn, params, grad, steps=(1e-3, 1e-4, 1e-5, 1e-6, 1e-7)):
    """Max absolute deviation of `grad` from centered differences per step.

    Too large a step shows truncation error; too small a step shows
    cancellation error.

    Returns
    -------
    dict
        Step size to max absolute error.
    """
    errors = {}
    for step in steps:
        fd = central_difference(fn, params, step)
        errors[step] = float((fd - grad).abs().max())
        logger.debug("step %g: max abs error %.3e", step, errors[step])
    return errors
