""" Binary checkpoints of policy parameters and optimizer state.

Layout, all little-endian::

    b"REALPG1"              magic
    uint32                  header length in bytes
    header                  UTF-8 JSON: version, policy config, optimizer, step
    float64[n_params]       parameters, row-major W then b
    float64[n_params] x 2   Adam moments m and v, when present
"""

# =============================================================================
# IMPORTS
# =============================================================================
import json
import logging
import struct
from dataclasses import dataclass

import numpy as np
import torch
from pydantic import ValidationError

from ..config import PolicyConfig
from ..exceptions import CompatibilityError, ConfigError
from ..optim import OptimizerState

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
MAGIC = b"REALPG1"
VERSION = 1
FLOAT = np.dtype("<f8")
HEADER_KEYS = ("version", "policy", "optimizer", "step", "n_params", "has_moments")


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class Checkpoint:
    policy: PolicyConfig
    params: torch.Tensor
    optimizer: OptimizerState
    step: int = 0


# =============================================================================
# UTILITY FUNCTIONS
# =============================================================================
def _to_bytes(tensor):
    return np.ascontiguousarray(tensor.detach().cpu().numpy(), dtype=FLOAT).tobytes()


def _from_bytes(buffer, offset, n):
    array = np.frombuffer(buffer, dtype=FLOAT, count=n, offset=offset).astype(np.float64)
    return torch.from_numpy(array)


def check_compatible(checkpoint, config):
    """Raise `CompatibilityError` unless the checkpoint fits `config`."""
    ours = checkpoint.policy
    if (ours.vocab_size, ours.prompt_feature_dim) != (config.vocab_size, config.prompt_feature_dim):
        raise CompatibilityError(
            "checkpoint has V=%d, d=%d but the config asks for V=%d, d=%d"
            % (ours.vocab_size, ours.prompt_feature_dim, config.vocab_size, config.prompt_feature_dim)
        )


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def save_checkpoint(checkpoint, path):
    """Write a checkpoint; `load_checkpoint` reads it back bit-exactly."""
    has_moments = checkpoint.optimizer.m is not None
    header = {
        "version": VERSION,
        "policy": checkpoint.policy.model_dump(),
        "optimizer": checkpoint.optimizer.meta(),
        "step": int(checkpoint.step),
        "n_params": int(checkpoint.params.shape[0]),
        "has_moments": has_moments,
    }
    header = json.dumps(header, sort_keys=True).encode("utf-8")

    with open(path, "wb") as f_handle:
        f_handle.write(MAGIC)
        f_handle.write(struct.pack("<I", len(header)))
        f_handle.write(header)
        f_handle.write(_to_bytes(checkpoint.params))
        if has_moments:
            f_handle.write(_to_bytes(checkpoint.optimizer.m))
            f_handle.write(_to_bytes(checkpoint.optimizer.v))
    logger.debug("saved checkpoint at step %d to %s", checkpoint.step, path)


def load_checkpoint(path, config=None):
    """Read a checkpoint.

    Parameters
    ----------
    path : str
    config : realpg.config.PolicyConfig, optional
        When given, the checkpoint's dimensions must match it.

    Returns
    -------
    Checkpoint

    Raises
    ------
    CompatibilityError
        Bad magic, unknown version, truncated or oversized file, a header
        with missing or invalid entries, or a dimension mismatch with
        `config`.
    ConfigError
        The file cannot be read.
    """
    try:
        with open(path, "rb") as f_handle:
            buffer = f_handle.read()
    except OSError as e:
        raise ConfigError("cannot read checkpoint %s: %s" % (path, e)) from e

    if buffer[: len(MAGIC)] != MAGIC:
        raise CompatibilityError("%s is not a realpg checkpoint" % path)
    offset = len(MAGIC)
    if len(buffer) < offset + 4:
        raise CompatibilityError("%s is truncated" % path)
    (header_len,) = struct.unpack_from("<I", buffer, offset)
    offset += 4
    try:
        header = json.loads(buffer[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CompatibilityError("%s has a corrupt header" % path) from e
    offset += header_len
    if not isinstance(header, dict):
        raise CompatibilityError("%s has a corrupt header" % path)

    if header.get("version") != VERSION:
        raise CompatibilityError(
            "%s has checkpoint version %r, expected %d" % (path, header.get("version"), VERSION)
        )

    missing = sorted(set(HEADER_KEYS) - set(header))
    if missing:
        raise CompatibilityError("%s: header lacks %s" % (path, ", ".join(missing)))

    n = header["n_params"]
    n_arrays = 3 if header["has_moments"] else 1
    expected = offset + n_arrays * n * FLOAT.itemsize
    if len(buffer) != expected:
        raise CompatibilityError(
            "%s holds %d bytes, expected %d (truncated or corrupt)" % (path, len(buffer), expected)
        )

    try:
        policy = PolicyConfig.model_validate(header["policy"])
    except ValidationError as e:
        raise CompatibilityError("%s: invalid policy block: %s" % (path, e)) from e
    if policy.n_params != n:
        raise CompatibilityError("%s: parameter count disagrees with its own policy config" % path)

    params = _from_bytes(buffer, offset, n)
    meta = header["optimizer"]
    try:
        optimizer = OptimizerState(
            kind=meta["kind"], beta1=meta["beta1"], beta2=meta["beta2"], eps=meta["eps"], t=meta["t"]
        )
    except (KeyError, TypeError) as e:
        raise CompatibilityError("%s: invalid optimizer block" % path) from e
    if header["has_moments"]:
        optimizer.m = _from_bytes(buffer, offset + n * FLOAT.itemsize, n)
        optimizer.v = _from_bytes(buffer, offset + 2 * n * FLOAT.itemsize, n)

    checkpoint = Checkpoint(policy=policy, params=params, optimizer=optimizer, step=header["step"])
    if config is not None:
        check_compatible(checkpoint, config)
    return checkpoint
