""" The group-sampling training loop.

Each step draws a minibatch of prompts, samples K generations per prompt,
scores them, drops groups rejected by the dynamic-sampling filter, averages
the configured estimator over the kept groups and applies one optimizer
ascent step.
"""

# =============================================================================
# IMPORTS
# =============================================================================
import logging
from dataclasses import dataclass, field
from typing import List

import pandas as pd
import torch
from tqdm import tqdm

from .. import infer
from ..exceptions import NumericalError
from ..optim import OptimizerState, optimizer_update
from ..pg import estimate, make_group
from ..policy import init_policy, sample_group
from ..reward import keep_group
from ..utils import SHUFFLE, TRAIN, parallel_map, stream
from .checkpoint import Checkpoint, load_checkpoint

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
STEP_COLUMNS = ["step", "mean_reward", "mean_acc", "kept_frac", "grad_norm", "entropy", "resp_len"]
EVAL_COLUMNS = ["step", "pearson", "spearman", "kendall", "rmse", "mae", "entropy", "resp_len"]


# =============================================================================
# MODULE CLASSES
# =============================================================================
@dataclass
class StepLog:
    """Diagnostics of one training step.

    `mean_reward`, `mean_acc`, `entropy` and `resp_len` are averaged over
    every sampled group, kept or not; `grad_norm` is the norm of the
    averaged estimator over the kept groups (0 when none are kept).
    """

    step: int
    mean_reward: float
    mean_acc: float
    kept_frac: float
    grad_norm: float
    entropy: float
    resp_len: float
    accuracies: List[float] = field(default_factory=list, repr=False)

    def row(self):
        return [getattr(self, column) for column in STEP_COLUMNS]


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    logs: List[StepLog]
    curve: List[list] = field(default_factory=list)

    def frame(self):
        """Per-step log with the `step,mean_reward,...` header."""
        return pd.DataFrame([log.row() for log in self.logs], columns=STEP_COLUMNS)

    def curve_frame(self):
        return pd.DataFrame(self.curve, columns=EVAL_COLUMNS)


# =============================================================================
# UTILITY FUNCTIONS
# =============================================================================
def batch_indices(n, batch_size, step, seed):
    """Prompts of step `step`: consecutive slices of one seeded shuffle,
    wrapping around the end of the dataset."""
    order = stream(seed, SHUFFLE).permutation(n)
    start = step * batch_size
    return [int(order[(start + j) % n]) for j in range(batch_size)]


def initial_params(config):
    """Parameters from `train.init_checkpoint`, else a fresh initialization."""
    if config.train.init_checkpoint is not None:
        logger.info("initializing from %s", config.train.init_checkpoint)
        return load_checkpoint(config.train.init_checkpoint, config.policy).params.clone()
    return init_policy(config.policy, config.train.init_seed)


def cot_source_params(config):
    if config.estimator.kind != "tract":
        return None
    return load_checkpoint(config.estimator.cot_source, config.policy).params


def eval_row(step, params, dataset, config):
    """One row of the held-out evaluation curve, with RAIL inference."""
    predictions = infer.predict(params, dataset, config.policy, "rail", seed=config.infer.seed)
    report = infer.score(predictions, dataset, config.policy, config.metrics.tau_variant)
    return [step, report.r, report.rho, report.tau, report.rmse, report.mae, report.mean_entropy, report.mean_resp_len]


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def train_step(params, state, batch, dataset, config, step, cot_source=None):
    """One training step.

    Parameters
    ----------
    params : torch.Tensor
    state : realpg.optim.OptimizerState
    batch : List[int]
        Prompt indices into `dataset`.
    dataset : realpg.data.JudgeDataset
    config : realpg.config.RunConfig
    step : int
        Keys the sampling streams `(TRAIN, step, prompt, sample)`.
    cot_source : torch.Tensor, optional
        Frozen parameters to sample CoTs from instead of `params`.

    Returns
    -------
    params : torch.Tensor
    state : realpg.optim.OptimizerState
    log : StepLog
    """
    policy, estimator = config.policy, config.estimator
    sampler = cot_source if cot_source is not None else params

    def _group(idx):
        trajectories = sample_group(
            sampler,
            dataset[idx].features,
            idx,
            config.train.group_size,
            policy,
            seed=config.train.seed,
            key=(TRAIN, step),
        )
        return make_group(trajectories, params, dataset, estimator, policy, reward_kind=config.reward.kind)

    groups = parallel_map(_group, batch)
    kept = [group for group in groups if keep_group(group.accuracy, config.train.filter)]

    grad_norm = 0.0
    if kept:
        grads = parallel_map(lambda group: estimate(group, estimator, policy), kept)
        grad = torch.stack(grads).sum(dim=0) / len(kept)
        grad_norm = float(torch.linalg.vector_norm(grad))
        if not torch.isfinite(grad).all():
            raise NumericalError(
                "non-finite gradient at step %d" % step,
                state={
                    "step": step,
                    "batch": list(batch),
                    "grad_norm": grad_norm,
                    "param_abs_max": float(params.abs().max()),
                    "mean_reward": float(torch.stack([g.rewards.mean() for g in groups]).mean()),
                },
            )
        state, delta = optimizer_update(state, grad, config.train.learning_rate)
        params = params + delta

    log = StepLog(
        step=step,
        mean_reward=float(torch.stack([group.rewards.mean() for group in groups]).mean()),
        mean_acc=sum(group.accuracy for group in groups) / len(groups),
        kept_frac=len(kept) / len(groups),
        grad_norm=grad_norm,
        entropy=sum(group.entropy for group in groups) / len(groups),
        resp_len=sum(group.response_length for group in groups) / len(groups),
        accuracies=[group.accuracy for group in groups],
    )
    return params, state, log


def train_run(config, dataset, test_dataset=None, params=None):
    """Run `config.train.steps` training steps.

    Parameters
    ----------
    config : realpg.config.RunConfig
    dataset : realpg.data.JudgeDataset
        Training prompts.
    test_dataset : realpg.data.JudgeDataset, optional
        Held-out prompts for the evaluation curve recorded every
        `train.record_interval` steps.
    params : torch.Tensor, optional
        Initial parameters; defaults to `initial_params(config)`.

    Returns
    -------
    TrainResult
    """
    train = config.train
    if params is None:
        params = initial_params(config)
    state = OptimizerState.from_config(train, config.policy.n_params)
    cot_source = cot_source_params(config)
    record = train.record_interval > 0 and test_dataset is not None

    logs, curve = [], []
    steps = tqdm(range(train.steps), disable=not train.progress, desc=config.name)
    for step in steps:
        if record and step % train.record_interval == 0:
            curve.append(eval_row(step, params, test_dataset, config))

        batch = batch_indices(len(dataset), train.batch_size, step, train.seed)
        params, state, log = train_step(params, state, batch, dataset, config, step, cot_source)
        logs.append(log)

        if step % train.log_interval == 0:
            logger.info(
                "step %d: reward %.4f acc %.3f kept %.2f |g| %.3e entropy %.4f",
                step, log.mean_reward, log.mean_acc, log.kept_frac, log.grad_norm, log.entropy,
            )

    if record:
        curve.append(eval_row(train.steps, params, test_dataset, config))

    checkpoint = Checkpoint(policy=config.policy, params=params, optimizer=state, step=train.steps)
    return TrainResult(checkpoint=checkpoint, logs=logs, curve=curve)
