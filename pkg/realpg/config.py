""" Run configuration.

Every knob of a run lives in one JSON document validated by the models
below. Unknown keys are rejected and the resolved document (defaults
included) is what the command line echoes next to its outputs, so a run
can always be reproduced from its `.resolved.json`.
"""

# =============================================================================
# IMPORTS
# =============================================================================
import json
import logging
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic import field_validator, model_validator

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
N_DIGITS = 10
SCORE_MIN = 1
SCORE_MAX = 5
PROMPT_FEATURE_DIM = 5
CLIP_BOUND = 1.0
ADVANTAGE_EPS = 1e-8


# =============================================================================
# BASE CLASSES
# =============================================================================
class _Config(BaseModel):
    """Strict base model: unknown keys are errors."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)


# =============================================================================
# POLICY
# =============================================================================
class VocabLayout(_Config):
    """Token id layout: digits 0..9 occupy ids 0..9, CoT tokens the rest."""

    vocab_size: int = Field(14, ge=N_DIGITS + 2)

    @property
    def digit_tokens(self):
        return list(range(N_DIGITS))

    @property
    def cot_tokens(self):
        return list(range(N_DIGITS, self.vocab_size))

    @property
    def n_cot(self):
        return self.vocab_size - N_DIGITS


class PolicyConfig(_Config):
    """Linear-softmax policy over context features.

    The feature dimension is `F = d + V + 1` (prompt features, previous
    token one-hot, normalized position) and the flat parameter vector holds
    `W` (V x F, row-major) followed by `b` (V).
    """

    vocab: VocabLayout = Field(default_factory=VocabLayout)
    prompt_feature_dim: int = Field(PROMPT_FEATURE_DIM, ge=1)
    cot_length: int = Field(3, ge=1)
    temperature: float = Field(1.0, gt=0.0)
    init_scale: float = Field(0.01, ge=0.0)
    renormalize_digits: bool = False

    @property
    def vocab_size(self):
        return self.vocab.vocab_size

    @property
    def feature_dim(self):
        return self.prompt_feature_dim + self.vocab_size + 1

    @property
    def n_params(self):
        return self.vocab_size * self.feature_dim + self.vocab_size


# =============================================================================
# ENVIRONMENT
# =============================================================================
class EnvConfig(_Config):
    """Gaussian-mixture judge environment with a clamped +-1 label kernel."""

    score_min: int = SCORE_MIN
    score_max: int = SCORE_MAX
    feature_noise: float = Field(0.5, ge=0.0)
    signal_scale: float = 1.0
    label_flip_prob: float = Field(0.2, ge=0.0, lt=1.0)
    prompt_feature_dim: int = PROMPT_FEATURE_DIM

    @field_validator("score_min")
    @classmethod
    def _fixed_min(cls, v):
        if v != SCORE_MIN:
            raise ValueError("score range is fixed to %d..%d" % (SCORE_MIN, SCORE_MAX))
        return v

    @field_validator("score_max")
    @classmethod
    def _fixed_max(cls, v):
        if v != SCORE_MAX:
            raise ValueError("score range is fixed to %d..%d" % (SCORE_MIN, SCORE_MAX))
        return v

    @field_validator("prompt_feature_dim")
    @classmethod
    def _fixed_dim(cls, v):
        if v != PROMPT_FEATURE_DIM:
            raise ValueError("prompt features are one-hot over the %d scores" % PROMPT_FEATURE_DIM)
        return v


# =============================================================================
# REWARD AND ESTIMATOR
# =============================================================================
class RewardConfig(_Config):
    lam: float = Field(1.0, ge=0.0)
    kind: Optional[Literal["real", "binary"]] = None


class EstimatorConfig(_Config):
    """Gradient estimator selection and stabilization.

    `clip_bound` and `eps` are fixed constants of the standardized clipped
    advantage; the boolean flags exist so the oracle can audit the
    unstabilized estimator.
    """

    kind: Literal["real", "standard_rl", "raft", "jepo", "sft", "tract"] = "real"
    beta: float = Field(0.01, ge=0.0)
    lam: float = Field(1.0, ge=0.0)
    clip_bound: float = CLIP_BOUND
    eps: float = ADVANTAGE_EPS
    baseline: bool = True
    standardize: bool = True
    clip: bool = True
    raw_jepo_weights: bool = False
    cot_source: Optional[str] = None

    @field_validator("clip_bound", "eps")
    @classmethod
    def _fixed_constants(cls, v, info):
        expected = {"clip_bound": CLIP_BOUND, "eps": ADVANTAGE_EPS}[info.field_name]
        if v != expected:
            raise ValueError("%s is fixed to %g" % (info.field_name, expected))
        return v


# =============================================================================
# TRAINING, INFERENCE, DATA
# =============================================================================
class TrainConfig(_Config):
    steps: int = Field(500, ge=0)
    batch_size: int = Field(16, ge=1)
    group_size: int = Field(16, ge=2)
    learning_rate: float = Field(0.05, ge=0.0)
    optimizer: Literal["sgd", "adam"] = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    filter: Literal["all", "partial", "exclude_all_wrong", "exclude_all_right"] = "partial"
    seed: int = Field(0, ge=0)
    init_seed: int = Field(0, ge=0)
    init_checkpoint: Optional[str] = None
    record_interval: int = Field(0, ge=0)
    log_interval: int = Field(50, ge=1)
    progress: bool = False


class InferConfig(_Config):
    mode: Literal["rail", "greedy", "rail_avg_n"] = "rail"
    n: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    report_modes: List[Literal["rail", "greedy", "rail_avg_n"]] = Field(
        default_factory=lambda: ["greedy", "rail", "rail_avg_n"]
    )


class MetricsConfig(_Config):
    tau_variant: Literal["b", "a"] = "b"


class DataConfig(_Config):
    n_train: int = Field(2000, ge=1)
    n_test: int = Field(1000, ge=1)
    seed_train: int = Field(1, ge=0)
    seed_test: int = Field(2, ge=0)
    train_path: Optional[str] = None
    test_path: Optional[str] = None


class RunConfig(_Config):
    """Union of every configuration section of a run."""

    name: str = "real"
    out_dir: str = "runs"
    env: EnvConfig = Field(default_factory=EnvConfig)
    policy: PolicyConfig = Field(default_factory=PolicyConfig)
    reward: RewardConfig = Field(default_factory=RewardConfig)
    estimator: EstimatorConfig = Field(default_factory=EstimatorConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    infer: InferConfig = Field(default_factory=InferConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    data: DataConfig = Field(default_factory=DataConfig)

    @model_validator(mode="after")
    def _consistent(self):
        if self.policy.prompt_feature_dim != self.env.prompt_feature_dim:
            raise ValueError(
                "policy.prompt_feature_dim (%d) must equal env.prompt_feature_dim (%d)"
                % (self.policy.prompt_feature_dim, self.env.prompt_feature_dim)
            )
        if self.reward.lam != self.estimator.lam:
            raise ValueError(
                "reward.lam (%g) and estimator.lam (%g) disagree"
                % (self.reward.lam, self.estimator.lam)
            )
        if self.reward.kind is None:
            kind = "binary" if self.estimator.kind == "standard_rl" else "real"
            self.reward.kind = kind
        if self.estimator.kind == "tract" and self.estimator.cot_source is None:
            raise ValueError("estimator.kind='tract' needs estimator.cot_source")
        return self


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def parse_value(raw):
    """Parse an override value as JSON, falling back to a plain string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(document, overrides):
    """Apply `--a.b.c=value` style overrides to a raw config document.

    Parameters
    ----------
    document : dict
        Raw (unvalidated) configuration.

    overrides : List[str]
        Items of the form `--dotted.key=value` or `dotted.key=value`.

    Returns
    -------
    dict
        The same document, modified in place.
    """
    for item in overrides:
        key, sep, raw = item.lstrip("-").partition("=")
        if not sep or not key:
            raise ConfigError("override %r is not of the form --key=value" % item)
        node = document
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError("override %r descends into a non-object" % item)
            node = child
        node[parts[-1]] = parse_value(raw)
    return document


def validate(document):
    """Validate a raw document into a `RunConfig`, raising `ConfigError`."""
    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def load_config(path=None, overrides=()):
    """Read, override and validate a run configuration.

    Parameters
    ----------
    path : str or None
        JSON document; `None` starts from all defaults.

    overrides : iterable of str

    Returns
    -------
    RunConfig
    """
    document = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                document = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError("cannot read config %s: %s" % (path, e)) from e
        if not isinstance(document, dict):
            raise ConfigError("config %s must hold a JSON object" % path)

    apply_overrides(document, list(overrides))
    config = validate(document)
    logger.debug("resolved config: %s", config.model_dump())
    return config


def dump_resolved(config, path):
    """Write the fully-resolved config (defaults included) as JSON."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(config.model_dump(mode="json"), handle, indent=2, sort_keys=True)
        handle.write("\n")
