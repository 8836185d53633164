# =============================================================================
# IMPORTS
# =============================================================================
import json
import logging

import torch
from pydantic import ValidationError

from ..config import EnvConfig
from ..exceptions import CompatibilityError, ConfigError
from .env import DTYPE, JudgeExample

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
FORMAT = "realpg-judge-v1"


# =============================================================================
# MODULE CLASSES
# =============================================================================
class JudgeDataset(torch.utils.data.Dataset):
    """Map-style dataset of judge examples.

    Parameters
    ----------
    examples : List[JudgeExample]
    config : realpg.config.EnvConfig
        Generative parameters, kept for oracle queries.
    seed : int or None
        Generation seed, `None` when unknown.

    Methods
    -------
    save(path)
        Write the line-delimited JSON file format.

    load(path)
        Read a dataset written by `save`.

    Examples
    --------
    >>> ds = rpg.data.make_dataset(rpg.config.EnvConfig(), n=10, seed=0)
    >>> ds.golds.shape
    torch.Size([10])

    """

    def __init__(self, examples=None, config=None, seed=None):
        super(JudgeDataset, self).__init__()
        self.examples = list(examples) if examples is not None else []
        self.config = config if config is not None else EnvConfig()
        self.seed = seed

    def __len__(self):
        return len(self.examples)

    def __getitem__(self, idx):
        if isinstance(idx, int):
            return self.examples[idx]

        raise TypeError("cannot index a JudgeDataset with %s" % type(idx).__name__)

    @property
    def features(self):
        """Prompt features, shape `(n, d)`."""
        return torch.stack([example.features for example in self.examples])

    @property
    def golds(self):
        return torch.tensor([example.gold for example in self.examples], dtype=DTYPE)

    @property
    def qualities(self):
        return torch.tensor([example.quality for example in self.examples], dtype=torch.int64)

    def save(self, path):
        """Save dataset to path.

        One header line carrying the environment config, seed and size,
        followed by one `{"q", "y", "f"}` record per example.
        """
        header = {
            "format": FORMAT,
            "config": self.config.model_dump(),
            "seed": self.seed,
            "n": len(self),
        }
        with open(path, "w", encoding="utf-8") as f_handle:
            f_handle.write(json.dumps(header, sort_keys=True) + "\n")
            for example in self.examples:
                record = {
                    "q": example.quality,
                    "y": example.gold,
                    "f": [float(v) for v in example.features],
                }
                f_handle.write(json.dumps(record) + "\n")

    @classmethod
    def load(cls, path):
        """Load path to dataset.

        Raises `CompatibilityError` for foreign or truncated files.
        """
        try:
            with open(path, "r", encoding="utf-8") as f_handle:
                lines = [line for line in f_handle.read().split("\n") if line]
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigError("cannot read dataset %s: %s" % (path, e)) from e

        try:
            header = json.loads(lines[0])
        except (IndexError, json.JSONDecodeError) as e:
            raise CompatibilityError("%s has no dataset header" % path) from e
        if not isinstance(header, dict) or header.get("format") != FORMAT:
            raise CompatibilityError("%s is not a %s file" % (path, FORMAT))

        examples = []
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                record = json.loads(line)
                examples.append(
                    JudgeExample(
                        features=torch.tensor(record["f"], dtype=DTYPE),
                        gold=int(record["y"]),
                        quality=int(record["q"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise CompatibilityError("%s:%d is not a judge record" % (path, lineno)) from e

        if len(examples) != header.get("n"):
            raise CompatibilityError(
                "%s holds %d records, header says %d" % (path, len(examples), header["n"])
            )
        logger.info("loaded %d examples from %s", len(examples), path)
        try:
            config = EnvConfig.model_validate(header["config"])
        except (KeyError, ValidationError) as e:
            raise CompatibilityError("%s has an invalid environment config" % path) from e
        return cls(examples, config=config, seed=header.get("seed"))
