"""
realpg
Regression-aware policy gradients with a policy-dependent reward, on small
autoregressive softmax policies and synthetic judge environments.
"""

from . import config, exceptions, utils
from . import metrics, reward, optim
from . import policy, data, pg, infer, oracle, app
from .app.experiment import *
from .config import RunConfig, load_config
from .metrics import MetricsReport

__version__ = "0.1.0"
