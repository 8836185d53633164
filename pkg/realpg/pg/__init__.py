""" Group advantages and policy-gradient estimators. """
from . import advantage, estimator
from .advantage import rloo_advantages
from .estimator import ESTIMATORS, Group, estimate, make_group
