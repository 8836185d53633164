""" Enumeration, finite-difference and brute-force verification oracles. """
from . import exact, finite_difference, optimality, suite
from .exact import (
    TinyInstance,
    estimator_expectation,
    exact_gradient,
    exact_objective,
    monte_carlo_objective,
    random_instance,
    reinforce_gradient,
)
from .finite_difference import finite_diff_gradient
from .optimality import DiscreteJoint, optimality_suite
from .suite import run_verification
