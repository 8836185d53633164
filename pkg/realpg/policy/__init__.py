from . import sampling, softmax
from .sampling import Trajectory, greedy_decode, sample_group, sample_trajectory
from .softmax import (
    grad_log_prob_cot,
    grad_token_prob,
    init_policy,
    log_prob_token,
    rail_value_and_grad,
    token_dist,
)
