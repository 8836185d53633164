import math

import pytest
import torch

import realpg as rpg
from realpg.reward import binary_reward, group_accuracy, keep_group, real_reward


def test_real_reward_examples():
    assert real_reward(5.0, 0.0, 5, 0.0) == 0.0
    assert real_reward(3.0, 0.0, 5, 0.0) == -4.0
    assert real_reward(3.7, math.log(0.7), 5, 1.0) == pytest.approx(-2.046675, abs=1e-6)


def test_real_reward_non_positive():
    g = torch.Generator().manual_seed(0)
    y_hat = torch.rand(100, generator=g, dtype=torch.float64) * 9
    logp = -torch.rand(100, generator=g, dtype=torch.float64) * 5
    assert torch.all(real_reward(y_hat, logp, 3, 1.0) <= 0)


def test_real_reward_ordinal():
    rewards = [real_reward(5.0 - gap, -0.5, 5, 1.0) for gap in (0.0, 0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(rewards, rewards[1:]))


def test_binary_reward():
    assert float(binary_reward(5, 5)) == 1.0
    assert float(binary_reward(4, 5)) == 0.0
    assert float(binary_reward(10, 10)) == 0.0


class _Traj:
    def __init__(self, score):
        self.score = score


@pytest.mark.parametrize(
    "scores, expected",
    [
        ([5, 1, 5, 2], 0.5),
        ([5] * 8, 1.0),
        ([5, 1, 1, 1, 1, 1, 1, 1], 0.125),
    ],
)
def test_group_accuracy(scores, expected):
    assert group_accuracy([_Traj(s) for s in scores], 5) == expected


@pytest.mark.parametrize(
    "mode, kept",
    [
        ("all", [True, True, True]),
        ("partial", [False, True, False]),
        ("exclude_all_wrong", [False, True, True]),
        ("exclude_all_right", [True, True, False]),
    ],
)
def test_keep_group(mode, kept):
    assert [keep_group(acc, mode) for acc in (0.0, 0.5, 1.0)] == kept


def test_keep_group_unknown():
    with pytest.raises(ValueError):
        keep_group(0.5, "some")
