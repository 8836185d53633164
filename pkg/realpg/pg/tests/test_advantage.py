import math

import pytest
import torch

from realpg.pg.advantage import loo_baselines, rloo_advantages


def test_two_point():
    b, A, A_std = rloo_advantages([1.0, 0.0])
    assert A.tolist() == [1.0, -1.0]
    torch.testing.assert_close(A_std, torch.tensor([1.0, -1.0], dtype=torch.float64))


def test_degenerate_group():
    _, A, A_std = rloo_advantages([2.5] * 6)
    assert torch.all(A == 0.0)
    assert torch.all(A_std == 0.0)


def test_clipped_example():
    b, A, A_std = rloo_advantages([3.0, -1.0, -1.0, -1.0])
    torch.testing.assert_close(b, torch.tensor([-1.0, 1 / 3, 1 / 3, 1 / 3], dtype=torch.float64))
    torch.testing.assert_close(A, torch.tensor([4.0, -4 / 3, -4 / 3, -4 / 3], dtype=torch.float64))
    expected = -(4 / 3) / (4 / math.sqrt(3) + 1e-8)
    assert float(A_std[0]) == 1.0
    assert float(A_std[1]) == pytest.approx(expected, abs=1e-12)
    assert float(A_std[1]) == pytest.approx(-0.57735, abs=1e-5)


def test_unclipped_example():
    _, _, A_std = rloo_advantages([3.0, -1.0, -1.0, -1.0], clip=False)
    assert float(A_std[0]) == pytest.approx(math.sqrt(3), abs=1e-7)


def test_raw_advantages_without_baseline():
    _, A, A_std = rloo_advantages([3.0, -1.0], baseline=False, standardize=False, clip=False)
    assert A.tolist() == [3.0, -1.0]
    assert A_std.tolist() == [3.0, -1.0]


@pytest.mark.parametrize("seed", range(5))
def test_clip_bound(seed):
    rewards = torch.randn(16, generator=torch.Generator().manual_seed(seed), dtype=torch.float64) * 10
    _, _, A_std = rloo_advantages(rewards)
    assert torch.all(A_std.abs() <= 1.0)


def test_single_sample_rejected():
    with pytest.raises(ValueError):
        loo_baselines([1.0])
