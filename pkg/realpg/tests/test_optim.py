import torch

import realpg as rpg
from realpg.optim import OptimizerState, optimizer_update


def test_sgd_exact():
    g = torch.tensor([0.3, -1.7, 2.0], dtype=torch.float64)
    state, delta = optimizer_update(OptimizerState(kind="sgd"), g, 0.01)
    assert torch.equal(delta, 0.01 * g)
    assert state.t == 1


def test_adam_first_step_is_sign():
    g = torch.tensor([0.3, -1.7, 2.0, 1e-3], dtype=torch.float64)
    state = OptimizerState.from_config(rpg.config.TrainConfig(), 4)
    new_state, delta = optimizer_update(state, g, 0.1)
    torch.testing.assert_close(delta, 0.1 * torch.sign(g), rtol=1e-4, atol=0.0)
    assert state.t == 0 and torch.all(state.m == 0)
    assert new_state.t == 1


def test_adam_zero_gradient_never_moves():
    state = OptimizerState.from_config(rpg.config.TrainConfig(), 5)
    for _ in range(10):
        state, delta = optimizer_update(state, torch.zeros(5, dtype=torch.float64), 1.0)
        assert torch.all(delta == 0.0)


def test_adam_matches_torch():
    g = torch.Generator().manual_seed(0)
    grads = [torch.randn(6, generator=g, dtype=torch.float64) for _ in range(5)]

    param = torch.zeros(6, dtype=torch.float64, requires_grad=True)
    reference = torch.optim.Adam([param], lr=0.01, maximize=True)
    state = OptimizerState.from_config(rpg.config.TrainConfig(), 6)
    ours = torch.zeros(6, dtype=torch.float64)
    for grad in grads:
        param.grad = grad.clone()
        reference.step()
        state, delta = optimizer_update(state, grad, 0.01)
        ours = ours + delta
    torch.testing.assert_close(ours, param.detach(), rtol=1e-10, atol=1e-12)
