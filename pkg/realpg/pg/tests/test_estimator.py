import pytest
import torch

import realpg as rpg
from realpg.pg import estimator
from realpg.policy import sampling, softmax


def _policy_config(vocab_size=12, cot_length=2):
    return rpg.config.PolicyConfig(vocab={"vocab_size": vocab_size}, cot_length=cot_length)


def _params(config, seed, scale=0.5):
    g = torch.Generator().manual_seed(seed)
    return (torch.rand(config.n_params, generator=g, dtype=torch.float64) * 2 - 1) * scale


def _pin_cot(params, config):
    """Make CoT token 10 the only token of support at every CoT position
    while leaving the score position untouched."""
    params = params.clone()
    W, b = softmax.split_params(params, config)
    b[10] += 100.0
    W[10, -1] -= 100.0
    return params


@pytest.fixture
def dataset():
    return rpg.data.make_dataset(rpg.config.EnvConfig(), 4, seed=0)


def _group(params, dataset, config, policy_config, k=4, idx=0, seed=0, **kwargs):
    trajs = sampling.sample_group(
        params, dataset[idx].features, idx, k, policy_config, seed=seed, key=(rpg.utils.TRAIN, 0)
    )
    return estimator.make_group(trajs, params, dataset, config, policy_config, **kwargs)


def _fd(fn, params, step=1e-5):
    grad = torch.zeros_like(params)
    for i in range(params.shape[0]):
        e = torch.zeros_like(params)
        e[i] = step
        grad[i] = (fn(params + e) - fn(params - e)) / (2 * step)
    return grad


def _close(a, b, rtol=1e-6, atol=1e-8):
    return bool(torch.all((a - b).abs() <= rtol * b.abs() + atol))


def test_group_fields(dataset):
    policy_config = _policy_config()
    config = rpg.config.EstimatorConfig()
    group = _group(_params(policy_config, 0), dataset, config, policy_config, k=5)
    assert group.size == 5
    assert group.rewards.shape == (5,)
    assert torch.all(group.rewards <= 0)
    assert torch.all(group.std_advantages.abs() <= 1)
    assert 0.0 <= group.accuracy <= 1.0
    assert group.policy_dependent


def test_real_zero_when_beta_zero_and_rewards_equal(dataset):
    policy_config = _policy_config()
    config = rpg.config.EstimatorConfig(beta=0.0)
    group = _group(_params(policy_config, 1), dataset, config, policy_config, rewards=torch.full((4,), -1.0))
    grad = estimator.real_gradient(group, config, policy_config)
    assert torch.all(grad == 0.0)


def test_real_zero_at_exact_prediction(dataset):
    policy_config = _policy_config()
    config = rpg.config.EstimatorConfig(beta=1.0, lam=0.0)
    group = _group(_params(policy_config, 2), dataset, config, policy_config)
    group.y_hat = torch.full_like(group.y_hat, float(group.gold))
    group.std_advantages = torch.zeros_like(group.std_advantages)
    grad = estimator.real_gradient(group, config, policy_config)
    assert grad.abs().max() < 1e-15


def test_real_term2_matches_finite_differences(dataset):
    policy_config = _policy_config()
    params = _pin_cot(_params(policy_config, 3), policy_config)
    config = rpg.config.EstimatorConfig(beta=1.0, lam=1.0)
    group = _group(params, dataset, config, policy_config, k=2)
    assert torch.all(group.evaluation.logp_cot() == 0.0)

    cots = torch.stack([traj.cot for traj in group.trajectories])
    gold = group.gold
    features = dataset[0].features

    def mean_reward(p):
        ev = softmax.evaluate(p, features, cots, policy_config)
        y_hat, _ = ev.rail()
        return float(rpg.reward.real_reward(y_hat, ev.logp_token(gold), gold, 1.0).mean())

    grad = estimator.real_gradient(group, config, policy_config)
    assert _close(grad, _fd(mean_reward, params))


def test_raft_is_real_without_term1(dataset):
    policy_config = _policy_config()
    params = _params(policy_config, 4)
    config = rpg.config.EstimatorConfig(beta=1.0, kind="raft")
    group = _group(params, dataset, config, policy_config)
    real = estimator.real_gradient(group, config, policy_config)
    term1 = estimator.cot_term(group, group.std_advantages, policy_config) / group.size
    raft = estimator.raft_gradient(group, config, policy_config)
    assert (real - term1 - raft).norm() < 1e-12


def test_raft_matches_descent_finite_differences(dataset):
    policy_config = _policy_config()
    params = _params(policy_config, 5)
    lam = 0.7
    config = rpg.config.EstimatorConfig(kind="raft", lam=lam)
    group = _group(params, dataset, config, policy_config, idx=1)
    cots = torch.stack([traj.cot for traj in group.trajectories])
    gold, features = group.gold, dataset[1].features

    def loss(p):
        ev = softmax.evaluate(p, features, cots, policy_config)
        y_hat, _ = ev.rail()
        return float(((y_hat - gold) ** 2 - lam * ev.logp_token(gold)).mean())

    assert _close(estimator.raft_gradient(group, config, policy_config), -_fd(loss, params))


def test_jepo_term2_matches_finite_differences(dataset):
    policy_config = _policy_config()
    params = _params(policy_config, 6)
    config = rpg.config.EstimatorConfig(kind="jepo")
    group = _group(params, dataset, config, policy_config)
    cots = torch.stack([traj.cot for traj in group.trajectories])
    gold, features = group.gold, dataset[0].features

    def mean_logp(p):
        return float(softmax.evaluate(p, features, cots, policy_config).logp_token(gold).mean())

    term2 = estimator.jepo_gradient(group, config, policy_config) - estimator.cot_term(
        group, group.std_advantages, policy_config
    ) / group.size
    assert _close(term2, _fd(mean_logp, params))


def test_jepo_pinned_cot_is_sft(dataset):
    policy_config = _policy_config()
    params = _pin_cot(_params(policy_config, 7), policy_config)
    config = rpg.config.EstimatorConfig(kind="jepo")
    group = _group(params, dataset, config, policy_config)
    torch.testing.assert_close(
        estimator.jepo_gradient(group, config, policy_config),
        estimator.sft_gradient(group, config, policy_config),
        rtol=0.0, atol=1e-14,
    )


def test_jepo_equal_logp_has_no_cot_term(dataset):
    policy_config = _policy_config()
    params = _pin_cot(_params(policy_config, 8), policy_config)
    config = rpg.config.EstimatorConfig(kind="jepo")
    group = _group(params, dataset, config, policy_config)
    # a pinned CoT makes every gold log-likelihood identical
    assert torch.all(group.std_advantages == 0.0)


def test_standard_rl_all_correct_is_zero(dataset):
    policy_config = _policy_config()
    params = _params(policy_config, 9)
    config = rpg.config.EstimatorConfig(kind="standard_rl")
    group = _group(params, dataset, config, policy_config)
    group.rewards = torch.ones(group.size, dtype=torch.float64)
    _, group.advantages, group.std_advantages = rpg.pg.rloo_advantages(group.rewards)
    assert torch.all(estimator.standard_rl_gradient(group, config, policy_config) == 0.0)


def test_standard_rl_two_samples(dataset):
    policy_config = _policy_config()
    params = _params(policy_config, 10)
    config = rpg.config.EstimatorConfig(kind="standard_rl")
    group = _group(params, dataset, config, policy_config, k=2, rewards=torch.tensor([1.0, 0.0]))
    features = dataset[0].features

    def grad_logp(traj):
        ev = softmax.evaluate(params, features, traj.cot, policy_config)
        grad_z = ev.grad_logp_token_z(traj.score)
        return softmax.grad_log_prob_cot(params, features, traj.cot, policy_config) + softmax.project(
            grad_z[0], ev.score_features[0], policy_config
        )

    a, b = group.trajectories
    expected = 0.5 * (1.0 / (1.0 + 1e-8)) * (grad_logp(a) - grad_logp(b))
    torch.testing.assert_close(estimator.standard_rl_gradient(group, config, policy_config), expected)


def test_ordinal_sensitivity():
    policy_config = _policy_config()
    params = _params(policy_config, 11)
    config_real = rpg.config.EstimatorConfig(lam=0.0)
    config_rl = rpg.config.EstimatorConfig(kind="standard_rl", lam=0.0)

    env_config = rpg.config.EnvConfig()
    ds = rpg.data.make_dataset(env_config, 1, seed=0)
    trajs = sampling.sample_group(params, ds[0].features, 0, 2, policy_config, seed=0, key=(0,))
    sampled = {traj.score for traj in trajs}
    golds = [g for g in range(1, 6) if g not in sampled][:2]
    assert len(golds) == 2

    grads_real, grads_rl = [], []
    for gold in golds:
        ds[0].gold = gold
        grads_real.append(
            estimator.real_gradient(
                estimator.make_group(trajs, params, ds, config_real, policy_config), config_real, policy_config
            )
        )
        grads_rl.append(
            estimator.standard_rl_gradient(
                estimator.make_group(trajs, params, ds, config_rl, policy_config), config_rl, policy_config
            )
        )
    assert torch.equal(grads_rl[0], grads_rl[1])
    assert not torch.allclose(grads_real[0], grads_real[1])


def test_estimate_dispatch(dataset):
    policy_config = _policy_config()
    params = _params(policy_config, 12)
    for kind in estimator.ESTIMATORS:
        config = rpg.config.EstimatorConfig(kind=kind)
        group = _group(params, dataset, config, policy_config)
        grad = estimator.estimate(group, config, policy_config)
        assert grad.shape == (policy_config.n_params,)
        assert torch.isfinite(grad).all()
