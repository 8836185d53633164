import numpy as np
import pytest
import torch

from realpg.oracle import optimality


def _t(values):
    return torch.tensor(values, dtype=torch.float64)


def test_rejects_non_distributions():
    with pytest.raises(ValueError):
        optimality.DiscreteJoint(_t([0.5, 0.6]), _t([[1.0], [1.0]]), _t([[1.0, 0.0], [0.0, 1.0]]), _t([1.0, 2.0]))


def test_independent_score_is_skipped():
    joint = optimality.DiscreteJoint(
        p_x=_t([0.3, 0.7]),
        pi_c=_t([[0.5, 0.5], [0.2, 0.8]]),
        p_y=_t([[0.4, 0.6], [0.4, 0.6]]),
        y_values=_t([1.0, 5.0]),
    )
    report = optimality.OptimalityReport()
    competitors = torch.zeros(3, 2, 2, dtype=torch.float64)
    ones = torch.ones(3, dtype=torch.float64)
    assert not optimality.check_joint(joint, competitors, ones, ones, report)
    assert report.skipped == 1 and report.joints == 0


def test_deterministic_score():
    joint = optimality.DiscreteJoint(
        p_x=_t([0.25, 0.25, 0.5]),
        pi_c=_t([[0.6, 0.4], [0.5, 0.5], [0.1, 0.9]]),
        p_y=_t([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
        y_values=_t([1.0, 3.0, 4.0]),
    )
    mu = joint.posterior_mean()
    torch.testing.assert_close(mu, _t([[1.0, 1.0], [4.0, 4.0], [3.0, 3.0]]))
    assert float(joint.mse(mu)) == pytest.approx(0.0, abs=1e-15)
    assert float(joint.pearson(mu)) == pytest.approx(1.0, abs=1e-12)


def test_conditional_mean_reduces_to_prompt_mean():
    joint = optimality.random_joint(np.random.default_rng(3))
    mu = joint.posterior_mean()
    expected = joint.mean_given_x()[:, None].expand_as(mu)
    torch.testing.assert_close(mu, expected, rtol=0.0, atol=1e-12)


def test_suite_has_no_violations():
    report = optimality.optimality_suite(50, 50, seed=0)
    assert report.joints + report.skipped == 50
    assert report.joints > 0
    assert report.passed, report.as_dict()


def test_suite_deterministic():
    a = optimality.optimality_suite(10, 10, seed=4).as_dict()
    b = optimality.optimality_suite(10, 10, seed=4).as_dict()
    assert a == b
