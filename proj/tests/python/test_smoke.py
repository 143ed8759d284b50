import math

import numpy as np
import pytest

import crowd_al as ca


def make_crowd(rng, n=60, d=3, betas=(4.0, 1.0)):
    w = rng.normal(size=d)
    data = ca.CrowdDataset(d, len(betas))
    for _ in range(n):
        x = rng.normal(size=d)
        i = data.add_instance(x)
        for j, b in enumerate(betas):
            data.add_label(i, j, float(x @ w + rng.normal() / math.sqrt(b)))
    return data, w


def test_fit_recovers_weights():
    rng = np.random.default_rng(0)
    data, w = make_crowd(rng, n=400)
    prior = ca.WeightPosterior.standard(3)
    weights, precisions, sweeps, converged = ca.fit_variational(
        data, prior, [ca.PrecisionPosterior()] * 2
    )
    assert converged and sweeps >= 1
    assert np.linalg.norm(weights.mean - w) < 0.1
    assert precisions[0].expected > precisions[1].expected
    mean, var = ca.predictive(np.ones(3), weights)
    assert var > 0 and math.isfinite(mean)


def test_active_scores():
    prior = ca.WeightPosterior(np.zeros(2), np.diag([1.0, 4.0]))
    assert ca.instance_score(np.array([1.0, 0.0]), prior) == pytest.approx(1.0)
    assert ca.select_instance(np.array([[0.0, 1.0], [1.0, 0.0]]), prior) == 1
    assert ca.det_shrinkage(prior, np.array([1.0, 0.0]), 1.0) == pytest.approx(0.5)
    lo, hi = ca.error_contraction_bounds(prior, np.array([1.0, 0.0]), 1.0)
    assert lo == pytest.approx(0.5) and hi == 1.0
    with pytest.raises(LookupError):
        ca.select_instance(np.zeros((0, 2)), prior)


def test_bandit():
    assert ca.truncated_mean([1.0, -2.0, 10.0], 3.0) == (pytest.approx(-0.5), 2)
    assert ca.truncated_mean([10.0], 3.0) == (0.0, 0)
    b = ca.BanditState(3, u=3.0)
    assert math.isinf(b.ucb_index(0))
    assert b.select() == 0
    b.record(0, 0.5)
    assert b.pulls(0) == 1 and b.round == 1
    assert b.select() == 1
    assert ca.regret_bound([0.0, 1.0], 1.0, math.e) == pytest.approx(37.0)


def test_mechanism():
    s = ca.PaymentScheme(1.0, 0.25, 4.0)
    assert ca.payment(0.1, s) == 0.0
    assert ca.payment(10.0, s) == 1.0
    effort, participates = ca.optimal_effort(10.0, "quadratic", 0.01, scheme=s)
    assert participates and effort > 0.25
    _, participates = ca.optimal_effort(10.0, "linear", 10.0, scheme=s)
    assert not participates
    with pytest.raises(ValueError):
        ca.PaymentScheme(1.0, 2.0, 1.0)


def test_features():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    rows, mean, scale = ca.normalize(x)
    assert np.allclose(rows.mean(axis=0), 0.0)
    centers = ca.fit_centers(x, 2, seed=7)
    assert sorted(map(tuple, centers)) == [(0.0, 0.5), (10.0, 0.5)]
    phi = ca.transform(x, "sigmoid", centers, 2.0)
    assert phi.shape == (4, 2) and np.all((phi >= 0.5) & (phi < 1.0))
    assert ca.rmse(np.array([1.0, 3.0]), np.array([1.0, 1.0])) == pytest.approx(math.sqrt(2.0))


def test_experiment_is_deterministic():
    config = {"budget": 5, "repetitions": 1, "base_seed": 3, "annotators": {"m": 5, "good": 4}}
    a = ca.run_experiment(config)
    b = ca.run_experiment(config)
    assert a == b
    assert [r["round"] for r in a] == list(range(6))
    assert len(ca.run_fit({"repetitions": 2})) == 2
