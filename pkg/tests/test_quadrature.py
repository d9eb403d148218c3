import math

import numpy as np
import pytest

from ewlogreg.loss import logistic_loss, sigmoid
from ewlogreg.posterior import PosteriorSpec
from ewlogreg.quadrature import (find_mode, log_normalizer, posterior_cdf_1d,
                                 posterior_expectations, predictive_prob)


def trapezoid_oracle(X, y, B, x, half=40.0, n=400_001):
    grid = np.linspace(-half, half, n)
    logw = -0.5 * grid**2 / B**2 - sum(logistic_loss(yi * xi * grid) for xi, yi in zip(X, y))
    w = np.exp(logw - logw.max())
    return np.trapezoid(w * sigmoid(x * grid), grid) / np.trapezoid(w, grid)


def test_empty_prefix_normaliser():
    for d, B in ((1, 1.0), (2, 3.0)):
        assert log_normalizer(PosteriorSpec(B=B, d=d)) == pytest.approx(
            0.5 * d * math.log(2 * math.pi * B * B), rel=1e-10)


def test_one_example_against_trapezoid():
    spec = PosteriorSpec(B=1.0, d=1, X=[[1.0]], y=[1])
    p, q = predictive_prob(spec, [1.0])
    assert 0.5 < p < 1
    assert p == pytest.approx(trapezoid_oracle([1.0], [1], 1.0, 1.0), abs=1e-6)
    assert p + q == pytest.approx(1.0, abs=1e-14)


def test_random_prefix_against_trapezoid():
    rng = np.random.default_rng(11)
    X = rng.uniform(-1, 1, 8)
    y = rng.choice([-1, 1], 8)
    spec = PosteriorSpec(B=2.0, d=1, X=X[:, None], y=y)
    p, _ = predictive_prob(spec, [0.7])
    assert p == pytest.approx(trapezoid_oracle(X, y, 2.0, 0.7), abs=1e-9)


def test_mode_is_stationary():
    rng = np.random.default_rng(2)
    spec = PosteriorSpec(B=3.0, d=2, X=rng.normal(size=(10, 2)), y=rng.choice([-1, 1], 10))
    mode, _, _ = find_mode(spec)
    assert np.linalg.norm(spec.grad(mode)) < 1e-8


def test_grid_and_polar_agree():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 2))
    y = np.where(rng.random(40) < sigmoid(X @ [1.0, -0.5]), 1.0, -1.0)
    spec = PosteriorSpec(B=4.0, d=2, X=X, y=y)
    x = np.array([0.3, 0.8])
    a = predictive_prob(spec, x, method="grid")
    b = predictive_prob(spec, x, method="polar")
    assert a[0] == pytest.approx(b[0], abs=1e-9)
    assert log_normalizer(spec, "grid") == pytest.approx(log_normalizer(spec, "polar"), abs=1e-9)


def test_expectation_of_mean_matches_mode_direction():
    # the posterior mean of a one-sided prefix leans towards the labels
    spec = PosteriorSpec(B=2.0, d=1, X=np.ones((3, 1)), y=np.ones(3))
    _, (m,) = posterior_expectations(spec, lambda P: P[:, :1])
    assert m > 0


def test_cdf_monotone():
    spec = PosteriorSpec(B=1.0, d=1, X=[[1.0], [-0.5]], y=[1, 1])
    pts = np.linspace(-5, 5, 101)
    c = posterior_cdf_1d(spec, pts)
    assert np.all(np.diff(c) >= 0)
    assert c[0] < 1e-5 and c[-1] > 1 - 1e-5
