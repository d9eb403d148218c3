import math

import numpy as np
import pytest

from ewlogreg.posterior import (DimensionError, LabeledExample, PosteriorSpec, constants,
                                grad_potential, potential, renyi2_between_rungs)

E1 = np.array([[1.0, 0.0]])


def test_potential_examples():
    assert potential(PosteriorSpec(B=1.0, d=2), np.zeros(2)) == 0.0
    one = PosteriorSpec(B=1.0, d=2, X=E1, y=[1])
    assert potential(one, np.zeros(2)) == pytest.approx(math.log(2))
    half = PosteriorSpec(B=2.0, d=2, X=E1, y=[1], temper=0.5)
    assert potential(half, np.zeros(2)) == pytest.approx(0.5 * math.log(2))


def test_gradient_examples():
    np.testing.assert_allclose(grad_potential(PosteriorSpec(B=1.0, d=2), [3.0, 0.0]), [3.0, 0.0])
    one = PosteriorSpec(B=1.0, d=2, X=E1, y=[1])
    np.testing.assert_allclose(grad_potential(one, np.zeros(2)), [-0.5, 0.0])


def test_gradient_finite_difference():
    rng = np.random.default_rng(3)
    spec = PosteriorSpec(B=1.5, d=3, X=rng.normal(size=(7, 3)), y=rng.choice([-1, 1], 7),
                         temper=0.3)
    h = 1e-6
    for theta in rng.normal(scale=2, size=(20, 3)):
        fd = [(spec.value(theta + h * e) - spec.value(theta - h * e)) / (2 * h) for e in np.eye(3)]
        np.testing.assert_allclose(spec.grad(theta), fd, atol=1e-5)


def test_batched_evaluation():
    rng = np.random.default_rng(0)
    spec = PosteriorSpec(B=2.0, d=2, X=rng.normal(size=(5, 2)), y=rng.choice([-1, 1], 5))
    P = rng.normal(size=(4, 2))
    v, g = spec.value_and_grad(P)
    np.testing.assert_allclose(v, [spec.value(p) for p in P], rtol=1e-14)
    np.testing.assert_allclose(g, [spec.grad(p) for p in P], rtol=1e-13)


def test_constants():
    spec = PosteriorSpec(B=3.0, d=1)
    assert constants(spec, 2.0).kappa == 1.0
    five = PosteriorSpec(B=2.0, d=1, X=np.ones((4, 1)), y=np.ones(4))
    assert constants(five, 1.0).kappa == 5.0
    assert constants(PosteriorSpec(B=10.0, d=1), 1.0).m == pytest.approx(0.01)


def test_validation():
    with pytest.raises(ValueError):
        PosteriorSpec(B=0.0, d=1)
    with pytest.raises(DimensionError):
        PosteriorSpec(B=1.0, d=2, X=np.ones((1, 3)), y=[1])
    with pytest.raises(DimensionError):
        PosteriorSpec(B=1.0, d=2).value(np.zeros(3))
    with pytest.raises(ValueError):
        PosteriorSpec(B=1.0, d=1, X=[[2.0]], y=[1], R=1.0)
    with pytest.raises(ValueError):
        LabeledExample([1.0], 0)


def test_from_examples_and_extend():
    ex = [LabeledExample([1.0, 0.0], 1), LabeledExample([0.0, 2.0], -1)]
    spec = PosteriorSpec.from_examples(1.0, 2, ex)
    assert spec.t == 3
    ext = PosteriorSpec(B=1.0, d=2).extend([1.0, 0.0], 1).extend([0.0, 2.0], -1)
    theta = np.array([0.3, -0.2])
    assert spec.value(theta) == ext.value(theta)


def test_renyi_rungs():
    spec = PosteriorSpec(B=1.0, d=1, X=[[1.0]], y=[1], R=1.0)
    assert renyi2_between_rungs(spec, 0.3, 0.0) == 0.0
    val = renyi2_between_rungs(spec, 0.0, 0.1)
    assert 0.0 <= val <= 0.01
