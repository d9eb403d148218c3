import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ewlogreg.loss import logistic_loss, loss_grad_scalar, sigmoid, smooth

finite = st.floats(-700, 700, allow_nan=False)


def test_sigmoid_values():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(math.log(3)) == pytest.approx(0.75, abs=1e-15)
    assert isinstance(sigmoid(1.0), float)


def test_logistic_loss_values():
    assert logistic_loss(0.0) == pytest.approx(math.log(2), abs=1e-15)
    assert logistic_loss(40.0) <= 1e-17
    assert logistic_loss(-1.0) == pytest.approx(math.log1p(math.e), rel=1e-15)
    assert logistic_loss(-1000.0) == pytest.approx(1000.0)


def test_gradient():
    assert loss_grad_scalar(0.0) == -0.5
    assert abs(loss_grad_scalar(40.0)) < 1e-17
    h = 1e-5
    fd = (logistic_loss(0.7 + h) - logistic_loss(0.7 - h)) / (2 * h)
    assert loss_grad_scalar(0.7) == pytest.approx(fd, abs=1e-6)


def test_smooth():
    assert smooth(0.3, 0.0) == 0.3
    assert smooth(0.0, 0.5) == 0.25
    for a in (0.0, 0.1, 0.5):
        assert smooth(0.5, a) == 0.5
    with pytest.raises(ValueError):
        smooth(0.2, 0.6)
    with pytest.raises(ValueError):
        smooth(0.2, -0.1)


@given(finite)
def test_sigmoid_symmetry(z):
    assert sigmoid(z) + sigmoid(-z) == pytest.approx(1.0, abs=1e-15)
    assert 0.0 <= sigmoid(z) <= 1.0


@given(finite)
def test_loss_matches_log_sigmoid(z):
    ref = np.logaddexp(0.0, -z)
    assert logistic_loss(z) == pytest.approx(ref, rel=1e-14, abs=1e-300)
    assert logistic_loss(z) >= 0


@given(st.floats(0, 1), st.floats(0, 0.5))
def test_smooth_bounds(p, a):
    q = smooth(p, a)
    assert a / 2 - 1e-15 <= q <= 1 - a / 2 + 1e-15


def test_vectorised():
    z = np.linspace(-5, 5, 11)
    assert sigmoid(z).shape == (11,)
    np.testing.assert_allclose(logistic_loss(z), -np.log(sigmoid(z)), rtol=1e-13)
