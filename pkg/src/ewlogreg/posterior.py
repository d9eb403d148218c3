"""Exponential-weights posterior potential for a data prefix and a Gaussian prior.

The potential after ``t - 1`` rounds is

    V(theta) = sum_i w_i * logloss(y_i <x_i, theta>) + |theta|^2 / (2 B^2)

with ``w_i = 1`` for every prefix example except the newest one, whose weight is
the tempering level ``v`` of the bridge (``v = 1`` gives the plain posterior).
"""

from dataclasses import dataclass, field

import numpy as np

from .loss import logistic_loss, sigmoid

_RADIUS_SLACK = 1e-9


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    y: int

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=np.float64))
        if x.ndim != 1:
            raise ValueError("feature vector must be one-dimensional")
        if self.y not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.y!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", int(self.y))


@dataclass(frozen=True)
class ConvexityConstants:
    m: float
    L: float
    kappa: float


@dataclass(frozen=True, eq=False)
class PosteriorSpec:
    """Immutable description of one (possibly tempered) posterior.

    ``X`` holds the first ``t - 1`` feature vectors row-wise and ``y`` their
    labels. ``R`` is the configured feature radius; when omitted it is the
    largest prefix norm.
    """

    B: float
    d: int
    X: np.ndarray = None
    y: np.ndarray = None
    temper: float = 1.0
    R: float = None
    _A: np.ndarray = field(init=False, repr=False)
    _w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("prior scale B must be positive")
        if int(self.d) < 1:
            raise ValueError("dimension must be >= 1")
        if not 0.0 <= self.temper <= 1.0:
            raise ValueError("temper must lie in [0, 1]")
        d = int(self.d)
        X = np.zeros((0, d)) if self.X is None else np.array(self.X, dtype=np.float64, ndmin=2)
        if X.size == 0:
            X = X.reshape(0, d)
        y = np.zeros(0) if self.y is None else np.asarray(self.y, dtype=np.float64).ravel()
        if X.shape[1] != d:
            raise DimensionError(f"prefix has dimension {X.shape[1]}, expected {d}")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y have different lengths")
        if y.size and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        norms = np.linalg.norm(X, axis=1)
        if self.R is not None and norms.size and norms.max() > self.R * (1 + _RADIUS_SLACK) + _RADIUS_SLACK:
            raise ValueError(f"example norm {norms.max():.6g} exceeds radius R={self.R}")
        X.setflags(write=False)
        y.setflags(write=False)
        w = np.ones(y.size)
        if y.size:
            w[-1] = self.temper
        A = y[:, None] * X
        A.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "B", float(self.B))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "_A", A)
        object.__setattr__(self, "_w", w)

    @classmethod
    def from_examples(cls, B, d, examples, temper=1.0, R=None):
        examples = list(examples)
        X = np.array([e.x for e in examples], dtype=np.float64).reshape(len(examples), d)
        y = np.array([e.y for e in examples], dtype=np.float64)
        return cls(B=B, d=d, X=X, y=y, temper=temper, R=R)

    @property
    def t(self):
        """Round index whose posterior this is (prefix length + 1)."""
        return self.y.size + 1

    @property
    def radius(self):
        if self.R is not None:
            return float(self.R)
        return float(np.linalg.norm(self.X, axis=1).max()) if self.y.size else 0.0

    @property
    def signed_rows(self):
        return self._A

    @property
    def weights(self):
        return self._w

    def with_temper(self, v):
        return PosteriorSpec(B=self.B, d=self.d, X=self.X, y=self.y, temper=v, R=self.R)

    def extend(self, x, y, temper=1.0):
        """Posterior of the next round, with ``(x, y)`` appended as the newest example."""
        x = np.asarray(x, dtype=np.float64).reshape(1, self.d)
        return PosteriorSpec(B=self.B, d=self.d, X=np.vstack([self.X, x]),
                             y=np.append(self.y, y), temper=temper, R=self.R)

    def _check(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape[-1:] != (self.d,):
            raise DimensionError(f"theta has trailing dimension {theta.shape[-1:]}, expected ({self.d},)")
        return theta

    def value(self, theta):
        theta = self._check(theta)
        z = theta @ self._A.T
        return logistic_loss(z) @ self._w + 0.5 * np.sum(theta * theta, axis=-1) / self.B**2

    def grad(self, theta):
        theta = self._check(theta)
        z = theta @ self._A.T
        return -(sigmoid(-z) * self._w) @ self._A + theta / self.B**2

    def value_and_grad(self, theta):
        theta = self._check(theta)
        z = theta @ self._A.T
        # shared exp(-|z|) for the loss and for sigmoid(-z)
        e = np.exp(-np.abs(z))
        loss = np.log1p(e) + np.maximum(-z, 0.0)
        s_neg = np.where(z >= 0, e, 1.0) / (1.0 + e)
        inv_b2 = 1.0 / self.B**2
        v = loss @ self._w + 0.5 * inv_b2 * (theta * theta).sum(axis=-1)
        g = -(s_neg * self._w) @ self._A + theta * inv_b2
        return v, g

    def hessian(self, theta):
        theta = self._check(theta)
        s = sigmoid(theta @ self._A.T)
        c = s * (1.0 - s) * self._w
        return (self._A.T * c) @ self._A + np.eye(self.d) / self.B**2


def potential(spec, theta):
    """Posterior potential; the empty prefix gives the prior quadratic only."""
    return spec.value(theta)


def grad_potential(spec, theta):
    return spec.grad(theta)


def constants(spec, R):
    """Strong convexity, (worst-case) smoothness and condition number of the potential."""
    if not R > 0:
        raise ValueError("radius R must be positive")
    B, t = spec.B, spec.t
    m = 1.0 / B**2
    L = R**2 * (t - 1) / 4.0 + m
    return ConvexityConstants(m=m, L=L, kappa=1.0 + B**2 * R**2 * (t - 1) / 4.0)


def renyi2_between_rungs(spec, v, dv):
    """Rényi-2 divergence between the rungs ``v`` and ``v + dv`` of the tempering ladder.

    Evaluated by quadrature (d <= 2) through the moment generating function of
    ``Y = log sigmoid(y_last <x_last, theta>)`` under rung ``v``:
    ``D2 = log E_v[exp(dv Y)] + log E_v[exp(-dv Y)]``.
    """
    from .quadrature import posterior_expectations

    if spec.d > 2:
        raise ValueError("Rényi diagnostic is implemented for d <= 2 only")
    if not (0.0 <= v <= 1.0 and 0.0 <= v + dv <= 1.0):
        raise ValueError("rungs must lie in [0, 1]")
    if dv == 0 or spec.y.size == 0:
        return 0.0
    rung = spec.with_temper(v)
    a_last = spec.signed_rows[-1]

    def moments(theta):
        y_val = -logistic_loss(theta @ a_last)
        return np.stack([np.exp(dv * y_val), np.exp(-dv * y_val)], axis=-1)

    grow = abs(dv) * float(np.linalg.norm(a_last)) * spec.B
    _, (m_plus, m_minus) = posterior_expectations(rung, moments, extra_range=grow)
    return max(float(np.log(m_plus) + np.log(m_minus)), 0.0)
