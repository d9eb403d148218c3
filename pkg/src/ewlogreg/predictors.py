"""Online predictors: exact and sampled exponential weights, the solid-angle voter, OGD and ONS.

Every learner exposes ``predict(x) -> Prediction`` followed by ``update(x, y)``.
Probabilities are computed for the label +1; the probability of -1 is its
complement. The smaller of the two is evaluated directly and the larger is
obtained as ``1 - smaller``, which keeps tiny probabilities accurate and makes
``p_plus + p_minus == 1`` hold exactly in floating point.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .geometry import ConeSlice, solid_angle_predict
from .loss import loss_grad_scalar, sigmoid, smooth
from .posterior import PosteriorSpec, constants
from .quadrature import predictive_prob
from .sampler import (ChainState, adapt_step_size, build_ladder, bridge_round,
                      practical_round, prior_state, theoretical_step_size)


@dataclass(frozen=True)
class Prediction:
    p_plus: float
    p_minus: float
    mode: str = "baseline"

    @classmethod
    def from_pair(cls, p_plus, p_minus, mode):
        """Build from two separately computed probabilities that sum to one."""
        if p_plus <= p_minus:
            return cls(float(p_plus), 1.0 - float(p_plus), mode)
        return cls(1.0 - float(p_minus), float(p_minus), mode)

    def prob(self, y):
        return self.p_plus if y > 0 else self.p_minus

    def loss(self, y):
        return -math.log(self.prob(y))


@dataclass(frozen=True)
class Schedule:
    alpha: float
    eps: float
    s: int
    delta_t: float
    n: int
    delta: float

    @property
    def chernoff_ok(self):
        return self.alpha * self.s >= 16 * math.log(1 / self.delta_t)


def corollary_schedule(n, delta):
    """``alpha = 1/(2n)``, ``eps = 1/(20 n^3)``, ``delta_t = delta/n``,
    ``s = ceil(32 n^3 log(n / delta))``; checks ``alpha s >= 16 log(1/delta_t)``."""
    if n < 1 or not 0 < delta < 1:
        raise ValueError("need n >= 1 and delta in (0, 1)")
    sched = Schedule(alpha=1 / (2 * n), eps=1 / (20 * n**3),
                     s=math.ceil(32 * n**3 * math.log(n / delta)), delta_t=delta / n,
                     n=n, delta=delta)
    if not sched.chernoff_ok:
        raise ValueError("schedule violates alpha * s >= 16 log(1/delta_t)")
    return sched


def ew_predict_exact(spec, x, method="auto"):
    """EW mixture ``E_rho[sigmoid(<theta, x>)]`` by deterministic quadrature (d <= 2)."""
    if spec.temper != 1.0:
        raise ValueError("exact prediction uses the untempered posterior")
    x = np.asarray(x, dtype=np.float64)
    if spec.y.size == 0 or not np.any(x):
        # the prior is symmetric about 0, and sigmoid(0) = 1/2
        return Prediction(0.5, 0.5, "exact")
    p_plus, p_minus = predictive_prob(spec, x, method=method)
    return Prediction.from_pair(p_plus, p_minus, "exact")


def ew_predict_mc(samples, x, alpha=0.0, mode="mc"):
    """Smoothed Monte-Carlo mixture of sigmoids over posterior draws."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] == 0:
        raise ValueError("need at least one sample")
    z = samples @ np.asarray(x, dtype=np.float64)
    p_plus = smooth(np.mean(sigmoid(z)), alpha)
    p_minus = smooth(np.mean(sigmoid(-z)), alpha)
    return Prediction.from_pair(p_plus, p_minus, mode)


class OnlineLearner:
    """Shared bookkeeping; subclasses implement ``predict`` and ``update``."""

    name = "learner"

    def __init__(self, B, d, R=1.0):
        if not B > 0:
            raise ValueError("B must be positive")
        self.B, self.d, self.R = float(B), int(d), float(R)
        self.t = 1
        self.stats = {"acceptance": 0.0, "h": 0.0, "transitions": 0}

    def predict(self, x):
        raise NotImplementedError

    def update(self, x, y):
        self.t += 1


class EWExact(OnlineLearner):
    name = "ew-exact"

    def __init__(self, B, d, R=1.0, method="auto"):
        super().__init__(B, d, R)
        if d > 2:
            raise ValueError("exact quadrature is available for d <= 2")
        self.spec = PosteriorSpec(B=self.B, d=self.d)
        self.method = method

    def predict(self, x):
        return ew_predict_exact(self.spec, x, self.method)

    def update(self, x, y):
        self.spec = self.spec.extend(x, y)
        super().update(x, y)


class EWTheory(OnlineLearner):
    """Sampled EW with ``s`` independent bridged chains and smoothing ``alpha``.

    The schedule defaults to the horizon-``n`` corollary schedule; any of
    ``alpha``, ``eps``, ``s`` may be overridden. Chains share one step size,
    adapted by pilot batches on the round's starting target unless
    ``theoretical_step`` selects ``1 / (L sqrt(d))``.
    """

    name = "ew-theory"

    def __init__(self, B, d, n, R=1.0, delta=0.1, seed=0, c_delta=0.5, C=1.0,
                 alpha=None, eps=None, s=None, theoretical_step=False):
        super().__init__(B, d, R)
        sched = corollary_schedule(n, delta)
        self.alpha = sched.alpha if alpha is None else alpha
        self.eps = sched.eps if eps is None else eps
        self.s = sched.s if s is None else int(s)
        self.c_delta, self.C = c_delta, C
        self.theoretical_step = theoretical_step
        self.spec = PosteriorSpec(B=self.B, d=self.d, R=self.R)
        # round 1 targets the prior itself, drawn exactly
        self.state = prior_state(self.B, self.d, n_chains=self.s, seed=seed)
        self.tv_history = []
        self._samples = self.state.theta

    def _advance(self):
        spec = self.spec
        kappa = constants(spec, self.R).kappa
        ladder = build_ladder(self.R, self.B, self.eps, self.c_delta, kappa, self.d, self.C)
        start = spec.with_temper(0.0)
        if self.theoretical_step:
            self.state = ChainState(theta=self.state.theta, h=theoretical_step_size(spec, self.R),
                                    rng=self.state.rng)
        else:
            self.state = adapt_step_size(start, self.state, R=self.R)
        p0, a0 = self.state.proposed, self.state.accepted
        self.state = bridge_round(self.state, spec, ladder)
        moved = self.state.proposed - p0
        self.stats = {"acceptance": (self.state.accepted - a0) / moved if moved else 0.0,
                      "h": self.state.h, "transitions": self.s * ladder.transitions}
        self.tv_history.append(self.eps)
        self._samples = self.state.theta

    def predict(self, x):
        return ew_predict_mc(self._samples, x, self.alpha, "mc_theory")

    def update(self, x, y):
        self.spec = self.spec.extend(x, y)
        super().update(x, y)
        self._advance()


class EWPractical(OnlineLearner):
    """Single adaptive MALA chain with ``S`` dependent draws per round (no smoothing).

    With ``bridge=True`` each round first walks the tempered ladder with
    ``bridge_steps`` transitions per rung.
    """

    name = "ew-practical"

    def __init__(self, B, d, R=1.0, seed=0, S=24, burn_in=10, thin=1, bridge=True,
                 bridge_steps=1, c_delta=0.5, target_lo=0.55, target_hi=0.80, pilot=5,
                 alpha=0.0, point_target=None):
        super().__init__(B, d, R)
        if point_target is not None:
            target_lo, target_hi = point_target - 0.05, point_target + 0.05
        self.S, self.burn_in, self.thin = S, burn_in, thin
        self.bridge, self.bridge_steps, self.c_delta = bridge, bridge_steps, c_delta
        self.window, self.pilot, self.alpha = (target_lo, target_hi), pilot, alpha
        self.spec = PosteriorSpec(B=self.B, d=self.d, R=self.R)
        self.state = prior_state(self.B, self.d, seed=seed)
        self._samples = None

    def _round(self):
        ladder = None
        if self.bridge and self.spec.y.size:
            ladder = build_ladder(self.R, self.B, 1.0, self.c_delta,
                                  steps_per_rung=self.bridge_steps)
        self._samples, self.state, st = practical_round(
            self.state, self.spec, ladder, self.burn_in, self.S, self.thin, R=self.R,
            target_lo=self.window[0], target_hi=self.window[1], pilot=self.pilot)
        self.stats = {"acceptance": st["acceptance"], "h": st["h"],
                      "transitions": st["transitions"]}

    def predict(self, x):
        if self._samples is None:
            self._round()
        return ew_predict_mc(self._samples, x, self.alpha, "mc_practical")

    def update(self, x, y):
        self.spec = self.spec.extend(x, y)
        super().update(x, y)
        self._samples = None


class SolidAngle(OnlineLearner):
    """Large-prior limit: vote of the version cone, 1/2 while the cone is empty or absent."""

    name = "solid-angle"

    def __init__(self, B, d, R=1.0, seed=0, mc_samples=20_000):
        super().__init__(B, d, R)
        self.rows = np.zeros((0, d))
        self.seed, self.mc = seed, mc_samples
        self.separable = True

    def predict(self, x):
        if self.rows.shape[0] == 0 or not self.separable:
            return Prediction(0.5, 0.5, "solid_angle")
        try:
            p_plus, p_minus = solid_angle_predict(ConeSlice(self.rows), x, self.mc,
                                                  seed=[self.seed, self.t])
        except ValueError:
            self.separable = False
            return Prediction(0.5, 0.5, "solid_angle")
        # keep the log loss finite when every draw votes the same way
        floor = 0.5 / self.mc
        p_plus = min(max(p_plus, floor), 1 - floor)
        return Prediction.from_pair(p_plus, 1 - p_plus, "solid_angle")

    def update(self, x, y):
        self.rows = np.vstack([self.rows, y * np.asarray(x, dtype=np.float64)])
        super().update(x, y)


class OGD(OnlineLearner):
    """Projected online gradient descent on the B-ball, ``eta_t = B / (R sqrt(t))``."""

    name = "ogd"

    def __init__(self, B, d, R=1.0, eta=None):
        super().__init__(B, d, R)
        self.theta = np.zeros(d)
        self.eta = eta

    def predict(self, x):
        z = float(self.theta @ np.asarray(x, dtype=np.float64))
        return Prediction.from_pair(sigmoid(z), sigmoid(-z), "baseline")

    def update(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        eta = self.eta if self.eta is not None else self.B / (self.R * math.sqrt(self.t))
        g = loss_grad_scalar(y * (self.theta @ x)) * y * x
        theta = self.theta - eta * g
        nrm = np.linalg.norm(theta)
        self.theta = theta if nrm <= self.B else theta * (self.B / nrm)
        super().update(x, y)


class ONS(OnlineLearner):
    """Online Newton step with ``A_0 = eps_A I`` and the generalised projection on the B-ball."""

    name = "ons"

    def __init__(self, B, d, R=1.0, eps_A=1.0, gamma=None):
        super().__init__(B, d, R)
        self.gamma = 0.5 * min(1.0 / (4 * R * B), 1.0) if gamma is None else gamma
        self.theta = np.zeros(d)
        self.A = eps_A * np.eye(d)
        self.A_inv = np.eye(d) / eps_A

    def predict(self, x):
        z = float(self.theta @ np.asarray(x, dtype=np.float64))
        return Prediction.from_pair(sigmoid(z), sigmoid(-z), "baseline")

    def update(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        g = loss_grad_scalar(y * (self.theta @ x)) * y * x
        self.A += np.outer(g, g)
        Ag = self.A_inv @ g
        self.A_inv -= np.outer(Ag, Ag) / (1.0 + g @ Ag)
        self.A_inv = 0.5 * (self.A_inv + self.A_inv.T)
        target = self.theta - (self.A_inv @ g) / self.gamma
        self.theta = project_A_norm(target, self.A, self.B)
        super().update(x, y)


def project_A_norm(z, A, B):
    """``argmin_{|theta| <= B} (theta - z)^T A (theta - z)``."""
    if np.linalg.norm(z) <= B:
        return z
    lam, Q = np.linalg.eigh(A)
    c = Q.T @ z

    def excess(mu):
        return np.linalg.norm(lam * c / (lam + mu)) - B

    hi = lam.max() * np.linalg.norm(z) / B
    mu = brentq(excess, 0.0, hi, xtol=1e-14, rtol=1e-14)
    theta = Q @ (lam * c / (lam + mu))
    nrm = np.linalg.norm(theta)
    return theta if nrm <= B else theta * (B / nrm)


PREDICTORS = {"ew-exact": EWExact, "ew-theory": EWTheory, "ew-practical": EWPractical,
              "solid-angle": SolidAngle, "ogd": OGD, "ons": ONS}
