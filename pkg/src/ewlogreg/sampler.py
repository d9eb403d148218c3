"""MALA on EW posteriors, the tempered bridge between rounds, and TV bookkeeping.

A :class:`ChainState` may hold a single point ``theta`` of shape ``(d,)`` or a
batch of independent chains of shape ``(k, d)`` that share a step size. Batches
are how the theory mode runs its ``s_t`` chains without a Python loop.
"""

import copy
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .rng import make_rng, spawn

PRACTICAL_BURN_IN = 10
PRACTICAL_SAMPLES = 24


@dataclass
class ChainState:
    theta: np.ndarray
    h: float
    rng: np.random.Generator = None
    accepted: int = 0
    proposed: int = 0
    rng_seed: int = None
    accept_prob_sum: float = 0.0
    warning: str = None
    # (spec, value, grad) at theta, reused while the target does not change
    _cache: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.rng is None:
            self.rng = make_rng(self.rng_seed)

    @property
    def acceptance_rate(self):
        return self.accepted / self.proposed if self.proposed else float("nan")

    @property
    def n_chains(self):
        return 1 if self.theta.ndim == 1 else self.theta.shape[0]


@dataclass(frozen=True)
class LadderSchedule:
    delta: float
    K: int
    rung_budget: float
    steps_per_rung: int

    @property
    def rungs(self):
        """Tempering levels ``v_1 < ... < v_K = 1``."""
        return [min(j * self.delta, 1.0) for j in range(1, self.K + 1)]

    @property
    def transitions(self):
        return self.K * self.steps_per_rung


@dataclass
class RoundBudget:
    """Fresh TV budget of the current round and the error inherited from earlier rounds."""

    eps_fresh: float = 0.0
    err_inherited: float = 0.0
    history: list = field(default_factory=list)

    def advance(self, eps):
        if eps < 0:
            raise ValueError("TV budget must be nonnegative")
        self.history.append(float(eps))
        self.err_inherited = self.cumulative - eps
        self.eps_fresh = float(eps)
        return self.cumulative

    @property
    def cumulative(self):
        return math.fsum(self.history)


def _value_and_grad(spec, state):
    if state._cache is not None and state._cache[0] is spec:
        return state._cache[1], state._cache[2]
    return spec.value_and_grad(state.theta)


def mala_step(spec, state):
    """One Metropolis-adjusted Langevin transition targeting ``exp(-V)``.

    ``spec`` is anything with a ``value_and_grad`` method vectorised over
    leading axes. Returns a new state; the generator is advanced in place.
    """
    theta, h, rng = state.theta, state.h, state.rng
    v, g = _value_and_grad(spec, state)
    xi = rng.standard_normal(theta.shape)
    step = -h * g + math.sqrt(2.0 * h) * xi
    prop = theta + step
    vp, gp = spec.value_and_grad(prop)
    # log q(theta | prop) - log q(prop | theta), in a form exact for vanishing gradients
    corr = 0.5 * (step * (g + gp)).sum(axis=-1) + 0.25 * h * (
        (g * g).sum(axis=-1) - (gp * gp).sum(axis=-1))
    log_a = v - vp + corr
    if theta.ndim == 1:
        log_a = float(log_a)
        if math.isnan(log_a):
            log_a = -math.inf
        acc = math.log(rng.random()) < log_a
        a_prob = math.exp(min(log_a, 0.0))
        n_acc = int(acc)
        new_theta, new_v, new_g = (prop, vp, gp) if acc else (theta, v, g)
    else:
        log_a = np.where(np.isnan(log_a), -np.inf, log_a)
        acc = np.log(rng.random(log_a.shape)) < log_a
        a_prob = float(np.exp(np.minimum(log_a, 0.0)).sum())
        n_acc = int(acc.sum())
        new_theta = np.where(acc[:, None], prop, theta)
        new_v = np.where(acc, vp, v)
        new_g = np.where(acc[:, None], gp, g)
    new = copy.copy(state)
    new.theta, new._cache = new_theta, (spec, new_v, new_g)
    new.accepted += n_acc
    new.proposed += 1 if theta.ndim == 1 else theta.shape[0]
    new.accept_prob_sum += a_prob
    return new


def run_chain(spec, state, n_steps, trace=False):
    """Advance ``n_steps`` MALA transitions; optionally return the visited points."""
    out = []
    for _ in range(n_steps):
        state = mala_step(spec, state)
        if trace:
            out.append(state.theta)
    return (state, np.array(out)) if trace else state


def step_count_for_accuracy(kappa, d, eps, K, C=1.0):
    """Steps per rung, ``ceil(C sqrt(d) kappa max(1, log(K / eps)))``."""
    if not 0 < eps:
        raise ValueError("accuracy must be positive")
    if kappa < 1:
        raise ValueError("condition number is at least one")
    raw = C * math.sqrt(d) * kappa * max(1.0, math.log(K / eps))
    # guard against ceil(1.0000000000000002) from rounding in the logarithm
    return max(1, math.ceil(raw - 1e-9))


def build_ladder(R, B, eps_fresh, c_delta=0.5, kappa=1.0, d=1, C=1.0, steps_per_rung=None):
    """Power-tempered ladder with rung width ``c_delta / (R B)`` (capped at one)."""
    if not 0 < c_delta < 1:
        raise ValueError("c_delta must lie in (0, 1)")
    if not eps_fresh > 0:
        raise ValueError("fresh TV budget must be positive")
    delta = min(1.0, c_delta / (R * B)) if R > 0 else 1.0
    K = math.ceil(1.0 / delta - 1e-12)
    if steps_per_rung is None:
        steps_per_rung = step_count_for_accuracy(kappa, d, eps_fresh, K, C)
    return LadderSchedule(delta=delta, K=K, rung_budget=eps_fresh / K,
                          steps_per_rung=int(steps_per_rung))


def bridge_round(prev, spec_t, ladder, budget=None):
    """Carry a draw of the previous posterior to ``spec_t`` through the tempered rungs.

    The newest prefix example is switched on gradually, ``v = Delta, 2 Delta, ..., 1``,
    with ``ladder.steps_per_rung`` MALA steps at each rung. When ``budget`` is given
    its cumulative TV bookkeeping is advanced by the ladder's total budget.
    """
    state = prev
    if spec_t.y.size > 0 and ladder.steps_per_rung > 0:
        for v in ladder.rungs:
            rung = spec_t.with_temper(v)
            for _ in range(ladder.steps_per_rung):
                state = mala_step(rung, state)
    if budget is not None:
        budget.advance(ladder.rung_budget * ladder.K)
    return state


def initial_step_size(spec, R=None):
    """``(1e-3 + R^2 (t - 1) / 4 + B^-2)^-1``."""
    R = spec.radius if R is None else R
    return 1.0 / (1e-3 + 0.25 * R**2 * (spec.t - 1) + spec.B**-2)


def theoretical_step_size(spec, R=None):
    """Worst-case prescription ``1 / (L sqrt(d))``."""
    R = spec.radius if R is None else R
    L = 0.25 * R**2 * (spec.t - 1) + spec.B**-2
    return 1.0 / (L * math.sqrt(spec.d))


def adapt_step_size(spec, state, target_lo=0.55, target_hi=0.80, pilot=5, R=None,
                    max_batches=50, init=True, up=1.5, down=0.6, confirm=4):
    """Pilot-based multiplicative step-size adaptation.

    Starting from :func:`initial_step_size` (when ``init``), batches of ``pilot``
    proposals are run. The mean acceptance probability is pooled over all batches
    run at the current ``h``; ``h`` grows by ``up`` when the pooled rate exceeds
    ``target_hi`` and shrinks by ``down`` below ``target_lo``. Adaptation stops
    once the pooled rate over ``confirm`` batches lies inside the window. After
    ``max_batches`` batches the last ``h`` is kept and a warning is recorded.
    """
    if not 0 < target_lo < target_hi < 1:
        raise ValueError("need 0 < target_lo < target_hi < 1")
    if init:
        state = replace(state, h=initial_step_size(spec, R))
    p0, s0, n_at_h = state.proposed, state.accept_prob_sum, 0
    for _ in range(max_batches):
        for _ in range(pilot):
            state = mala_step(spec, state)
        n_at_h += 1
        rate = (state.accept_prob_sum - s0) / (state.proposed - p0)
        if target_lo <= rate <= target_hi:
            if n_at_h >= confirm:
                return replace(state, warning=None)
            continue
        state = replace(state, h=state.h * (up if rate > target_hi else down))
        p0, s0, n_at_h = state.proposed, state.accept_prob_sum, 0
    msg = f"acceptance window not reached after {max_batches} batches (h={state.h:.3g})"
    warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return replace(state, warning=msg)


def prior_state(B, d, n_chains=None, h=1.0, seed=None):
    """Chain(s) started from exact prior draws ``N(0, B^2 I)``."""
    rng = make_rng(seed)
    shape = (d,) if n_chains is None else (n_chains, d)
    return ChainState(theta=B * rng.standard_normal(shape), h=h, rng=rng,
                      rng_seed=seed if isinstance(seed, int) else None)


def draw_iid_samples(prev_states, spec_t, ladder, s_t, budget=None):
    """One bridged draw per chain.

    ``prev_states`` is either a list of ``s_t`` single-chain states, each carrying
    its own generator, or one batched state holding ``s_t`` chains. Returns the
    array of draws (``s_t`` rows) and the advanced state(s).
    """
    if isinstance(prev_states, ChainState):
        if prev_states.n_chains != s_t:
            raise ValueError("batched state has the wrong number of chains")
        state = bridge_round(prev_states, spec_t, ladder, budget)
        return np.atleast_2d(state.theta).copy(), state
    if len(prev_states) != s_t:
        raise ValueError("need one previous state per chain")
    new = [bridge_round(s, spec_t, ladder) for s in prev_states]
    if budget is not None:
        budget.advance(ladder.rung_budget * ladder.K)
    return np.array([s.theta for s in new]), new


def independent_states(B, d, s_t, seed, h=1.0):
    """``s_t`` single chains with spawned generators, started from the prior."""
    return [ChainState(theta=B * g.standard_normal(d), h=h, rng=g) for g in spawn(seed, s_t)]


def practical_round(state, spec_t, ladder=None, burn_in=PRACTICAL_BURN_IN,
                    n_samples=PRACTICAL_SAMPLES, thin=1, adapt=True, R=None,
                    target_lo=0.55, target_hi=0.80, pilot=5):
    """Single adaptive chain: adapt, bridge (optional), burn in, then keep ``n_samples``.

    Retained draws are consecutive (thinned) states of one chain, so they are
    dependent. Returns ``(samples, state, stats)`` where ``stats`` holds the
    acceptance rate over the round, the step size and the transition count.
    """
    if thin not in (1, 2):
        raise ValueError("thinning must be 1 or 2")
    p0, a0 = state.proposed, state.accepted
    start = spec_t.with_temper(0.0) if spec_t.y.size else spec_t
    if adapt:
        state = adapt_step_size(start, state, target_lo, target_hi, pilot=pilot, R=R)
    if ladder is not None:
        state = bridge_round(state, spec_t, ladder)
    state = run_chain(spec_t, state, burn_in)
    samples = []
    for _ in range(n_samples):
        state = run_chain(spec_t, state, thin)
        samples.append(state.theta)
    moved = state.proposed - p0
    stats = {"acceptance": (state.accepted - a0) / moved if moved else 0.0,
             "h": state.h, "transitions": moved, "warning": state.warning}
    return np.array(samples), state, stats
