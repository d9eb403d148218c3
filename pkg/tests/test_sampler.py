import math

import numpy as np
import pytest

from ewlogreg.posterior import PosteriorSpec
from ewlogreg.sampler import (ChainState, RoundBudget, adapt_step_size, bridge_round, build_ladder,
                              draw_iid_samples, independent_states, initial_step_size, mala_step,
                              practical_round, prior_state, run_chain, step_count_for_accuracy)


class Flat:
    """Constant potential: the Langevin proposal is symmetric, so every move is accepted."""

    def value_and_grad(self, theta):
        theta = np.asarray(theta)
        return np.zeros(theta.shape[:-1]), np.zeros_like(theta)


def test_flat_target_always_accepts():
    state = ChainState(theta=np.zeros(2), h=0.7, rng_seed=1)
    state = run_chain(Flat(), state, 200)
    assert state.accepted == state.proposed == 200
    assert state.accept_prob_sum == 200.0


def test_tiny_step_acceptance():
    spec = PosteriorSpec(B=1.0, d=1, X=[[1.0]], y=[1])
    state = run_chain(spec, ChainState(theta=np.zeros(1), h=1e-8, rng_seed=2), 10_000)
    assert state.acceptance_rate >= 0.999


def test_stationarity_on_prior():
    spec = PosteriorSpec(B=1.0, d=1)
    state, trace = run_chain(spec, ChainState(theta=np.zeros(1), h=0.8, rng_seed=3), 100_000,
                             trace=True)
    assert abs(trace.mean()) < 0.02
    assert abs(trace.var() - 1.0) < 0.05


def test_batched_chains_match_shape():
    spec = PosteriorSpec(B=2.0, d=3)
    state = prior_state(2.0, 3, n_chains=50, seed=4)
    state = run_chain(spec, state, 5)
    assert state.theta.shape == (50, 3)
    assert state.proposed == 250


def test_ladder_examples():
    lad = build_ladder(R=1.0, B=10.0, eps_fresh=0.02, c_delta=0.5)
    assert lad.delta == pytest.approx(0.05)
    assert lad.K == 20
    assert lad.rung_budget == pytest.approx(0.001)
    single = build_ladder(R=0.1, B=2.0, eps_fresh=0.1, c_delta=0.5)
    assert (single.delta, single.K) == (1.0, 1)
    assert build_ladder(1.0, 10.0, 0.02, steps_per_rung=30).transitions == 600
    assert lad.rungs[-1] == 1.0 and len(lad.rungs) == 20


def test_step_count():
    assert step_count_for_accuracy(1.0, 1, math.exp(-1), 1) == 1
    assert step_count_for_accuracy(1.0, 1, 5.0, 10) == 1
    assert step_count_for_accuracy(4.0, 4, 0.01, 10, C=1) == math.ceil(8 * math.log(1000))


def test_empty_bridge_returns_previous():
    spec = PosteriorSpec(B=1.0, d=1, X=[[1.0]], y=[1])
    prev = ChainState(theta=np.array([0.3]), h=0.5, rng_seed=5)
    lad = build_ladder(0.1, 1.0, 0.1, steps_per_rung=0)
    assert bridge_round(prev, spec, lad) is prev


def test_budget_accumulates():
    b = RoundBudget()
    for e in (0.1, 0.2, 0.05):
        b.advance(e)
    assert b.cumulative == pytest.approx(0.35)
    assert b.err_inherited == pytest.approx(0.3)
    assert b.eps_fresh == 0.05


def test_initial_step_size():
    assert initial_step_size(PosteriorSpec(B=1.0, d=1), R=1.0) == pytest.approx(1 / 1.001)
    spec = PosteriorSpec(B=1.0, d=1, X=np.ones((4, 1)), y=np.ones(4))
    assert initial_step_size(spec, R=2.0) == pytest.approx(1 / 5.001)


@pytest.mark.parametrize("d", [1, 2, 5])
def test_adaptation_reaches_window(d):
    spec = PosteriorSpec(B=1.0, d=d)
    hits = 0
    for seed in range(5):
        st = adapt_step_size(spec, prior_state(1.0, d, seed=seed), R=1.0)
        meas = run_chain(spec, ChainState(theta=st.theta, h=st.h, rng_seed=100 + seed), 200)
        hits += 0.55 <= meas.accept_prob_sum / meas.proposed <= 0.80
    assert hits >= 4


def test_independent_chains_uncorrelated():
    spec = PosteriorSpec(B=1.0, d=2, X=[[1.0, 0.0]], y=[1])
    lad = build_ladder(1.0, 1.0, 0.1, steps_per_rung=5)
    states = independent_states(1.0, 2, 200, seed=6, h=0.3)
    a, states = draw_iid_samples(states, spec, lad, 200)
    b, _ = draw_iid_samples(states, spec, lad, 200)
    assert a.shape == (200, 2)
    assert abs(np.corrcoef(a[:, 0], np.roll(a[:, 0], 1))[0, 1]) <= 0.2
    assert np.all(np.isfinite(b))


def test_practical_round_yields_24():
    spec = PosteriorSpec(B=2.0, d=2, X=[[1.0, 0.0], [0.0, 1.0]], y=[1, -1])
    samples, state, stats = practical_round(prior_state(2.0, 2, seed=7), spec)
    assert samples.shape == (24, 2)
    assert stats["transitions"] > 0


def test_bit_identical_trajectories():
    spec = PosteriorSpec(B=2.0, d=2, X=[[1.0, 0.5]], y=[1])
    a = run_chain(spec, prior_state(2.0, 2, seed=8), 300, trace=True)[1]
    b = run_chain(spec, prior_state(2.0, 2, seed=8), 300, trace=True)[1]
    assert np.array_equal(a, b)


def test_mala_rejects_nan_proposals():
    class Bad:
        def value_and_grad(self, theta):
            theta = np.asarray(theta)
            v = np.where(np.abs(theta[..., 0]) > 0, np.nan, 0.0)
            return v, np.zeros_like(theta)

    st = ChainState(theta=np.zeros(1), h=1.0, rng_seed=9)
    st = mala_step(Bad(), st)
    assert st.accepted == 0 and st.theta[0] == 0.0
