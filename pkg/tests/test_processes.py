import itertools

import numpy as np
import pytest

from crm.estimator import Hypothesis
from crm.processes import (HiddenMarkovSpec, InconsistentObservationError,
                           NotMixingError, StatePosterior, beta_mixing_bound,
                           conditional_risk_oracle, forward_posterior,
                           per_state_risks, random_chain, simulate)


def two_state_chain(flip=0.3):
    return HiddenMarkovSpec(
        transition=np.array([[1 - flip, flip], [flip, 1 - flip]]),
        label_directions=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        label_offsets=np.array([-5.0, 5.0]),
        initial_distribution=np.array([0.5, 0.5]),
    )


def test_simulate_identity_chain_absorbing():
    spec = HiddenMarkovSpec(
        transition=np.eye(3),
        label_directions=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        label_offsets=np.array([-5.0, -5.0, -8.0]),
        initial_distribution=np.array([1.0, 0.0, 0.0]),
    )
    seq = simulate(spec, 200, seed=0)
    assert np.all(seq.latent_states == 0)
    xs = spec.unrescale(seq.points[:, :2])
    labels = seq.labels()
    assert np.array_equal(labels, spec.labels_at(0, xs))


def test_simulate_single_state_uniform_mean():
    spec = HiddenMarkovSpec(
        transition=np.array([[1.0]]),
        label_directions=np.array([[1.0, 0.0]]),
        label_offsets=np.array([-5.0]),
    )
    n = 10_000
    seq = simulate(spec, n, seed=1)
    xs = spec.unrescale(seq.points[:, :2])
    sigma = 10.0 / np.sqrt(12.0) / np.sqrt(n)
    assert np.all(np.abs(xs.mean(axis=0) - 5.0) < 3 * sigma)


def test_simulate_transition_frequencies():
    spec = two_state_chain(flip=0.3)
    seq = simulate(spec, 100_000, seed=2)
    s = seq.latent_states
    flips = np.mean(s[1:] != s[:-1])
    assert abs(flips - 0.3) < 0.01


def test_simulate_reproducible():
    spec = random_chain(5)
    a = simulate(spec, 500, seed=42)
    b = simulate(spec, 500, seed=42)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.latent_states, b.latent_states)
    c = simulate(spec, 500, seed=43)
    assert not np.array_equal(a.points, c.points)


def _enumerate_next_state_posterior(spec, points):
    """Brute force over all latent paths for the next-state distribution."""
    m = spec.num_states
    t_len = points.shape[0]
    post = np.zeros(m)
    total = 0.0
    for path in itertools.product(range(m), repeat=t_len):
        prob = spec.initial_distribution[path[0]]
        for t in range(1, t_len):
            prob *= spec.transition[path[t - 1], path[t]]
        for t in range(t_len):
            x = spec.unrescale(points[t, :2])
            y = 1.0 if points[t, 2] >= 0.5 else -1.0
            if spec.labels_at(path[t], x) != y:
                prob = 0.0
                break
        if prob == 0.0:
            continue
        total += prob
        post += prob * spec.transition[path[-1]]
    return post / total


def test_forward_posterior_identity_single_consistent_state():
    spec = HiddenMarkovSpec(
        transition=np.eye(3),
        label_directions=np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]),
        label_offsets=np.array([-2.0, -5.0, -8.0]),
        initial_distribution=np.array([1 / 3, 1 / 3, 1 / 3]),
    )
    # x1 = 6: states 0,1 say +1, state 2 says -1; a -1 label pins state 2
    obs = np.array([[0.6, 0.5, 0.0]])
    post = forward_posterior(spec, obs)
    assert post.probs == pytest.approx([0.0, 0.0, 1.0], abs=1e-14)


def test_forward_posterior_uniform_transition_memoryless():
    m = 4
    spec = HiddenMarkovSpec(
        transition=np.full((m, m), 1.0 / m),
        label_directions=np.tile([1.0, 0.0], (m, 1)),
        label_offsets=np.array([-2.0, -4.0, -6.0, -8.0]),
    )
    seq = simulate(spec, 6, seed=3)
    post = forward_posterior(spec, seq)
    assert post.probs == pytest.approx(np.full(m, 0.25), abs=1e-14)


def test_forward_posterior_matches_path_enumeration():
    rng = np.random.default_rng(4)
    for trial in range(20):
        spec = random_chain(100 + trial)
        seq = simulate(spec, 6, seed=trial)
        got = forward_posterior(spec, seq).probs
        want = _enumerate_next_state_posterior(spec, seq.points)
        assert got == pytest.approx(want, abs=1e-10)


def test_forward_posterior_empty_prefix_returns_initial():
    spec = random_chain(0)
    post = forward_posterior(spec, np.empty((0, 3)))
    assert post.probs == pytest.approx(spec.initial_distribution, abs=1e-14)


def test_forward_posterior_inconsistent_observation():
    spec = HiddenMarkovSpec(
        transition=np.eye(2),
        label_directions=np.array([[1.0, 0.0], [1.0, 0.0]]),
        label_offsets=np.array([-5.0, -5.0]),
    )
    # both states label x1=8 as +1; a -1 label is impossible
    with pytest.raises(InconsistentObservationError):
        forward_posterior(spec, np.array([[0.8, 0.5, 0.0]]))


def test_oracle_perfect_agreement_is_zero():
    spec = HiddenMarkovSpec(
        transition=np.eye(2),
        label_directions=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        label_offsets=np.array([5.0, 5.0]),  # f_0 > 0 on the whole box
        initial_distribution=np.array([1.0, 0.0]),
    )
    h = Hypothesis(weights=np.zeros(2), bias=1.0)  # predicts +1 everywhere
    post = StatePosterior(probs=np.array([1.0, 0.0]))
    assert conditional_risk_oracle(spec, post, h) == 0.0


def test_oracle_half_split_is_half():
    spec = two_state_chain()
    h = Hypothesis(weights=np.zeros(2), bias=1.0)
    # state 0 labels x1 >= 5 as +1: exactly half the box
    post = StatePosterior(probs=np.array([1.0, 0.0]))
    assert conditional_risk_oracle(spec, post, h) == pytest.approx(0.5, abs=2e-3)


def test_oracle_matches_monte_carlo():
    rng = np.random.default_rng(5)
    spec = random_chain(17)
    h = Hypothesis(weights=rng.normal(size=2), bias=float(rng.normal()) * 0.2)
    post = StatePosterior(probs=np.array([0.1, 0.4, 0.3, 0.2]))
    exact = conditional_risk_oracle(spec, post, h, resolution=1024)

    n_mc = 1_000_000
    states = rng.choice(4, size=n_mc, p=post.probs)
    xs = rng.uniform(spec.emission_box[:, 0], spec.emission_box[:, 1],
                     size=(n_mc, 2))
    margins = np.einsum("ij,ij->i", xs, spec.label_directions[states]) \
        + spec.label_offsets[states]
    ys = np.where(margins >= 0.0, 1.0, -1.0)
    pred = np.where(spec.rescale(xs) @ h.weights + h.bias >= 0.0, 1.0, -1.0)
    mc = float(np.mean(pred != ys))
    se = np.sqrt(mc * (1 - mc) / n_mc)
    assert abs(exact - mc) < 3 * se + 2e-3


def test_oracle_is_convex_combination():
    spec = random_chain(23)
    rng = np.random.default_rng(6)
    h = Hypothesis(weights=rng.normal(size=2), bias=0.0)
    risks = per_state_risks(spec, h, resolution=256)
    probs = rng.dirichlet(np.ones(4))
    val = conditional_risk_oracle(spec, StatePosterior(probs=probs), h,
                                  resolution=256)
    assert risks.min() - 1e-12 <= val <= risks.max() + 1e-12
    assert 0.0 <= val <= 1.0


def test_random_chain_deterministic_and_stochastic():
    a = random_chain(7)
    b = random_chain(7)
    assert np.array_equal(a.transition, b.transition)
    assert np.array_equal(a.label_directions, b.label_directions)
    for seed in range(100):
        spec = random_chain(seed)
        assert np.all(np.abs(spec.transition.sum(axis=1) - 1.0) < 1e-12)
        vals = np.sort(np.abs(np.linalg.eigvals(spec.transition)))
        assert vals[-2] < 1.0  # second-largest eigenvalue modulus
        assert np.all(np.diag(spec.transition) >= 0.2 / 1.2 - 1e-12)


def test_beta_bound_identity_not_mixing():
    spec = HiddenMarkovSpec(
        transition=np.eye(2),
        label_directions=np.array([[1.0, 0.0], [1.0, 0.0]]),
        label_offsets=np.array([-5.0, -5.0]),
    )
    with pytest.raises(NotMixingError):
        beta_mixing_bound(spec, 1)


def test_beta_bound_uniform_chain_zero():
    m = 4
    spec = HiddenMarkovSpec(
        transition=np.full((m, m), 0.25),
        label_directions=np.tile([1.0, 0.0], (m, 1)),
        label_offsets=np.full(m, -5.0),
    )
    for j in (1, 2, 10):
        assert beta_mixing_bound(spec, j) == 0.0


def test_beta_bound_two_state_dominates_exact_tv():
    flip = 0.3
    spec = two_state_chain(flip)
    lam = abs(1 - 2 * flip)
    pi = np.array([0.5, 0.5])
    prev = None
    for j in range(1, 12):
        bound = beta_mixing_bound(spec, j)
        pj = np.linalg.matrix_power(spec.transition, j)
        exact_beta = float(pi @ (0.5 * np.abs(pj - pi[None, :]).sum(axis=1)))
        assert bound >= exact_beta - 1e-12
        assert 0.0 <= bound <= 1.0
        if bound not in (0.0, 1.0) and prev not in (None, 1.0):
            assert bound == pytest.approx(prev * lam, rel=1e-9)
        if prev is not None:
            assert bound <= prev + 1e-15
        prev = bound


def test_beta_bound_monotone_random_chains():
    for seed in range(20):
        spec = random_chain(seed)
        vals = [beta_mixing_bound(spec, j) for j in range(1, 30)]
        assert all(b1 >= b2 - 1e-15 for b1, b2 in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)


def test_spec_json_round_trip(tmp_path):
    spec = random_chain(11)
    path = tmp_path / "spec.json"
    spec.save(path)
    back = HiddenMarkovSpec.load(path)
    assert np.allclose(back.transition, spec.transition)
    assert np.allclose(back.label_directions, spec.label_directions)
    assert np.allclose(back.label_offsets, spec.label_offsets)
    assert np.allclose(back.initial_distribution, spec.initial_distribution)
    assert np.allclose(back.emission_box, spec.emission_box)


def test_spec_validation():
    with pytest.raises(ValueError):
        HiddenMarkovSpec(transition=np.array([[0.5, 0.4], [0.5, 0.5]]),
                         label_directions=np.zeros((2, 2)),
                         label_offsets=np.zeros(2))
    with pytest.raises(ValueError):
        HiddenMarkovSpec(transition=np.eye(2),
                         label_directions=np.zeros((2, 2)),
                         label_offsets=np.zeros(2),
                         emission_box=np.array([[0.0, 0.0], [0.0, 1.0]]))
