import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

import oracles
from unified_aos.config import (ProbabilityChoice, ProbabilityType, QualityChoice, QualityType,
                                SelectionChoice, SelectionType)
from unified_aos.core import make_rng
from unified_aos.policy import (AosState, bellman_solve, select_operator, select_operators,
                                update_probability, update_quality)


def state(reward, quality=None, prev=None, prob=None):
    k = len(reward)
    s = AosState.initial(k)
    s.reward = np.asarray(reward, dtype=float)
    if quality is not None:
        s.quality = np.asarray(quality, dtype=float)
    if prev is not None:
        s.prev_reward = np.asarray(prev, dtype=float)
    if prob is not None:
        s.probability = np.asarray(prob, dtype=float)
    return s


def test_initial_state_uniform():
    s = AosState.initial(4)
    assert s.probability.tolist() == [0.25] * 4
    assert s.n_ops == 4


# --- quality ---------------------------------------------------------------------------

def test_weighted_sum():
    q = update_quality(QualityChoice(QualityType.WEIGHTED_SUM, delta=0.3), state([2.0], [1.0]), [1])
    assert q[0] == pytest.approx(1.3, abs=1e-15)


def test_identity_quality():
    assert update_quality(QualityChoice(QualityType.IDENTITY), state([1, -2]), [0, 0]).tolist() == [1, -2]


def test_bellman_gamma_zero():
    choice = QualityChoice(QualityType.BELLMAN, c1=0.6, c2=0.2, gamma_b=0.0)
    q = update_quality(choice, state([1.0], prev=[0.5], prob=[1.0]), [1])
    assert q[0] == pytest.approx(0.7, abs=1e-12)


def test_bellman_matches_neumann_series():
    target, prob = [0.3, 1.2, 0.1], [0.2, 0.5, 0.3]
    q = bellman_solve(np.array(target), np.array(prob), 0.7)
    ref = oracles.bellman_neumann(target, prob, 0.7)
    assert q.tolist() == pytest.approx([float(v) for v in ref], abs=1e-12)


def test_bellman_shift_only_when_negative():
    choice = QualityChoice(QualityType.BELLMAN, c1=1.0, c2=0.0, gamma_b=0.5)
    q = update_quality(choice, state([-1.0, 2.0], prob=[0.5, 0.5]), [0, 0])
    assert q.min() == pytest.approx(1e-6, abs=1e-15)
    q_pos = update_quality(choice, state([1.0, 2.0], prob=[0.5, 0.5]), [0, 0])
    assert q_pos.tolist() == pytest.approx(bellman_solve(np.array([1.0, 2.0]), np.array([0.5, 0.5]), 0.5))


def test_ucb_value():
    q = update_quality(QualityChoice(QualityType.UCB, c_ucb=1.0), state([0.5, 0.0]), [10, 90])
    assert q[0] == pytest.approx(float(oracles.ucb(0.5, 1, 10, 100)), abs=1e-12)
    assert q[0] == pytest.approx(1.1786, abs=1e-4)


def test_ucb_unplayed_sentinel():
    q = update_quality(QualityChoice(QualityType.UCB), state([0.5, 0.0, 0.1]), [3, 0, 2])
    assert np.isinf(q[1]) and np.isfinite(q[[0, 2]]).all()


def test_weighted_normalised_sum():
    choice = QualityChoice(QualityType.WEIGHTED_NORMALISED_SUM, delta=0.5, q_min=0.1)
    q = update_quality(choice, state([3.0, 0.0, 1.0], [0.0, 0.2, 0.4]), [0, 0, 0])
    assert q.tolist() == pytest.approx([0.375, 0.15, 0.325])
    zero = update_quality(choice, state([0.0, 0.0], [0.0, 0.0]), [0, 0])
    assert zero.tolist() == pytest.approx([0.05, 0.05])


# --- probability --------------------------------------------------------------------------

def test_normalised_quality_example():
    p = update_probability(ProbabilityChoice(ProbabilityType.NORMALISED_QUALITY, p_min=0.1, eps_p=0),
                           np.array([3.0, 1.0]), np.array([0.5, 0.5]))
    assert p.tolist() == pytest.approx([0.7, 0.3], abs=1e-15)


def test_biased_rule_example():
    choice = ProbabilityChoice(ProbabilityType.BIASED_RULE, mu=0.5, p_max=0.9, p_min=0.05)
    p = update_probability(choice, np.array([2.0, 1.0]), np.array([0.5, 0.5]))
    assert p.tolist() == pytest.approx([0.70 / 0.975, 0.275 / 0.975], abs=1e-15)
    assert p[0] == pytest.approx(0.7179487, abs=1e-7)


def test_biased_rule_tie_lowest_index():
    choice = ProbabilityChoice(ProbabilityType.BIASED_RULE)
    p = update_probability(choice, np.array([1.0, 3.0, 3.0]), np.full(3, 1 / 3))
    assert p[1] > p[2] == p[0]


def test_identity_probability():
    p = update_probability(ProbabilityChoice(ProbabilityType.IDENTITY), np.array([2.0, 2.0, 4.0]), None)
    assert p.tolist() == [0.25, 0.25, 0.5]


def test_all_zero_quality_uniform():
    for tag in (ProbabilityType.NORMALISED_QUALITY, ProbabilityType.IDENTITY):
        p = update_probability(ProbabilityChoice(tag, eps_p=0.0), np.zeros(4), np.full(4, 0.25))
        assert p.tolist() == [0.25] * 4


def test_sentinel_takes_mass():
    p = update_probability(ProbabilityChoice(ProbabilityType.IDENTITY),
                           np.array([0.3, np.inf, np.inf]), np.full(3, 1 / 3))
    assert p.tolist() == [0.0, 0.5, 0.5]


qualities = st.lists(st.floats(-10, 100, allow_nan=False), min_size=2, max_size=9)


@settings(max_examples=200)
@given(qualities, st.sampled_from(list(ProbabilityType)), st.floats(0, 1))
def test_probabilities_form_simplex(q, tag, eps_p):
    k = len(q)
    choice = ProbabilityChoice(tag, p_min=0.5 / k / 2, eps_p=eps_p)
    p = update_probability(choice, np.array(q), np.full(k, 1 / k))
    assert (p >= 0).all()
    assert abs(p.sum() - 1) < 1e-9


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=9))
def test_normalised_quality_floor(q):
    k = len(q)
    p_min = 0.05
    p = update_probability(ProbabilityChoice(ProbabilityType.NORMALISED_QUALITY, p_min=p_min, eps_p=0),
                           np.array(q), np.full(k, 1 / k))
    assert (p >= p_min - 1e-12).all()


# --- selection --------------------------------------------------------------------------------

def test_greedy_argmax():
    assert select_operator(SelectionChoice(SelectionType.GREEDY), np.array([0.2, 0.5, 0.3]), 0.5,
                           make_rng(0)) == 1


@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=9))
def test_greedy_monotone_invariant(p):
    p = np.array(p)
    g = SelectionChoice(SelectionType.GREEDY)
    assert select_operator(g, p, 0, make_rng(0)) == select_operator(g, np.exp(3 * p), 0, make_rng(0))


def test_epsilon_zero_is_greedy():
    prob = np.array([0.1, 0.6, 0.3])
    draws = select_operators(SelectionChoice(SelectionType.EPSILON_GREEDY, eps=0.0), prob, 0.3,
                             make_rng(5), 1000)
    assert (draws == 1).all()


def test_proportional_frequency():
    draws = select_operators(SelectionChoice(SelectionType.PROPORTIONAL), np.array([0.7, 0.3]),
                             0.0, make_rng(11), 100_000)
    freq = np.bincount(draws, minlength=2)
    assert abs(freq[0] / 1e5 - 0.7) < 0.01
    assert stats.chisquare(freq, [70_000, 30_000]).pvalue > 0.01


def test_linear_annealed_ends():
    prob = np.array([0.1, 0.2, 0.7])
    la = SelectionChoice(SelectionType.LINEAR_ANNEALED)
    assert (select_operators(la, prob, 1.0, make_rng(3), 500) == 2).all()
    freq = np.bincount(select_operators(la, prob, 0.0, make_rng(3), 30_000), minlength=3)
    assert stats.chisquare(freq).pvalue > 0.01


def test_proportional_greedy_mixture():
    prob = np.array([0.5, 0.5, 0.0])
    pg = SelectionChoice(SelectionType.PROPORTIONAL_GREEDY, eps=0.5)
    freq = np.bincount(select_operators(pg, prob, 0.0, make_rng(9), 40_000), minlength=3)
    assert freq[2] == 0
    assert stats.chisquare(freq[:2], [30_000, 10_000]).pvalue > 0.01


def test_single_draw_matches_batch_stream():
    choice = SelectionChoice(SelectionType.EPSILON_GREEDY, eps=0.4)
    prob = np.array([0.3, 0.3, 0.4])
    a, b = make_rng(4), make_rng(4)
    singles = [select_operator(choice, prob, 0.0, a) for _ in range(50)]
    batch = [int(select_operators(choice, prob, 0.0, b, 1)[0]) for _ in range(50)]
    assert singles == batch
