import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from albatross.nfg import (
    NormalFormGame,
    action_utilities,
    best_response,
    entropy,
    joint_utility,
    pure_policy,
    random_nfg,
    smooth_best_response,
    softmax,
    transformed_utility,
    uniform_policy,
)


def test_joint_utility_pure_and_uniform(zero_sum_2x2):
    assert joint_utility(zero_sum_2x2, [pure_policy(2, 0), pure_policy(2, 0)], 0) == -4.0
    u = uniform_policy(2)
    assert joint_utility(zero_sum_2x2, [u, u], 0) == pytest.approx(-3.75, abs=1e-12)


def test_joint_utility_zero_sum_identity():
    rng = np.random.default_rng(0)
    for s in range(20):
        g = random_nfg(s, 2, [3, 4], "zero-sum")
        jp = [rng.dirichlet(np.ones(k)) for k in g.action_counts]
        assert joint_utility(g, jp, 0) + joint_utility(g, jp, 1) == pytest.approx(0.0, abs=1e-12)


def test_joint_utility_dimension_mismatch(zero_sum_2x2):
    with pytest.raises(ValueError):
        joint_utility(zero_sum_2x2, [uniform_policy(3), uniform_policy(2)], 0)


def test_best_response_cases(zero_sum_2x2):
    acts, val = best_response(zero_sum_2x2, 0, [pure_policy(2, 0)])
    assert list(acts) == [0] and val == -4.0
    flat = NormalFormGame(np.zeros((2, 3, 3)))
    assert list(best_response(flat, 0, [uniform_policy(3)])[0]) == [0, 1, 2]
    acts, _ = best_response(zero_sum_2x2, 1, [np.array([8 / 11, 3 / 11])], atol=1e-9)
    assert list(acts) == [0, 1]


def test_best_response_dominates_random_policies():
    rng = np.random.default_rng(1)
    for s in range(20):
        g = random_nfg(s, 3, 3)
        others = [rng.dirichlet(np.ones(3)) for _ in range(2)]
        _, best = best_response(g, 0, others)
        for _ in range(100):
            p = rng.dirichlet(np.ones(3))
            assert joint_utility(g, [p, *others], 0) <= best + 1e-12


def test_sbr_examples():
    g = NormalFormGame(np.array([[[1.0], [0.0]], [[0.0], [0.0]]]))
    np.testing.assert_allclose(smooth_best_response(g, 0, [np.ones(1)], math.log(3)), [0.75, 0.25], atol=1e-14)
    np.testing.assert_array_equal(smooth_best_response(g, 0, [np.ones(1)], 0.0), [0.5, 0.5])
    assert smooth_best_response(g, 0, [np.ones(1)], 1e4)[0] >= 1 - 1e-9
    with pytest.raises(ValueError):
        smooth_best_response(g, 0, [np.ones(1)], -1.0)
    with pytest.raises(ValueError):
        smooth_best_response(g, 0, [np.ones(1)], math.inf)


def test_softmax_overflow_safe():
    p = softmax(np.array([1000.0, 999.0]), 50.0)
    assert np.isfinite(p).all() and p.sum() == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 50), st.integers(2, 5))
def test_sbr_is_valid_policy(seed, tau, k):
    g = random_nfg(seed, 2, k)
    p = smooth_best_response(g, 0, [uniform_policy(k)], tau)
    assert (p >= 0).all() and abs(p.sum() - 1) <= 1e-12


def test_sbr_limit_is_uniform_over_br_set():
    rng = np.random.default_rng(3)
    checked = 0
    for s in range(200):
        g = random_nfg(s, 2, 4)
        q = rng.dirichlet(np.ones(4))
        u = np.sort(action_utilities(g, 0, [q]))
        if np.diff(u).min() < 0.01:
            continue
        acts, _ = best_response(g, 0, [q])
        target = np.zeros(4)
        target[list(acts)] = 1 / len(acts)
        assert np.abs(smooth_best_response(g, 0, [q], 1e4) - target).sum() <= 1e-6
        checked += 1
    assert checked > 20


def test_transformed_utility_examples(zero_sum_2x2):
    jp = [pure_policy(2, 1), uniform_policy(2)]
    assert transformed_utility(zero_sum_2x2, jp, 0, 2.0) == joint_utility(zero_sum_2x2, jp, 0)
    jp = [uniform_policy(2), pure_policy(2, 0)]
    expected = joint_utility(zero_sum_2x2, jp, 0) + math.log(2) / 2.0
    assert transformed_utility(zero_sum_2x2, jp, 0, 2.0) == pytest.approx(expected, abs=1e-14)
    with pytest.raises(ValueError):
        transformed_utility(zero_sum_2x2, jp, 0, 0.0)


def test_entropy_zero_log_zero():
    assert entropy(np.array([1.0, 0.0])) == 0.0
    assert entropy(uniform_policy(4)) == pytest.approx(math.log(4))


def test_sbr_maximises_transformed_utility():
    rng = np.random.default_rng(5)
    for s in range(10):
        g = random_nfg(s, 2, 3)
        q = rng.dirichlet(np.ones(3))
        for tau in (0.1, 1.0, 10.0):
            sbr = smooth_best_response(g, 0, [q], tau)
            best = transformed_utility(g, [sbr, q], 0, tau)
            for p in rng.dirichlet(np.ones(3), size=500):
                assert transformed_utility(g, [p, q], 0, tau) <= best + 1e-9


def test_random_nfg_classes_and_determinism():
    z = random_nfg(7, 2, [3, 2], "zero-sum")
    np.testing.assert_array_equal(z.utilities[0], -z.utilities[1])
    c = random_nfg(7, 3, 2, "cooperative")
    assert all((c.utilities[i] == c.utilities[0]).all() for i in range(3))
    g1, g2 = random_nfg(11, 2, 4), random_nfg(11, 2, 4)
    np.testing.assert_array_equal(g1.utilities, g2.utilities)
    assert np.abs(g1.utilities).max() <= 1.0


def test_game_flags(zero_sum_2x2, coordination_game):
    assert zero_sum_2x2.is_zero_sum() and not zero_sum_2x2.is_cooperative()
    assert coordination_game.is_cooperative() and not coordination_game.is_zero_sum()


def test_json_round_trip_bit_exact():
    g = random_nfg(3, 3, [2, 3, 2])
    back = NormalFormGame.from_json(g.to_json())
    assert back.action_counts == g.action_counts
    assert (back.utilities == g.utilities).all()
    d = g.to_dict()
    assert d["players"] == 3 and d["actions"] == [2, 3, 2] and len(d["utilities"][0]) == 12


def test_row_major_layout():
    g = NormalFormGame.from_dict({"players": 2, "actions": [2, 3], "utilities": [list(range(6)), [0] * 6]})
    assert g.utilities[0, 1, 0] == 3.0 and g.utilities[0, 0, 2] == 2.0


def test_invalid_games():
    with pytest.raises(ValueError):
        NormalFormGame(np.array([[[np.nan]], [[0.0]]]))
    with pytest.raises(ValueError):
        NormalFormGame(np.zeros((3, 2, 2)))
