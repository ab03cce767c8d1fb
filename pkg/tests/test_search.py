import math

import numpy as np
import pytest

from albatross.engine import BoardConfig, Mode, SimGameState, SnakeEnv, SnakeState
from albatross.learner import TabularApproximator
from albatross.nfg import NormalFormGame, action_utilities, random_nfg, softmax
from albatross.search import (
    DUCT,
    EXP3,
    INFINITY,
    NASH_BACKUP,
    RM,
    HeuristicEvaluator,
    MatrixGameEnv,
    baseline_agent,
    duct_scores,
    exp3_policy,
    fixed_depth_search,
    regret_matching,
    response_search,
    smmcts,
    smoos,
)
from albatross.solvers import solve_le, solve_nash_2p, solve_sbrle
from oracles import recursive_le

UP, RIGHT, DOWN, LEFT = range(4)


def test_depth_one_equals_solve_le(zero_sum_2x2):
    env = MatrixGameEnv(zero_sum_2x2)
    res = fixed_depth_search(env, 0, 1, tau=1.5, le_kwargs={"max_iters": 10_000, "tol": 1e-10})
    le = solve_le(zero_sum_2x2, 1.5, tol=1e-10)
    for p, q in zip(res.policies, le.joint_policy):
        np.testing.assert_allclose(p, q, atol=1e-9)
    np.testing.assert_allclose(res.values, le.values, atol=1e-9)


def test_nash_backup(zero_sum_2x2):
    res = fixed_depth_search(MatrixGameEnv(zero_sum_2x2), 0, 1, backup=NASH_BACKUP)
    np.testing.assert_allclose(res.policies[0], [8 / 11, 3 / 11], atol=1e-9)
    assert res.values[0] == pytest.approx(-50 / 11)


def test_tau_zero_uniform_everywhere():
    env = SnakeEnv(BoardConfig(5, 5, Mode.TRON_2P))
    res = fixed_depth_search(env, env.reset(0), 2, HeuristicEvaluator(), tau=0.0)
    for p in res.policies:
        np.testing.assert_array_equal(p, 0.25)


def test_node_count_full_tree():
    g = random_nfg(0, 2, 2)
    res = fixed_depth_search(MatrixGameEnv(g, horizon=5), 0, 3, tau=1.0)
    assert res.nodes_expanded == 1 + 4 + 16 + 64


def test_repeated_game_matches_recursion():
    g = random_nfg(1, 2, [2, 3])
    env = MatrixGameEnv(g, horizon=2)
    res = fixed_depth_search(env, 0, 2, tau=2.0, le_kwargs={"max_iters": 20_000, "tol": 1e-12})
    pols, vals = recursive_le(env, 0, 2.0)
    np.testing.assert_allclose(res.values, vals, atol=1e-6)
    for p, q in zip(res.policies, pols):
        assert np.abs(p - q).sum() <= 1e-6


def test_depth_errors(zero_sum_2x2):
    with pytest.raises(ValueError):
        fixed_depth_search(MatrixGameEnv(zero_sum_2x2), 0, 0)
    with pytest.raises(ValueError):
        fixed_depth_search(MatrixGameEnv(zero_sum_2x2), 1, 1)


def test_values_bounded_by_discounted_reward():
    env = SnakeEnv(BoardConfig(5, 5, Mode.TRON_2P))
    gamma = 0.9
    res = fixed_depth_search(env, env.reset(0), 3, gamma=gamma, tau=5.0)
    vmax = (1 - gamma**3) / (1 - gamma)
    assert np.abs(res.values).max() <= vmax + 1e-12
    for p in res.policies:
        assert (p >= 0).all() and p.sum() == pytest.approx(1.0)


def test_stochastic_chance_sampling_runs():
    env = SnakeEnv(BoardConfig(5, 5, Mode.STOCH_2P))
    res = fixed_depth_search(env, env.reset(2), 1, HeuristicEvaluator(), chance_samples=4)
    assert res.nodes_expanded == 1 + 16 * 4


class ExactProxy:
    """Proxy that answers the LE of the one-shot game at the queried temperature."""

    tau_range = (0.0, 10.0)

    def __init__(self, game):
        self.game = game

    def predict(self, key, player, temps):
        return solve_le(self.game, temps[0], tol=1e-12, max_iters=100_000).joint_policy[player], 0.0


def test_response_search_matches_sbrle():
    g = random_nfg(3, 2, 3)
    env = MatrixGameEnv(g)
    for tau_r in (0.0, 1.0, 4.0, INFINITY):
        res = response_search(env, 0, 1, 0, ExactProxy(g), {1: 2.0}, tau_r)
        ref = solve_sbrle(g, 0, {1: 2.0}, tau_r, tol=1e-12, max_iters=100_000)
        for p, q in zip(res.policies, ref.joint_policy):
            np.testing.assert_allclose(p, q, atol=1e-9)


def test_response_against_uniform_proxy(zero_sum_2x2):
    proxy = TabularApproximator(num_actions=2)
    res = response_search(MatrixGameEnv(zero_sum_2x2), 0, 1, 0, proxy, {1: 0.0}, 3.0)
    u = action_utilities(zero_sum_2x2, 0, [np.full(2, 0.5)])
    np.testing.assert_allclose(res.policies[0], softmax(u, 3.0))
    np.testing.assert_allclose(res.policies[1], [0.5, 0.5])


def test_response_temperature_range_checked(zero_sum_2x2):
    proxy = TabularApproximator(num_actions=2)
    with pytest.raises(ValueError):
        response_search(MatrixGameEnv(zero_sum_2x2), 0, 1, 0, proxy, {1: 12.0}, 3.0)
    with pytest.raises(ValueError):
        response_search(MatrixGameEnv(zero_sum_2x2), 0, 1, 0, proxy, {}, 3.0)


# -- bandit rules ---------------------------------------------------------------

def test_exp3_closed_form():
    w = np.array([1.0, 0.0])
    gamma = 0.1
    eta = gamma / 2
    expected = (1 - gamma) * np.exp(eta * w) / np.exp(eta * w).sum() + gamma / 2
    np.testing.assert_allclose(exp3_policy(w, gamma), expected, atol=1e-15)
    big = exp3_policy(np.array([1e6, 0.0]), gamma)
    assert np.isfinite(big).all() and big.sum() == pytest.approx(1.0)


def test_regret_matching_rule():
    np.testing.assert_allclose(regret_matching(np.array([2.0, -1.0, 6.0])), [0.25, 0, 0.75])
    np.testing.assert_allclose(regret_matching(np.array([-2.0, 0.0])), [0.5, 0.5])


def test_duct_greedy_when_c_zero():
    w, n = np.array([3.0, 5.0, 1.0]), np.array([3.0, 10.0, 1.0])
    s = duct_scores(w, n, n.sum(), np.full(3, 1 / 3), 0.0)
    np.testing.assert_allclose(s, w / n)
    s = duct_scores(np.zeros(2), np.array([0.0, 1.0]), 1.0, np.full(2, 0.5), 1.0)
    assert s[0] == math.inf


def test_single_iteration_uniform(zero_sum_2x2):
    env = MatrixGameEnv(zero_sum_2x2)
    for sel in (DUCT, EXP3, RM):
        res = smmcts(env, 0, 1, sel)
        for p in res.policies:
            np.testing.assert_allclose(p, 0.5)


@pytest.mark.parametrize("sel", [RM, EXP3])
def test_bandits_converge_on_zero_sum_2x2(zero_sum_2x2, sel):
    (ne,) = solve_nash_2p(zero_sum_2x2)
    res = smmcts(MatrixGameEnv(zero_sum_2x2), 0, 20_000, sel, seed=1, exp3_gamma=0.2)
    err = sum(np.abs(p - q).sum() for p, q in zip(res.policies, ne.joint_policy))
    assert err < 0.15


def test_smoos_properties(zero_sum_2x2):
    env = MatrixGameEnv(zero_sum_2x2)
    res = smoos(env, 0, 2, epsilon=1.0)
    for p in res.policies:
        np.testing.assert_allclose(p, 0.5)
    a = smoos(env, 0, 500, seed=4)
    b = smoos(env, 0, 500, seed=4)
    for p, q in zip(a.policies, b.policies):
        np.testing.assert_array_equal(p, q)
    with pytest.raises(ValueError):
        smoos(env, 0, 10, epsilon=1.5)
    (ne,) = solve_nash_2p(zero_sum_2x2)
    res = smoos(env, 0, 20_000, seed=2)
    assert sum(np.abs(p - q).sum() for p, q in zip(res.policies, ne.joint_policy)) < 0.15


def test_smmcts_on_snake_board_is_valid():
    env = SnakeEnv(BoardConfig(7, 7, Mode.STOCH_4P))
    s = env.reset(1)
    for sel in (DUCT, EXP3, RM):
        res = smmcts(env, s, 200, sel, HeuristicEvaluator(), gamma=0.95, seed=0)
        for p in res.policies:
            assert (p >= 0).all() and p.sum() == pytest.approx(1.0)
        assert np.isfinite(res.values).all()


def test_baseline_agent_avoids_death():
    cfg = BoardConfig(5, 5, Mode.TRON_2P)
    env = SnakeEnv(cfg)
    # player 0 in a corridor along the bottom wall; only UP is safe
    s = SimGameState((SnakeState(((1, 0), (0, 0)), 1), SnakeState(((4, 4),), 1)))
    s = SimGameState(s.snakes, turn=1)
    for seed in range(5):
        assert baseline_agent(env, s, 200, seed=seed)[0] in (UP, RIGHT)
    corridor = SimGameState((SnakeState(((1, 0), (0, 0), (0, 1), (1, 1), (2, 1)), 1),
                             SnakeState(((4, 4),), 1)), turn=4)
    for seed in range(5):
        assert baseline_agent(env, corridor, 200, seed=seed)[0] == RIGHT


def test_baseline_deterministic():
    env = SnakeEnv(BoardConfig(7, 7, Mode.STOCH_2P))
    s = env.reset(3)
    assert baseline_agent(env, s, 100, seed=7) == baseline_agent(env, s, 100, seed=7)
