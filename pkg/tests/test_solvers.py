import math

import numpy as np
import pytest

from albatross.nfg import (
    NormalFormGame,
    action_utilities,
    best_response,
    joint_utility,
    random_nfg,
    softmax,
    uniform_policy,
)
from albatross.solvers import (
    INFINITY,
    MSA,
    NAGURNEY_ZHANG,
    POLYAK,
    SCHEDULES,
    SRA,
    StepSchedule,
    nash_grid_search,
    policy_error,
    qse_leader_value,
    simplex_grid,
    solve_le,
    solve_le_batch,
    solve_nash_2p,
    solve_qse,
    solve_sbrle,
    step_size,
)


# -- schedules -----------------------------------------------------------------

def test_step_size_examples():
    assert step_size(MSA, 5) == 0.2
    assert [step_size(NAGURNEY_ZHANG, t) for t in range(1, 7)] == [1, 1 / 2, 1 / 2, 1 / 3, 1 / 3, 1 / 3]
    assert step_size(POLYAK, 8) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(ValueError):
        step_size(MSA, 0)


def test_nagurney_block_lengths():
    steps = [step_size(NAGURNEY_ZHANG, t) for t in range(1, 56)]
    for k in range(1, 11):
        assert steps.count(1 / k) == k


@pytest.mark.parametrize("kind", [MSA, POLYAK, NAGURNEY_ZHANG])
def test_robbins_monro_stateless(kind):
    a = np.array([step_size(kind, t) for t in range(1, 10**6 + 1, 97)])
    assert ((a > 0) & (a <= 1)).all() and (np.diff(a) <= 0).all()
    assert sum(step_size(kind, t) for t in range(1, 10**6 + 1)) > 10


def test_sra_schedule():
    s = StepSchedule(SRA)
    assert s(1, 1.0) == 1.0
    assert s(2, 0.5) == pytest.approx(1 / 1.3)  # error shrank
    assert s(3, 0.7) == pytest.approx(1 / 3.1)  # error grew
    s = StepSchedule(SRA)
    total = sum(s(t, 1.0 / t) for t in range(1, 10**6 + 1))  # error keeps shrinking
    assert total > 10
    # error never shrinks: still harmonic, partial sums keep growing like ln(T)/1.8
    s = StepSchedule(SRA)
    partial = np.cumsum([s(t, 1.0) for t in range(1, 10**6 + 1)])
    assert partial[-1] - partial[999] > math.log(1000) / 1.8 - 0.01
    with pytest.raises(ValueError):
        StepSchedule("nope")


# -- LE ----------------------------------------------------------------------

def test_le_tau_zero_uniform():
    for s in range(10):
        g = random_nfg(s, 2 + s % 3, 3)
        r = solve_le(g, 0.0)
        assert r.residual == 0.0
        for p in r.joint_policy:
            assert (p == 1 / 3).all()


def test_policy_error_examples(coordination_game):
    u = uniform_policy(2)
    assert policy_error(coordination_game, [u, u], 0.0) == 0.0
    assert policy_error(coordination_game, [np.array([1.0, 0.0]), u], 0.0) == pytest.approx(1.0)


def test_le_fixed_point_and_values(zero_sum_2x2):
    r = solve_le(zero_sum_2x2, 2.0, tol=1e-10, max_iters=100_000)
    assert policy_error(zero_sum_2x2, r.joint_policy, 2.0) <= 1e-9
    for i in range(2):
        assert r.values[i] == pytest.approx(joint_utility(zero_sum_2x2, r.joint_policy, i), abs=1e-9)


def test_le_approaches_nash_value(zero_sum_2x2):
    r = solve_le(zero_sum_2x2, 100.0, NAGURNEY_ZHANG, max_iters=10_000, tol=1e-10)
    assert r.values[0] == pytest.approx(-50 / 11, abs=0.05)


def test_le_coordination_multiplicity(coordination_game):
    r = solve_le(coordination_game, 10.0, init=[np.array([0.9, 0.1]), np.array([0.9, 0.1])], tol=1e-10)
    assert r.joint_policy[0][0] > 0.99 and r.joint_policy[1][0] > 0.99
    r2 = solve_le(coordination_game, 10.0, init=[np.array([0.1, 0.9]), np.array([0.1, 0.9])], tol=1e-10)
    assert r2.joint_policy[0][1] > 0.99


def test_le_zero_sum_unique_from_random_inits():
    for s in range(10):
        g = random_nfg(s, 2, 4, "zero-sum")
        a = solve_le(g, 3.0, tol=1e-9, max_iters=100_000, init=1)
        b = solve_le(g, 3.0, tol=1e-9, max_iters=100_000, init=2)
        for p, q in zip(a.joint_policy, b.joint_policy):
            assert np.abs(p - q).sum() <= 1e-7


def test_le_negative_tau_rejected(zero_sum_2x2):
    with pytest.raises(ValueError):
        solve_le(zero_sum_2x2, -1.0)


@pytest.mark.parametrize("kind", SCHEDULES)
def test_le_fast_path_matches_reference(kind):
    # compiled two-player path against the vectorised batch solver
    g = random_nfg(4, 2, 3)
    fast = solve_le(g, 4.0, kind, max_iters=500, tol=0.0)
    x, y, res, its = solve_le_batch(g.utilities[0][None], g.utilities[1][None], 4.0, kind, max_iters=500)
    np.testing.assert_allclose(fast.joint_policy[0], x[0], atol=1e-12)
    np.testing.assert_allclose(fast.joint_policy[1], y[0], atol=1e-12)
    assert fast.residual == pytest.approx(float(res[0]), abs=1e-12)


def test_le_three_players_fixed_point():
    g = random_nfg(9, 3, 2)
    r = solve_le(g, 1.5, tol=1e-9, max_iters=50_000)
    assert r.residual <= 1e-9
    for i in range(3):
        others = [r.joint_policy[j] for j in range(3) if j != i]
        np.testing.assert_allclose(r.joint_policy[i], softmax(action_utilities(g, i, others), 1.5), atol=1e-8)


def test_le_batch_shapes():
    a = np.stack([random_nfg(s, 2, 3, "zero-sum").utilities[0] for s in range(5)])
    x, y, res, its = solve_le_batch(a, -a, 2.0, NAGURNEY_ZHANG, max_iters=2000, tol=1e-8)
    assert x.shape == (5, 3) and y.shape == (5, 3) and res.shape == (5,)
    np.testing.assert_allclose(x.sum(1), 1.0)


# -- Nash --------------------------------------------------------------------

def test_nash_zero_sum_2x2(zero_sum_2x2):
    (r,) = solve_nash_2p(zero_sum_2x2)
    np.testing.assert_allclose(r.joint_policy[0], [8 / 11, 3 / 11], atol=1e-9)
    np.testing.assert_allclose(r.joint_policy[1], [9 / 11, 2 / 11], atol=1e-9)
    assert r.values[0] == pytest.approx(-50 / 11, abs=1e-9)


def test_nash_dominant_pure():
    g = NormalFormGame.from_bimatrix([[3, 2], [1, 0]], [[3, 1], [2, 0]])
    (r,) = solve_nash_2p(g)
    assert r.joint_policy[0].tolist() == [1, 0] and r.joint_policy[1].tolist() == [1, 0]


def test_nash_enumerate_all_coordination(coordination_game):
    eqs = solve_nash_2p(coordination_game, enumerate_all=True)
    found = sorted(tuple(np.round(np.concatenate(e.joint_policy), 9)) for e in eqs)
    assert found == [(0, 1, 0, 1), (0.5, 0.5, 0.5, 0.5), (1, 0, 1, 0)]


def test_nash_no_profitable_deviation():
    for s in range(40):
        g = random_nfg(s, 2, [3, 4])
        for r in solve_nash_2p(g, enumerate_all=True):
            for i in range(2):
                u = action_utilities(g, i, [r.joint_policy[1 - i]])
                assert u.max() <= r.values[i] + 1e-9


def test_nash_matches_grid_oracle():
    for s in range(5):
        g = random_nfg(s, 2, 2, "zero-sum")
        (r,) = solve_nash_2p(g)
        jp, conv = nash_grid_search(g, 40)
        assert joint_utility(g, jp, 0) == pytest.approx(r.values[0], abs=0.1)


def test_nash_rejects_three_players():
    with pytest.raises(ValueError):
        solve_nash_2p(random_nfg(0, 3, 2))


def test_simplex_grid():
    pts = simplex_grid(3, 4)
    assert pts.shape == (15, 3)
    np.testing.assert_allclose(pts.sum(1), 1.0)


# -- QSE ---------------------------------------------------------------------

def test_qse_tau_zero_is_br_to_uniform(zero_sum_2x2):
    r = solve_qse(zero_sum_2x2, 0, 0.0)
    _, best = best_response(zero_sum_2x2, 0, [uniform_policy(2)])
    assert r.values[0] == pytest.approx(best, abs=1e-9)
    np.testing.assert_allclose(r.joint_policy[1], [0.5, 0.5])


def test_qse_constant_leader_payoff():
    g = NormalFormGame.from_bimatrix([[3.0, 3.0], [3.0, 3.0]], [[1.0, 0.0], [0.0, 2.0]])
    r = solve_qse(g, 0, 1.0)
    assert r.values[0] == pytest.approx(3.0)


def test_qse_beats_nash_policy(zero_sum_2x2):
    tau = 0.3
    r = solve_qse(zero_sum_2x2, 0, tau)
    (ne,) = solve_nash_2p(zero_sum_2x2)
    ne_val = qse_leader_value(zero_sum_2x2, 0, ne.joint_policy[0], tau)
    assert r.values[0] > ne_val
    grid = np.linspace(0, 1, 10_001)
    oracle = max(qse_leader_value(zero_sum_2x2, 0, np.array([p, 1 - p]), tau) for p in grid)
    assert r.values[0] >= oracle - 1e-6


def test_qse_follower_is_sbr(zero_sum_2x2):
    r = solve_qse(zero_sum_2x2, 1, 0.7)
    u = action_utilities(zero_sum_2x2, 0, [r.joint_policy[1]])
    np.testing.assert_allclose(r.joint_policy[0], softmax(u, 0.7), atol=1e-12)


# -- SBRLE -------------------------------------------------------------------

def test_sbrle_tau_r_zero_uniform(zero_sum_2x2):
    r = solve_sbrle(zero_sum_2x2, 0, [2.0], 0.0)
    np.testing.assert_array_equal(r.joint_policy[0], [0.5, 0.5])


def test_sbrle_equals_le_when_temps_match():
    for s in range(10):
        g = random_nfg(s, 2, 3)
        le = solve_le(g, 2.0, tol=1e-10, max_iters=100_000)
        r = solve_sbrle(g, 0, 2.0, 2.0, tol=1e-10, max_iters=100_000)
        for p, q in zip(le.joint_policy, r.joint_policy):
            assert np.abs(p - q).sum() <= 1e-8


def test_brle_zero_sum_2x2(zero_sum_2x2):
    r = solve_sbrle(zero_sum_2x2, 0, {1: 0.3}, INFINITY, tol=1e-12)
    u = action_utilities(zero_sum_2x2, 0, [r.joint_policy[1]])
    assert r.joint_policy[0][int(np.argmax(u))] == 1.0


def test_sbrle_multi_temperature_composition():
    g = random_nfg(2, 3, 2)
    r = solve_sbrle(g, 0, {1: 1.0, 2: 3.0}, 5.0, tol=1e-10, max_iters=50_000)
    np.testing.assert_allclose(r.joint_policy[1], solve_le(g, 1.0, tol=1e-10, max_iters=50_000).joint_policy[1])
    np.testing.assert_allclose(r.joint_policy[2], solve_le(g, 3.0, tol=1e-10, max_iters=50_000).joint_policy[2])


def test_sbrle_bad_inputs(zero_sum_2x2):
    with pytest.raises(ValueError):
        solve_sbrle(zero_sum_2x2, 0, [1.0, 2.0], 1.0)
    with pytest.raises(ValueError):
        solve_sbrle(zero_sum_2x2, 0, [1.0], -2.0)


def test_result_to_dict(zero_sum_2x2):
    d = solve_le(zero_sum_2x2, 1.0).to_dict()
    assert set(d) == {"policies", "values", "residual", "iterations"}
    assert math.isfinite(d["residual"])
