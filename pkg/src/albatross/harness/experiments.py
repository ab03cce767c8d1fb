"""Experiment drivers: matches, solver and search benchmarks, exploitation
curves, the Nash-vs-Logit stability study and the repeated matrix game."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..engine import BoardConfig, SnakeEnv
from ..nfg import NormalFormGame, action_utilities, best_response, random_nfg
from ..rationality import ObservationRecord, choice_probabilities, estimate_temperature
from ..search import ApproximatorEvaluator, fixed_depth_search
from ..solvers import NAGURNEY_ZHANG, SCHEDULES, solve_le, solve_le_batch, solve_nash_2p
from .agents import BaselineAgent, SearchAgent, make_agent
from .analysis import rate_agents
from .io import turn_record


def game_seed(master: int, index: int) -> int:
    """Counter-based split of the master seed (stable across runs and platforms)."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


@dataclass
class MatchSpec:
    env_config: BoardConfig
    agents: Sequence  # one per seat: Agent instances or {"kind": ..., **params}
    games: int = 10
    seed: int = 0
    swap_seats: bool = True
    models: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.games < 1:
            raise ValueError("need at least one game")
        if len(self.agents) != self.env_config.num_snakes:
            raise ValueError(f"{len(self.agents)} agents for {self.env_config.num_snakes} seats")


@dataclass
class ExperimentReport:
    header: tuple = ("condition", "mean", "stderr", "n")
    rows: list = field(default_factory=list)
    per_game: dict = field(default_factory=dict)
    logs: list = field(default_factory=list)

    def add(self, condition, values):
        values = np.asarray(values, dtype=float)
        self.rows.append((condition, float(values.mean()), stderr(values), int(values.size)))

    def to_rows(self):
        return [tuple(r) for r in self.rows]


def stderr(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def play_game(env, agents, seed: int, seats=None, log: bool = False):
    """Play one game; ``seats[k]`` is the player index of ``agents[k]``.

    Returns per-agent total rewards (in agent order), the number of turns
    and, when asked, the turn records.
    """
    n = env.num_players
    seats = list(range(n)) if seats is None else list(seats)
    owner = {p: k for k, p in enumerate(seats)}
    ss = np.random.SeedSequence(seed)
    env_seed, *agent_seeds = ss.generate_state(n + 1)
    state = env.reset(int(env_seed))
    for k, agent in enumerate(agents):
        agent.reset(env, seats[k], int(agent_seeds[k]))
    totals = np.zeros(n)
    records = []
    turn = 0
    while not env.is_terminal(state):
        ja = [None] * n
        for p in env.alive_players(state):
            ja[p] = agents[owner[p]].act(state)
        nxt, out = env.step(state, ja)
        for agent in agents:
            agent.observe(state, ja, nxt)
        if log:
            records.append(turn_record(turn, state, ja, out.rewards))
        totals += np.asarray(out.rewards)
        state = nxt
        turn += 1
    return np.array([totals[seats[k]] for k in range(n)]), turn, records


def run_matches(spec: MatchSpec, log: bool = False) -> ExperimentReport:
    """Play ``spec.games`` games; seats rotate every game when ``swap_seats``."""
    env = SnakeEnv(spec.env_config)
    n = env.num_players
    agents = [make_agent(a, spec.models) for a in spec.agents]
    results = np.zeros((spec.games, n))
    report = ExperimentReport()
    for g in range(spec.games):
        shift = g % n if spec.swap_seats else 0
        seats = [(k + shift) % n for k in range(n)]
        r, _, recs = play_game(env, agents, game_seed(spec.seed, g), seats, log)
        results[g] = r
        if log:
            report.logs.append({"game": g, "seats": seats, "turns": recs})
    for k, agent in enumerate(agents):
        name = f"{k}:{getattr(agent, 'name', type(agent).__name__)}"
        report.add(name, results[:, k])
        report.per_game[name] = results[:, k].tolist()
    return report


# -- solver benchmark -----------------------------------------------------------

def bench_solvers(games: int = 1000, actions: int = 6, tau=None, checkpoints=(10, 100, 1000, 10_000), seed: int = 0,
                  schedules=SCHEDULES):
    """Mean SFP policy error per schedule and iteration budget on random zero-sum games.

    ``tau=None`` draws each game's temperature uniformly from [0, 10].
    Rows: (schedule, iterations, mean error, stderr, n, seconds).
    """
    a = np.stack([random_nfg((seed, g), 2, actions, "zero-sum").utilities[0] for g in range(games)])
    taus = np.random.default_rng([seed, games]).uniform(0, 10, games) if tau is None else tau
    rows = []
    for kind in schedules:
        for its in checkpoints:
            t0 = time.perf_counter()
            _, _, res, _ = solve_le_batch(a, -a, taus, kind, max_iters=its, tol=0.0)
            rows.append((kind, its, float(res.mean()), stderr(res), games, time.perf_counter() - t0))
    return rows


# -- search benchmark ---------------------------------------------------------------

def bench_search(env_config: BoardConfig, variants: Sequence[str], budgets: Sequence[int], games: int = 20,
                 baseline_iterations: int = 100, seed: int = 0):
    """Each search variant (heuristic leaves) against the DUCT baseline.

    Rows: (variant, budget, mean reward, stderr, n).
    """
    rows = []
    for v in variants:
        for b in budgets:
            others = [BaselineAgent(baseline_iterations) for _ in range(env_config.num_snakes - 1)]
            rep = run_matches(MatchSpec(env_config, [SearchAgent(v, b)] + others, games, seed))
            _, mean, se, n = rep.rows[0]
            rows.append((v, b, mean, se, n))
    return rows


# -- exploitation curve ---------------------------------------------------------

def exploitability_curve(env_config: BoardConfig, albatross, alphazero, budgets: Sequence[int], games: int = 100,
                         seed: int = 0, models=None, games_per_budget=None) -> ExperimentReport:
    """Reward of the Albatross and AlphaZero agents against baselines of growing budget.

    ``albatross``/``alphazero`` are agent specs (see ``make_agent``) or
    zero-argument factories. Rows: (agent@budget, mean, stderr, n); the
    budget and agent label are also in ``per_game`` keys.
    """
    report = ExperimentReport(header=("agent", "budget", "mean", "stderr", "n"))
    for idx, b in enumerate(budgets):
        count = games_per_budget[idx] if games_per_budget else games
        for label, make in (("albatross", albatross), ("alphazero", alphazero)):
            agent = make() if callable(make) else make_agent(make, models)
            others = [BaselineAgent(b) for _ in range(env_config.num_snakes - 1)]
            rep = run_matches(MatchSpec(env_config, [agent] + others, count, seed + idx))
            _, mean, se, n = rep.rows[0]
            report.rows.append((label, int(b), mean, se, n))
            report.per_game[f"{label}@{b}"] = next(iter(rep.per_game.values()))
    return report


def tournament(env_config: BoardConfig, entrants: dict, games: int = 10, seed: int = 0, models=None, k: float = 32.0):
    """Round robin between two-player agents; returns (Elo table, pair rows).

    A game's score for the first agent is 1 for a positive reward, 0.5 for
    zero and 0 otherwise. Pair rows: (a, b, mean reward of a, stderr, n).
    """
    if env_config.num_snakes != 2:
        raise ValueError("the tournament is two-player")
    names = sorted(entrants)
    outcomes, rows = [], []
    for x, a in enumerate(names):
        for b in names[x + 1:]:
            spec = MatchSpec(env_config, [entrants[a], entrants[b]], games, game_seed(seed, len(rows)), models=models or {})
            rep = run_matches(spec)
            ra = next(iter(rep.per_game.values()))
            for r in ra:
                outcomes.append((a, b, 1.0 if r > 0 else 0.5 if r == 0 else 0.0))
            rows.append((a, b, float(np.mean(ra)), stderr(ra), len(ra)))
    return rate_agents(outcomes, k=k), rows


# -- Nash vs Logit stability ----------------------------------------------------

def stability_from_games(games: Sequence[NormalFormGame], player: int = 0, action: int = 0, tau: float = 5.0):
    """Probability of ``action`` under NE and LE(tau) for each game; plus stddevs."""
    ne, le = [], []
    for g in games:
        ne.append(float(solve_nash_2p(g)[0].joint_policy[player][action]))
        le.append(float(solve_le(g, tau, NAGURNEY_ZHANG, max_iters=10_000, tol=1e-10).joint_policy[player][action]))
    ne, le = np.array(ne), np.array(le)
    return {"nash": ne, "logit": le, "nash_std": float(ne.std()), "logit_std": float(le.std())}


def nash_stability_study(env, probe_state, checkpoints: Sequence, player: int = 0, action: int = 0,
                         tau: float = 5.0, gamma: float = 0.99, temps=()):
    """Depth-1 NFG at ``probe_state`` from each checkpoint's value function."""
    if len(checkpoints) < 2:
        raise ValueError("need at least two checkpoints")
    if env.is_terminal(probe_state):
        raise ValueError("probe state is terminal")
    games = []
    for ck in checkpoints:
        res = fixed_depth_search(env, probe_state, 1, ApproximatorEvaluator((ck, temps)), tau=tau, gamma=gamma)
        games.append(res.root_game)
    return stability_from_games(games, player, action, tau)


def perturbed_checkpoints(env, probe_state, count: int, epsilon: float = 0.05, base: float = 0.0, seed: int = 0):
    """Tabular value functions around an indifference point at ``probe_state``.

    Every non-terminal child of the probe state gets value ``base`` plus an
    independent uniform draw from ``[-epsilon, epsilon]``; in two-player
    games the second player's value is the negation (zero-sum leaves).
    """
    from ..learner import TabularApproximator

    rng = np.random.default_rng(seed)
    alive = env.alive_players(probe_state)
    children = set()
    for ja in np.ndindex(*[env.num_actions(probe_state, i) for i in alive]):
        full = [None] * env.num_players
        for pos, i in enumerate(alive):
            full[i] = int(ja[pos])
        nxt, _ = env.step(probe_state, full)
        if not env.is_terminal(nxt):
            children.add(env.key(nxt))
    children = sorted(children)
    out = []
    for _ in range(count):
        ck = TabularApproximator(num_actions=env.num_actions_per_player)
        for key in children:
            noise = rng.uniform(-epsilon, epsilon, env.num_players)
            if env.num_players == 2:
                noise[1] = -noise[0]
            for i in range(env.num_players):
                ck.table[(key, i, ())] = (ck._uniform(ck.num_actions), base + float(noise[i]))
        out.append(ck)
    return out


# -- repeated matrix game -------------------------------------------------------

SCRIPTS = ("always-A1", "always-A2", "tit-for-tat")


def repeated_matrix_scenario(game: NormalFormGame, script: str, steps: int = 10, tau_min: float = -10.0,
                             tau_max: float = 10.0, opening: int = 1, mle_iterations: int = 30):
    """Player 0 plays a best response to an MLE-tracked logit opponent.

    The opponent's contexts are its action utilities against player 0's
    LE at ``tau_max`` (the agent's notion of optimal play). Player 0's
    prediction of the opponent is the logit choice over those utilities at
    the current estimate, which may be negative; it starts at ``tau_max``.
    Tit-for-tat opens with action ``opening`` and then copies player 0.
    """
    if game.num_players != 2:
        raise ValueError("the scenario is two-player")
    if script not in SCRIPTS:
        raise ValueError(f"unknown script {script!r}")
    optimal = solve_le(game, tau_max, NAGURNEY_ZHANG, max_iters=10_000, tol=1e-10).joint_policy[0]
    context = action_utilities(game, 1, [optimal])
    obs, log = [], []
    tau_hat = tau_max
    last_p0 = None
    for t in range(steps):
        predicted = choice_probabilities(context, tau_hat)
        actions, _ = best_response(game, 0, [predicted], atol=1e-9)
        a0 = actions[0]
        if script == "always-A1":
            a1 = 0
        elif script == "always-A2":
            a1 = 1
        else:
            a1 = opening if last_p0 is None else last_p0
        obs.append(ObservationRecord(a1, tuple(context)))
        log.append({
            "step": t + 1, "p1_action": a0, "p2_action": a1,
            "tau_used": float(tau_hat), "utility": float(game.utilities[0, a0, a1]),
        })
        tau_hat = estimate_temperature(obs, tau_min, tau_max, mle_iterations).tau_hat
        log[-1]["tau_estimate"] = float(tau_hat)
        last_p0 = a0
    return log


def lock_in(log, tail: int = 3):
    """Joint action repeated over the last ``tail`` steps, or None."""
    last = [(r["p1_action"], r["p2_action"]) for r in log[-tail:]]
    return last[0] if len(set(last)) == 1 else None
