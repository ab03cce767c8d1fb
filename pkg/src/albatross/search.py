"""Simultaneous-move tree search.

Every search works on an environment object exposing ``num_players``,
``stochastic``, ``alive_players(s)``, ``num_actions(s, i)``,
``step(s, joint_action, chance)``, ``is_terminal(s)`` and ``key(s)``.
Joint actions passed to ``step`` are full length with ``None`` for dead
players. Node values are discounted sums of future rewards; a terminal
state is worth 0 because its rewards were paid by the step reaching it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .nfg import NormalFormGame, action_utilities, softmax, uniform_policy
from .solvers import INFINITY, NAGURNEY_ZHANG, solve_le, solve_nash_2p

LE_BACKUP = "le"
NASH_BACKUP = "nash"
DUCT, EXP3, RM = "duct", "exp3", "rm"


# -- environments -----------------------------------------------------------

@dataclass(frozen=True)
class _Outcome:
    rewards: np.ndarray
    terminated: bool


class MatrixGameEnv:
    """A normal-form game played ``horizon`` times; the state is the turn."""

    stochastic = False

    def __init__(self, game: NormalFormGame, horizon: int = 1):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.game = game
        self.horizon = horizon
        self.num_players = game.num_players
        self.num_actions_per_player = max(game.action_counts)

    def reset(self, seed: int = 0) -> int:
        return 0

    def step(self, state, joint_action, chance=None):
        r = self.game.utilities[(slice(None), *[int(a) for a in joint_action])].copy()
        t = state + 1
        return t, _Outcome(r, t >= self.horizon)

    def is_terminal(self, state) -> bool:
        return state >= self.horizon

    def alive_players(self, state):
        return tuple(range(self.num_players))

    def num_actions(self, state, player: int) -> int:
        return self.game.action_counts[player]

    def key(self, state) -> str:
        return str(state)


# -- leaf evaluators ----------------------------------------------------------

class TerminalEvaluator:
    """Zero at every cut-off; only rewards collected on the way count."""

    def __call__(self, env, state):
        return np.zeros(env.num_players), None


class HeuristicEvaluator:
    """Wraps ``env.heuristic(state)`` (area control for the snake games)."""

    def __call__(self, env, state):
        return np.asarray(env.heuristic(state), dtype=float), None


class ApproximatorEvaluator:
    """Per-player (approximator, temperature tuple) sources.

    ``sources[i]`` answers for player ``i``; a single pair is used for all.
    """

    def __init__(self, sources):
        self.sources = sources

    def _source(self, i):
        if isinstance(self.sources, tuple) and len(self.sources) == 2 and hasattr(self.sources[0], "predict"):
            return self.sources
        return self.sources[i]

    def __call__(self, env, state):
        key = env.key(state)
        n = env.num_players
        values = np.zeros(n)
        priors = [None] * n
        for i in env.alive_players(state):
            approx, temps = self._source(i)
            p, v = approx.predict(key, i, temps)
            values[i] = v
            priors[i] = p
        return values, priors


# -- results ----------------------------------------------------------------------

@dataclass
class SearchResult:
    policies: list
    values: np.ndarray
    nodes_expanded: int
    alive: tuple = ()
    root_game: NormalFormGame | None = None
    extras: dict = field(default_factory=dict)

    def policy(self, i: int) -> np.ndarray:
        return self.policies[i]


def _full_action(n, alive, sub):
    ja = [None] * n
    for i, a in zip(alive, sub):
        ja[i] = int(a)
    return ja


def _children(env, state, alive, chance_samples):
    """Yield (sub joint action, [(rewards, child state, terminal)] per chance)."""
    counts = [env.num_actions(state, i) for i in alive]
    n = env.num_players
    k = chance_samples if env.stochastic else 1
    for sub in itertools.product(*[range(c) for c in counts]):
        ja = _full_action(n, alive, sub)
        outs = []
        for c in range(k):
            child, out = env.step(state, ja, c if env.stochastic else None)
            outs.append((np.asarray(out.rewards, dtype=float), child, out.terminated))
        yield sub, outs


def _reduced_game(q: np.ndarray, alive, counts) -> NormalFormGame:
    """NFG over the alive players; ``q`` has shape (n, *counts)."""
    return NormalFormGame(q[list(alive)].reshape(len(alive), *counts))


def _joint_probs(pols) -> np.ndarray:
    p = pols[0]
    for x in pols[1:]:
        p = np.multiply.outer(p, x)
    return p


def _expected(q: np.ndarray, pols) -> np.ndarray:
    w = _joint_probs(pols)
    return (q * w).reshape(q.shape[0], -1).sum(1)


def _full_policies(env, state, alive, pols):
    out = []
    it = iter(pols)
    for i in range(env.num_players):
        if i in alive:
            out.append(next(it))
        else:
            out.append(uniform_policy(env.num_actions(state, i)) if env.num_actions(state, i) else np.ones(1))
    return out


# -- fixed depth search -------------------------------------------------------

def _solve_backup(game: NormalFormGame, backup: str, tau: float, le_kwargs) -> list:
    if backup == LE_BACKUP:
        return solve_le(game, tau, **le_kwargs).joint_policy
    if backup == NASH_BACKUP:
        if game.num_players == 1:
            u = game.utilities[0]
            p = np.zeros(u.shape[0])
            p[int(np.argmax(u))] = 1.0
            return [p]
        if game.num_players != 2:
            raise ValueError("Nash backup needs at most two alive players")
        return solve_nash_2p(game)[0].joint_policy
    raise ValueError(f"unknown backup {backup!r}")


def fixed_depth_search(
    env,
    state,
    depth: int,
    evaluator=None,
    backup: str = LE_BACKUP,
    tau: float = 10.0,
    gamma: float = 1.0,
    chance_samples: int = 4,
    le_kwargs: dict | None = None,
) -> SearchResult:
    """Backward induction over the full joint-action tree down to ``depth``.

    Each internal node becomes an NFG over its alive players whose entries
    are ``reward + gamma * child value`` (averaged over sampled food spawns),
    solved with the chosen backup equilibrium.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if env.is_terminal(state):
        raise ValueError("cannot search from a terminal state")
    evaluator = evaluator or TerminalEvaluator()
    le_kwargs = {"schedule": NAGURNEY_ZHANG, **(le_kwargs or {})}
    n = env.num_players
    counter = [1]

    def node(s, d, root=False):
        alive = env.alive_players(s)
        counts = [env.num_actions(s, i) for i in alive]
        q = np.zeros((n, *counts))
        for sub, outs in _children(env, s, alive, chance_samples):
            acc = np.zeros(n)
            for r, child, term in outs:
                counter[0] += 1
                if term:
                    v = np.zeros(n)
                elif d == 1:
                    v = np.asarray(evaluator(env, child)[0], dtype=float)
                else:
                    v = node(child, d - 1)[0]
                acc += r + gamma * v
            q[(slice(None), *sub)] = acc / len(outs)
        game = _reduced_game(q, alive, counts)
        pols = _solve_backup(game, backup, tau, le_kwargs)
        vals = _expected(q, pols)
        if root:
            return vals, pols, alive, game
        return vals, None

    vals, pols, alive, game = node(state, depth, root=True)
    return SearchResult(_full_policies(env, state, alive, pols), vals, counter[0], alive, game)


# -- response search -------------------------------------------------------------------------

def rational_response(q_i: np.ndarray, tau_r: float) -> np.ndarray:
    """SBR over own action utilities; ``INFINITY`` gives the lowest-index argmax."""
    if tau_r == INFINITY:
        p = np.zeros(q_i.shape[0])
        p[int(np.argmax(q_i))] = 1.0
        return p
    if not math.isfinite(tau_r) or tau_r < 0:
        raise ValueError(f"response temperature must be >= 0 or INFINITY, got {tau_r}")
    return softmax(q_i, tau_r)


def response_search(
    env,
    state,
    depth: int,
    rational: int,
    proxy,
    weak_temps,
    tau_r: float,
    evaluator=None,
    gamma: float = 1.0,
    chance_samples: int = 4,
) -> SearchResult:
    """Depth-limited tree where weak agents follow the proxy and one agent responds.

    ``weak_temps`` maps each other player to its temperature (dict or a
    full-length sequence whose ``rational`` entry is ignored). At every
    internal node the weak policies come from ``proxy.predict`` and the
    rational player plays the SBR at ``tau_r`` to them.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if env.is_terminal(state):
        raise ValueError("cannot search from a terminal state")
    n = env.num_players
    temps = dict(weak_temps) if isinstance(weak_temps, dict) else dict(enumerate(weak_temps))
    lo, hi = getattr(proxy, "tau_range", (-math.inf, math.inf))
    for j in range(n):
        if j == rational:
            continue
        if j not in temps:
            raise ValueError(f"no temperature for weak player {j}")
        if not lo - 1e-12 <= temps[j] <= hi + 1e-12:
            raise ValueError(f"temperature {temps[j]} of player {j} outside proxy range [{lo}, {hi}]")
    evaluator = evaluator or TerminalEvaluator()
    counter = [1]

    def node(s, d, root=False):
        alive = env.alive_players(s)
        counts = [env.num_actions(s, i) for i in alive]
        q = np.zeros((n, *counts))
        for sub, outs in _children(env, s, alive, chance_samples):
            acc = np.zeros(n)
            for r, child, term in outs:
                counter[0] += 1
                if term:
                    v = np.zeros(n)
                elif d == 1:
                    v = np.asarray(evaluator(env, child)[0], dtype=float)
                else:
                    v = node(child, d - 1)[0]
                acc += r + gamma * v
            q[(slice(None), *sub)] = acc / len(outs)
        key = env.key(s)
        pols = []
        for j, k in zip(alive, counts):
            if j == rational:
                pols.append(None)
            else:
                p = np.asarray(proxy.predict(key, j, (float(temps[j]),))[0], dtype=float)
                pols.append(p)
        if rational in alive:
            pos = alive.index(rational)
            game = _reduced_game(q, alive, counts)
            others = [p for j, p in enumerate(pols) if j != pos]
            u = action_utilities(game, pos, others) if others else game.utilities[0].copy()
            pols[pos] = rational_response(u, tau_r)
        vals = _expected(q, pols)
        if root:
            return vals, pols, alive, _reduced_game(q, alive, counts)
        return vals, None

    vals, pols, alive, game = node(state, depth, root=True)
    return SearchResult(_full_policies(env, state, alive, pols), vals, counter[0], alive, game)


# -- SM-MCTS --------------------------------------------------------------------------------

def exp3_policy(w: np.ndarray, gamma: float) -> np.ndarray:
    """EXP3 sampling distribution in the overflow-free difference form."""
    k = w.shape[0]
    eta = gamma / k
    z = eta * (w[None, :] - w[:, None])
    np.minimum(z, 700.0, out=z)
    diff = np.exp(z)
    return (1.0 - gamma) / diff.sum(1) + gamma / k


def regret_matching(r: np.ndarray) -> np.ndarray:
    pos = np.maximum(r, 0.0)
    total = pos.sum()
    if total > 0:
        return pos / total
    return np.full(r.shape[0], 1.0 / r.shape[0])


def _sample(rng, p: np.ndarray) -> int:
    # inverse CDF; much cheaper than Generator.choice for tiny vectors
    probs = p.tolist()
    u = rng.random() * sum(probs)
    for a, q in enumerate(probs):
        u -= q
        if u < 0:
            return a
    return len(probs) - 1


def duct_scores(w, n, total, prior, c):
    """UCB scores; unvisited actions score +inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        s = w / n + c * prior * math.sqrt(total) / n
    return np.where(n > 0, s, np.inf)


class _Node:
    __slots__ = (
        "state", "alive", "counts", "terminal", "expanded", "children",
        "n", "w", "total", "prior", "exp3_w", "sigma_sum", "regret", "joint_sum",
        "joint_n", "value_sum", "visits",
    )

    def __init__(self, env, state):
        self.state = state
        self.terminal = env.is_terminal(state)
        self.alive = () if self.terminal else env.alive_players(state)
        self.counts = [env.num_actions(state, i) for i in self.alive]
        self.expanded = False
        self.children = {}
        m = len(self.alive)
        self.n = [np.zeros(k) for k in self.counts]
        self.w = [np.zeros(k) for k in self.counts]
        self.total = 0
        self.prior = [np.ones(k) for k in self.counts]
        self.exp3_w = [np.zeros(k) for k in self.counts]
        self.sigma_sum = [np.zeros(k) for k in self.counts]
        self.regret = [np.zeros(k) for k in self.counts]
        self.joint_sum = np.zeros((m, *self.counts)) if m else None
        self.joint_n = np.zeros(tuple(self.counts)) if m else None
        self.value_sum = None
        self.visits = 0


class _Tree:
    def __init__(self, env, evaluator, gamma, chance_samples, rng):
        self.env = env
        self.evaluator = evaluator
        self.gamma = gamma
        self.chance_samples = chance_samples
        self.rng = rng
        self.nodes = 0

    def new_node(self, state) -> _Node:
        self.nodes += 1
        return _Node(self.env, state)

    def expand(self, node: _Node) -> np.ndarray:
        node.expanded = True
        values, priors = self.evaluator(self.env, node.state)
        if priors is not None:
            for pos, i in enumerate(node.alive):
                if priors[i] is not None:
                    node.prior[pos] = np.asarray(priors[i], dtype=float)
        return np.asarray(values, dtype=float)

    def child(self, node: _Node, sub):
        c = int(self.rng.integers(self.chance_samples)) if self.env.stochastic else None
        key = (sub, c)
        hit = node.children.get(key)
        if hit is None:
            ja = _full_action(self.env.num_players, node.alive, sub)
            s, out = self.env.step(node.state, ja, c)
            hit = (np.asarray(out.rewards, dtype=float), self.new_node(s))
            node.children[key] = hit
        return hit

    def leaf_or_terminal(self, node: _Node):
        if node.terminal:
            return np.zeros(self.env.num_players)
        return self.expand(node)


def _record(node: _Node, v: np.ndarray):
    node.visits += 1
    node.value_sum = v.copy() if node.value_sum is None else node.value_sum + v


def smmcts(
    env,
    state,
    iterations: int,
    selection: str = DUCT,
    evaluator=None,
    gamma: float = 1.0,
    seed=0,
    c: float = math.sqrt(2),
    exp3_gamma: float = 0.1,
    rm_explore: float = 0.01,
    chance_samples: int = 4,
    use_prior: bool = True,
) -> SearchResult:
    """Simultaneous-move MCTS with decoupled per-player selection.

    Nodes are created lazily and evaluated once on first visit, so a single
    iteration only evaluates the root and returns uniform root policies.
    DUCT returns visit frequencies; EXP3 and RM return the average of their
    sampling distributions over the iterations that passed the root.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if selection not in (DUCT, EXP3, RM):
        raise ValueError(f"unknown selection {selection!r}")
    if env.is_terminal(state):
        raise ValueError("cannot search from a terminal state")
    rng = np.random.default_rng(seed)
    tree = _Tree(env, evaluator or TerminalEvaluator(), gamma, chance_samples, rng)
    root = tree.new_node(state)

    def select(node: _Node):
        sub, sigmas = [], []
        for pos in range(len(node.alive)):
            if selection == DUCT:
                prior = node.prior[pos] if use_prior else 1.0
                s = duct_scores(node.w[pos], node.n[pos], node.total, prior, c)
                best = np.flatnonzero(s == s.max())
                sub.append(int(best[rng.integers(best.size)]) if best.size > 1 else int(best[0]))
                sigmas.append(None)
            elif selection == EXP3:
                sig = exp3_policy(node.exp3_w[pos], exp3_gamma)
                sub.append(_sample(rng, sig))
                sigmas.append(sig)
            else:
                sig = regret_matching(node.regret[pos])
                mix = (1 - rm_explore) * sig + rm_explore / sig.shape[0]
                sub.append(_sample(rng, mix))
                sigmas.append(mix)
        return tuple(sub), sigmas

    def simulate(node: _Node) -> np.ndarray:
        if node.terminal:
            return np.zeros(env.num_players)
        if not node.expanded:
            v = tree.expand(node)
            _record(node, v)
            return v
        sub, sigmas = select(node)
        r, child = tree.child(node, sub)
        v = r + gamma * simulate(child)
        node.total += 1
        for pos, i in enumerate(node.alive):
            a = sub[pos]
            if selection == DUCT:
                node.n[pos][a] += 1
                node.w[pos][a] += v[i]
            elif selection == EXP3:
                node.n[pos][a] += 1
                node.exp3_w[pos][a] += v[i] / sigmas[pos][a]
                node.sigma_sum[pos] += sigmas[pos]
            else:
                node.n[pos][a] += 1
                node.sigma_sum[pos] += sigmas[pos]
        if selection == RM:
            node.joint_sum[(slice(None), *sub)] += v[list(node.alive)]
            node.joint_n[sub] += 1
            for pos in range(len(node.alive)):
                # mean outcome of deviating to every own action while others keep theirs
                idx = list(sub)
                idx[pos] = slice(None)
                sums = node.joint_sum[(pos, *idx)]
                cnt = node.joint_n[tuple(idx)]
                alt = np.where(cnt > 0, sums / np.maximum(cnt, 1), 0.0)
                node.regret[pos] += alt - v[node.alive[pos]]
        _record(node, v)
        return v

    for _ in range(iterations):
        simulate(root)

    pols = []
    for pos, k in enumerate(root.counts):
        if selection == DUCT:
            cnt = root.n[pos]
            pols.append(cnt / cnt.sum() if cnt.sum() > 0 else uniform_policy(k))
        else:
            s = root.sigma_sum[pos]
            pols.append(s / s.sum() if s.sum() > 0 else uniform_policy(k))
    values = root.value_sum / root.visits
    visits = [x.copy() for x in root.n]
    return SearchResult(
        _full_policies(env, state, root.alive, pols), values, tree.nodes, root.alive,
        extras={"visits": visits},
    )


# -- SM-OOS -------------------------------------------------------------------

def smoos(
    env,
    state,
    iterations: int,
    epsilon: float = 0.2,
    evaluator=None,
    gamma: float = 1.0,
    seed=0,
    chance_samples: int = 4,
) -> SearchResult:
    """Outcome sampling with one updating player per iteration.

    The updater explores with probability ``epsilon``; regrets are weighted
    by the ratio of its on-policy tail probability to its sampling
    probability. Only the non-updating players add their current policy to
    the average.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if env.is_terminal(state):
        raise ValueError("cannot search from a terminal state")
    rng = np.random.default_rng(seed)
    tree = _Tree(env, evaluator or TerminalEvaluator(), gamma, chance_samples, rng)
    root = tree.new_node(state)
    n = env.num_players
    root_returns = []

    def walk(node: _Node, upd: int, prefix_q: float):
        """Return (values, updater tail prob, updater sampling prob) below ``node``."""
        if node.terminal:
            return np.zeros(n), 1.0, 1.0
        if not node.expanded:
            return tree.expand(node), 1.0, 1.0
        sub, sig_all, samp = [], [], 1.0
        for pos, i in enumerate(node.alive):
            sig = regret_matching(node.regret[pos])
            if i == upd:
                mix = (1 - epsilon) * sig + epsilon / sig.shape[0]
                a = _sample(rng, mix)
                samp = mix[a]
            else:
                a = _sample(rng, sig)
                node.sigma_sum[pos] += sig
            sub.append(a)
            sig_all.append(sig)
        r, child = tree.child(node, tuple(sub))
        v_child, tail_below, samp_below = walk(child, upd, prefix_q * samp)
        v = r + gamma * v_child
        if upd in node.alive:
            pos = node.alive.index(upd)
            a = sub[pos]
            sig = sig_all[pos]
            w = v[upd] / (prefix_q * samp * samp_below)
            cf = np.zeros(sig.shape[0])
            cf[a] = w * tail_below
            node.regret[pos] += cf - w * tail_below * sig[a]
            node.n[pos][a] += 1
            return v, sig[a] * tail_below, samp * samp_below
        return v, tail_below, samp_below

    for it in range(iterations):
        upd = root.alive[it % len(root.alive)] if root.alive else 0
        v, _, _ = walk(root, upd, 1.0)
        root_returns.append(v)

    pols = []
    for pos, k in enumerate(root.counts):
        s = root.sigma_sum[pos]
        pols.append(s / s.sum() if s.sum() > 0 else uniform_policy(k))
    values = np.mean(root_returns, axis=0)
    return SearchResult(_full_policies(env, state, root.alive, pols), values, tree.nodes, root.alive)


# -- baseline -----------------------------------------------------------------------

def baseline_agent(env, state, iterations: int, seed=0, evaluator=None) -> list:
    """DUCT with c = sqrt(2), no policy term, heuristic leaves.

    Returns a full-length joint action (``None`` for dead players): each
    alive player's most visited root action, lowest index on ties.
    """
    res = smmcts(
        env, state, iterations, DUCT, evaluator or HeuristicEvaluator(), gamma=1.0,
        seed=seed, c=math.sqrt(2), use_prior=False,
    )
    ja = [None] * env.num_players
    for pos, i in enumerate(res.alive):
        ja[i] = int(np.argmax(res.extras["visits"][pos]))
    return ja
