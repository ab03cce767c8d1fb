"""Self-play training loops over a pluggable approximator.

Three loops share one skeleton: plain AlphaZero-style training with a
Logit-equilibrium backup at ``tau_max``, the temperature-conditioned proxy,
and the response model that plays a smooth best response to the proxy.
The tabular approximator keeps one (policy, value) estimate per
(state key, player, temperature bucket).
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .nfg import NormalFormGame, action_utilities, softmax
from .rationality import sample_temperature
from .search import (
    ApproximatorEvaluator,
    fixed_depth_search,
    response_search,
)
from .solvers import NAGURNEY_ZHANG, solve_le

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ReplayItem:
    key: str
    player: int
    policy: np.ndarray
    value: float
    temps: tuple = ()

    def __post_init__(self):
        p = np.asarray(self.policy, dtype=float)
        if p.ndim != 1 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"target policy is not a distribution: {p}")
        if not math.isfinite(self.value):
            raise ValueError("target value must be finite")
        object.__setattr__(self, "policy", p)
        object.__setattr__(self, "temps", tuple(float(t) for t in self.temps))


class ReplayBuffer:
    """FIFO buffer with fixed capacity."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def extend(self, items: Iterable[ReplayItem]):
        self._items.extend(items)

    def append(self, item: ReplayItem):
        self._items.append(item)

    def sample(self, rng: np.random.Generator, size: int) -> list[ReplayItem]:
        if not self._items:
            return []
        idx = rng.integers(len(self._items), size=min(size, len(self._items)))
        return [self._items[i] for i in idx]


class TabularApproximator:
    """Lookup table over (state key, player, temperature bucket).

    Temperatures are snapped to a grid of spacing ``tau_step`` on
    ``tau_range`` when training; queries interpolate linearly between the
    neighbouring buckets that have data. Unseen entries answer a uniform
    policy and value 0.
    """

    def __init__(self, num_actions: int = 4, tau_range=(0.0, 10.0), tau_step: float = 0.5, lr: float = 0.5):
        if not 0 < lr <= 1:
            raise ValueError("learning rate must lie in (0, 1]")
        if tau_step <= 0 or tau_range[0] > tau_range[1]:
            raise ValueError("bad temperature grid")
        self.num_actions = num_actions
        self.tau_range = (float(tau_range[0]), float(tau_range[1]))
        self.tau_step = float(tau_step)
        self.lr = float(lr)
        self.table: dict = {}

    @property
    def num_buckets(self) -> int:
        return int(round((self.tau_range[1] - self.tau_range[0]) / self.tau_step)) + 1

    def bucket(self, tau: float) -> int:
        b = int(round((tau - self.tau_range[0]) / self.tau_step))
        return min(max(b, 0), self.num_buckets - 1)

    def bucket_tau(self, b: int) -> float:
        return self.tau_range[0] + b * self.tau_step

    def _neighbours(self, temps):
        """Corner buckets and weights for multilinear interpolation."""
        axes = []
        for t in temps:
            x = (min(max(t, self.tau_range[0]), self.tau_range[1]) - self.tau_range[0]) / self.tau_step
            lo = min(int(math.floor(x)), self.num_buckets - 1)
            hi = min(lo + 1, self.num_buckets - 1)
            f = x - lo
            axes.append(((lo, 1.0 - f), (hi, f)) if hi != lo else ((lo, 1.0),))
        corners = [((), 1.0)]
        for ax in axes:
            corners = [(c + (b,), w * wb) for c, w in corners for b, wb in ax if wb > 0]
        return corners

    def _uniform(self, k):
        return np.full(k, 1.0 / k)

    def predict(self, key: str, player: int, temps=()):
        corners = self._neighbours(tuple(temps))
        pol, val, wsum = None, 0.0, 0.0
        for b, w in corners:
            hit = self.table.get((key, player, b))
            if hit is None:
                continue
            p, v = hit
            pol = w * p if pol is None else pol + w * p
            val += w * v
            wsum += w
        if pol is None:
            return self._uniform(self.num_actions), 0.0
        pol = pol / wsum
        return pol / pol.sum(), val / wsum

    def update(self, items: Sequence[ReplayItem]) -> dict:
        """Move each touched entry toward the mean target of its group."""
        groups: dict = {}
        for it in items:
            b = tuple(self.bucket(t) for t in it.temps)
            groups.setdefault((it.key, it.player, b), []).append(it)
        loss_v, loss_p = 0.0, 0.0
        for k, grp in groups.items():
            tp = np.mean([g.policy for g in grp], axis=0)
            tv = float(np.mean([g.value for g in grp]))
            hit = self.table.get(k)
            if hit is None:
                p, v = self._uniform(tp.shape[0]), 0.0
            else:
                p, v = hit
            loss_v += (tv - v) ** 2 * len(grp)
            loss_p += float(np.abs(tp - p).sum()) * len(grp)
            p = p + self.lr * (tp - p)
            self.table[k] = (p / p.sum(), v + self.lr * (tv - v))
        m = max(len(items), 1)
        return {"value_mse": loss_v / m, "policy_l1": loss_p / m, "entries": len(self.table)}

    # -- persistence ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "kind": "tabular",
            "num_actions": self.num_actions,
            "tau_range": list(self.tau_range),
            "tau_step": self.tau_step,
            "lr": self.lr,
            "entries": [
                {"key": k, "player": pl, "bucket": list(b), "policy": p.tolist(), "value": v}
                for (k, pl, b), (p, v) in self.table.items()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TabularApproximator":
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported approximator format {d.get('version')!r}")
        a = cls(d["num_actions"], tuple(d["tau_range"]), d["tau_step"], d["lr"])
        for e in d["entries"]:
            a.table[(e["key"], int(e["player"]), tuple(e["bucket"]))] = (np.asarray(e["policy"]), float(e["value"]))
        return a

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path) -> "TabularApproximator":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class TrainConfig:
    episodes: int = 1000
    buffer_capacity: int = 2000
    batch_size: int = 64
    updates_per_episode: int = 4
    gamma: float = 0.99
    tau_min: float = 0.0
    tau_max: float = 10.0
    tau_r: float = 10.0
    depth: int = 1
    explore_prob: float = 0.5
    explore_temperature: float = 2.0
    lr: float = 0.5
    tau_step: float = 0.5
    value_target: str = "search"
    le_iters: int = 150
    le_tol: float = 1e-6
    chance_samples: int = 4

    def __post_init__(self):
        if self.episodes < 0 or self.buffer_capacity < 1 or self.batch_size < 1 or self.depth < 1:
            raise ValueError("episodes, buffer, batch size and depth must be positive")
        if not self.tau_min <= self.tau_max:
            raise ValueError("tau_min must not exceed tau_max")
        if not 0.0 <= self.explore_prob <= 1.0:
            raise ValueError("explore_prob must be a probability")
        if self.value_target not in ("search", "return"):
            raise ValueError("value_target is 'search' or 'return'")

    @property
    def le_kwargs(self) -> dict:
        return {"schedule": NAGURNEY_ZHANG, "max_iters": self.le_iters, "tol": self.le_tol}

    def to_dict(self) -> dict:
        return asdict(self)


def mode_defaults(mode) -> dict:
    """Per-mode discount and depth from the published hyperparameters.

    Depth is capped at 1 for the four-player modes and 2 elsewhere so the
    tabular loops stay desk-sized.
    """
    from .engine import Mode

    mode = Mode(mode)
    gamma = {Mode.TRON_2P: 0.99, Mode.STOCH_2P: 0.99, Mode.STOCH_4P: 0.99, Mode.COOP_TRON_4P: 0.97}[mode]
    return {"gamma": gamma, "depth": 1}


def root_action_utilities(result, pos: int) -> np.ndarray:
    """u_i(a, pi_-i) at the search root for the ``pos``-th alive player."""
    game = result.root_game
    others = [result.policies[j] for j in result.alive if j != result.alive[pos]]
    if not others:
        return game.utilities[0].copy()
    return action_utilities(game, pos, others)


def choose_action(rng, policy, utilities, explore_prob, explore_temperature):
    """Boltzmann exploration over root utilities with prob ``explore_prob``, else the policy."""
    explored = rng.random() < explore_prob
    p = softmax(utilities, explore_temperature) if explored else np.asarray(policy)
    return int(rng.choice(p.shape[0], p=p / p.sum())), explored


def _returns(rewards: list[np.ndarray], gamma: float) -> list[np.ndarray]:
    out, acc = [], np.zeros_like(rewards[0]) if rewards else None
    for r in reversed(rewards):
        acc = r + gamma * acc
        out.append(acc.copy())
    return out[::-1]


def _episode_seed(seed, ep):
    return int(np.random.SeedSequence([int(seed), int(ep)]).generate_state(1)[0])


def _run_episode(env, cfg, rng, ep_seed, plan):
    """One self-play episode. ``plan(state)`` returns (SearchResult, targets, actor).

    ``targets`` lists (pos, player, temps) for which replay items are stored;
    ``actor(result, state)`` returns the full joint action.
    """
    state = env.reset(ep_seed)
    pending, rewards = [], []
    while not env.is_terminal(state):
        res, targets, actor = plan(state)
        key = env.key(state)
        for pos, player, temps in targets:
            pending.append((len(rewards), key, player, res.policies[player], float(res.values[player]), temps))
        ja = actor(res, state)
        state, out = env.step(state, ja)
        rewards.append(np.asarray(out.rewards, dtype=float))
    items = []
    rets = _returns(rewards, cfg.gamma) if cfg.value_target == "return" else None
    for t, key, player, pol, val, temps in pending:
        v = float(rets[t][player]) if rets is not None else val
        items.append(ReplayItem(key, player, pol, v, temps))
    return items, len(rewards)


def _self_play_actor(cfg, rng):
    def actor(res, state):
        ja = [None] * len(res.policies)
        for pos, i in enumerate(res.alive):
            u = root_action_utilities(res, pos)
            ja[i], _ = choose_action(rng, res.policies[i], u, cfg.explore_prob, cfg.explore_temperature)
        return ja
    return actor


def _train_loop(env, cfg, approx, seed, episode_setup, callback=None):
    rng = np.random.default_rng(seed)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    history = []
    for ep in range(cfg.episodes):
        plan = episode_setup(ep, rng)
        items, length = _run_episode(env, cfg, rng, _episode_seed(seed, ep), plan)
        buffer.extend(items)
        stats = {}
        for _ in range(cfg.updates_per_episode):
            stats = approx.update(buffer.sample(rng, cfg.batch_size))
        history.append({"episode": ep, "length": length, **stats})
        if callback is not None:
            callback(ep, approx)
    approx.history = history
    return approx


def _new_table(env, cfg: TrainConfig) -> TabularApproximator:
    return TabularApproximator(env.num_actions_per_player, (cfg.tau_min, cfg.tau_max), cfg.tau_step, cfg.lr)


def train_alphazero(env, cfg: TrainConfig, seed: int = 0, approx=None, callback=None):
    """Fixed-depth LE(tau_max) search targets; the model ignores temperature."""
    approx = approx or _new_table(env, cfg)
    evaluator = ApproximatorEvaluator((approx, ()))

    def setup(ep, rng):
        actor = _self_play_actor(cfg, rng)

        def plan(state):
            res = fixed_depth_search(
                env, state, cfg.depth, evaluator, tau=cfg.tau_max, gamma=cfg.gamma,
                chance_samples=cfg.chance_samples, le_kwargs=cfg.le_kwargs,
            )
            return res, [(pos, i, ()) for pos, i in enumerate(res.alive)], actor
        return plan

    return _train_loop(env, cfg, approx, seed, setup, callback)


def train_proxy(env, cfg: TrainConfig, seed: int = 0, approx=None, callback=None):
    """As AlphaZero, but each episode draws its own temperature for the backup."""
    approx = approx or _new_table(env, cfg)

    def setup(ep, rng):
        tau = sample_temperature(rng, cfg.tau_min, cfg.tau_max)
        evaluator = ApproximatorEvaluator((approx, (tau,)))
        actor = _self_play_actor(cfg, rng)

        def plan(state):
            res = fixed_depth_search(
                env, state, cfg.depth, evaluator, tau=tau, gamma=cfg.gamma,
                chance_samples=cfg.chance_samples, le_kwargs=cfg.le_kwargs,
            )
            return res, [(pos, i, (tau,)) for pos, i in enumerate(res.alive)], actor
        return plan

    return _train_loop(env, cfg, approx, seed, setup, callback)


class ResponseLeaves:
    """Leaf values: response model for the rational seat, proxy for the rest."""

    def __init__(self, response, proxy, rational, temps):
        self.response, self.proxy, self.rational, self.temps = response, proxy, rational, temps

    def __call__(self, env, state):
        key = env.key(state)
        values = np.zeros(env.num_players)
        for j in env.alive_players(state):
            if j == self.rational:
                values[j] = self.response.predict(key, j, weak_tuple(self.temps, j))[1]
            else:
                values[j] = self.proxy.predict(key, j, (self.temps[j],))[1]
        return values, None


def weak_tuple(temps: dict, rational: int) -> tuple:
    """Weak temperatures in player order, the rational seat left out."""
    return tuple(float(temps[j]) for j in sorted(temps) if j != rational)


def train_response(env, cfg: TrainConfig, proxy, seed: int = 0, approx=None, callback=None):
    """SBR-to-proxy search targets for one rational seat per episode.

    The rational seat alternates between episodes; every other seat draws
    an independent temperature and acts by sampling the proxy.
    """
    lo, hi = proxy.tau_range
    if abs(lo - cfg.tau_min) > 1e-9 or abs(hi - cfg.tau_max) > 1e-9:
        raise ValueError(f"proxy trained on [{lo}, {hi}], config asks for [{cfg.tau_min}, {cfg.tau_max}]")
    approx = approx or _new_table(env, cfg)
    n = env.num_players

    def setup(ep, rng):
        rational = ep % n
        temps = {j: sample_temperature(rng, cfg.tau_min, cfg.tau_max) for j in range(n) if j != rational}
        leaves = ResponseLeaves(approx, proxy, rational, temps)
        payload = weak_tuple(temps, rational)

        def actor(res, state):
            key = env.key(state)
            ja = [None] * n
            for i in res.alive:
                p = res.policies[i] if i == rational else proxy.predict(key, i, (temps[i],))[0]
                ja[i] = int(rng.choice(len(p), p=p / p.sum()))
            return ja

        def plan(state):
            res = response_search(
                env, state, cfg.depth, rational, proxy, temps, cfg.tau_r, leaves,
                gamma=cfg.gamma, chance_samples=cfg.chance_samples,
            )
            targets = [(res.alive.index(rational), rational, payload)] if rational in res.alive else []
            return res, targets, actor
        return plan

    return _train_loop(env, cfg, approx, seed, setup, callback)


# -- exact ground truth ------------------------------------------------------------------------

def exact_le(env, state, tau: float, gamma: float = 1.0, le_kwargs=None, memo=None):
    """Logit equilibrium of the whole remaining game by memoised backward induction.

    Deterministic games only; states are identified by ``env.key``. Returns
    ``memo``: key -> (alive players, joint policy, values).
    """
    if env.stochastic:
        raise ValueError("exact solving needs a deterministic game")
    le_kwargs = {"schedule": NAGURNEY_ZHANG, "max_iters": 10_000, "tol": 1e-10, **(le_kwargs or {})}
    memo = {} if memo is None else memo
    n = env.num_players

    def value(s):
        k = env.key(s)
        hit = memo.get(k)
        if hit is not None:
            return hit[2]
        alive = env.alive_players(s)
        counts = [env.num_actions(s, i) for i in alive]
        q = np.zeros((n, *counts))
        for sub in np.ndindex(*counts):
            ja = [None] * n
            for i, a in zip(alive, sub):
                ja[i] = int(a)
            child, out = env.step(s, ja)
            v = np.asarray(out.rewards, dtype=float)
            if not out.terminated:
                v = v + gamma * value(child)
            q[(slice(None), *sub)] = v
        game = NormalFormGame(q[list(alive)])
        pols = solve_le(game, tau, **le_kwargs).joint_policy
        w = pols[0]
        for p in pols[1:]:
            w = np.multiply.outer(w, p)
        vals = (q * w).reshape(n, -1).sum(1)
        memo[k] = (alive, pols, vals)
        return vals

    if not env.is_terminal(state):
        value(state)
    return memo


def policy_distance(approx, memo: dict, keys, temps=()) -> float:
    """Mean over keys and alive players of the L1 gap between model and table policy."""
    gaps = []
    for k in keys:
        alive, pols, _ = memo[k]
        for pos, i in enumerate(alive):
            gaps.append(float(np.abs(approx.predict(k, i, temps)[0] - pols[pos]).sum()))
    return float(np.mean(gaps))
