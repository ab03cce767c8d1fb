"""Agents that control one seat of a simultaneous-move game.

An agent is reset once per game with its seat and a seed, asked for an
action at every non-terminal state where it is alive, and shown the joint
action that was actually played.
"""

from __future__ import annotations

import math

import numpy as np

from ..learner import ResponseLeaves
from ..nfg import action_utilities
from ..rationality import ObservationRecord, estimate_temperature
from ..search import (
    DUCT,
    EXP3,
    RM,
    ApproximatorEvaluator,
    HeuristicEvaluator,
    fixed_depth_search,
    response_search,
    smmcts,
    smoos,
)


class Agent:
    name = "agent"

    def reset(self, env, player: int, seed: int):
        self.env, self.player = env, player
        self.rng = np.random.default_rng(seed)

    def act(self, state) -> int:
        raise NotImplementedError

    def observe(self, state, joint_action, next_state):
        pass

    def _pick(self, policy, greedy: bool) -> int:
        p = np.asarray(policy, dtype=float)
        if greedy:
            return int(np.argmax(p))
        return int(self.rng.choice(p.shape[0], p=p / p.sum()))


class RandomAgent(Agent):
    name = "random"

    def act(self, state):
        return int(self.rng.integers(self.env.num_actions(state, self.player)))


class BaselineAgent(Agent):
    """DUCT search on area control, most visited root action."""

    def __init__(self, iterations: int):
        self.iterations = int(iterations)
        self.name = f"baseline-{self.iterations}"

    def act(self, state):
        res = smmcts(
            self.env, state, self.iterations, DUCT, HeuristicEvaluator(), gamma=1.0,
            seed=int(self.rng.integers(2**32)), c=math.sqrt(2), use_prior=False,
        )
        return int(np.argmax(res.extras["visits"][res.alive.index(self.player)]))


class SearchAgent(Agent):
    """Any search variant with heuristic leaves; the root policy is then played."""

    def __init__(self, variant: str, budget: int, tau: float = 10.0, greedy: bool = True, **kwargs):
        self.variant, self.budget, self.tau, self.greedy, self.kwargs = variant, int(budget), tau, greedy, kwargs
        self.name = f"{variant}-{self.budget}"

    def act(self, state):
        ev = HeuristicEvaluator()
        seed = int(self.rng.integers(2**32))
        if self.variant in (DUCT, EXP3, RM):
            res = smmcts(self.env, state, self.budget, self.variant, ev, seed=seed, use_prior=False, **self.kwargs)
            if self.variant == DUCT:
                return int(np.argmax(res.extras["visits"][res.alive.index(self.player)]))
        elif self.variant == "oos":
            res = smoos(self.env, state, self.budget, evaluator=ev, seed=seed, **self.kwargs)
        elif self.variant in ("fixed-le", "fixed-nash"):
            backup = "le" if self.variant == "fixed-le" else "nash"
            res = fixed_depth_search(self.env, state, self.budget, ev, backup=backup, tau=self.tau, **self.kwargs)
        else:
            raise ValueError(f"unknown search variant {self.variant!r}")
        return self._pick(res.policies[self.player], self.greedy)


class ProxyAgent(Agent):
    """Samples the proxy policy at a fixed temperature (default: its upper end)."""

    def __init__(self, proxy, tau: float | None = None, greedy: bool = False):
        self.proxy, self.greedy = proxy, greedy
        self.tau = float(proxy.tau_range[1] if tau is None else tau)
        self.name = f"proxy-{self.tau:g}"

    def act(self, state):
        p, _ = self.proxy.predict(self.env.key(state), self.player, (self.tau,))
        return self._pick(p, self.greedy)


class AlphaZeroAgent(Agent):
    """Fixed-depth LE search at ``tau_max`` with model leaves."""

    def __init__(self, model, depth: int = 1, tau: float = 10.0, gamma: float = 0.99, greedy: bool = True, le_kwargs=None):
        self.model, self.depth, self.tau, self.gamma, self.greedy = model, depth, tau, gamma, greedy
        self.le_kwargs = le_kwargs
        self.name = "alphazero"

    def act(self, state):
        res = fixed_depth_search(
            self.env, state, self.depth, ApproximatorEvaluator((self.model, ())), tau=self.tau,
            gamma=self.gamma, le_kwargs=self.le_kwargs,
        )
        return self._pick(res.policies[self.player], self.greedy)


class AlbatrossAgent(Agent):
    """Response search against the proxy at online temperature estimates.

    Each opponent's temperature is the maximum-likelihood estimate from its
    actions so far in this game. Before any observation the estimate is
    ``tau_max`` (optimistic start). The context of an observation is the
    opponent's action utilities in the depth-1 NFG at that state, with
    everybody else playing the proxy's LE at ``tau_max``.
    """

    def __init__(
        self, proxy, response, depth: int = 1, tau_r: float = 10.0, gamma: float = 0.99,
        tau_range=None, mle_iterations: int = 30, greedy: bool = True, fixed_temps=None,
    ):
        self.proxy, self.response, self.depth, self.tau_r, self.gamma = proxy, response, depth, tau_r, gamma
        self.tau_range = tuple(tau_range or proxy.tau_range)
        self.mle_iterations, self.greedy = mle_iterations, greedy
        self.fixed_temps = fixed_temps
        self.name = "albatross"

    def reset(self, env, player, seed):
        super().reset(env, player, seed)
        self.observations = {j: [] for j in range(env.num_players) if j != player}
        self.estimates_log = []
        self._contexts = None

    def estimates(self) -> dict:
        if self.fixed_temps is not None:
            return dict(self.fixed_temps)
        lo, hi = self.tau_range
        out = {}
        for j, obs in self.observations.items():
            out[j] = estimate_temperature(obs, lo, hi, self.mle_iterations).tau_hat if obs else hi
        return out

    def _context(self, state):
        lo, hi = self.tau_range
        res = fixed_depth_search(
            self.env, state, 1, ApproximatorEvaluator((self.proxy, (hi,))), tau=hi, gamma=self.gamma,
            le_kwargs={"max_iters": 1000, "tol": 1e-8},
        )
        ctx = {}
        for pos, j in enumerate(res.alive):
            if j == self.player:
                continue
            others = [res.policies[k] for k in res.alive if k != j]
            ctx[j] = action_utilities(res.root_game, pos, others) if others else res.root_game.utilities[0]
        return ctx

    def act(self, state):
        temps = self.estimates()
        self.estimates_log.append(dict(temps))
        self._contexts = None if self.fixed_temps is not None else self._context(state)
        leaves = ResponseLeaves(self.response, self.proxy, self.player, temps)
        res = response_search(
            self.env, state, self.depth, self.player, self.proxy, temps, self.tau_r, leaves, gamma=self.gamma,
        )
        return self._pick(res.policies[self.player], self.greedy)

    def observe(self, state, joint_action, next_state):
        if self._contexts is None:
            return
        for j, u in self._contexts.items():
            a = joint_action[j]
            if a is not None:
                self.observations[j].append(ObservationRecord(int(a), tuple(map(float, u))))
        self._contexts = None


AGENT_KINDS = ("random", "baseline", "search", "proxy", "alphazero", "albatross")


def make_agent(spec, models=None) -> Agent:
    """Build an agent from ``{"kind": ..., **params}``; instances pass through.

    Model parameters (``model``, ``proxy``, ``response``) name entries of
    ``models`` (a dict of loaded approximators) or are approximators already.
    """
    if isinstance(spec, Agent):
        return spec
    spec = dict(spec)
    kind = spec.pop("kind", None)
    models = models or {}

    def model(name):
        ref = spec.pop(name, None)
        if ref is None:
            raise ValueError(f"{kind} agent needs a {name!r} model")
        if isinstance(ref, str):
            if ref not in models:
                raise ValueError(f"model {ref!r} not loaded")
            return models[ref]
        return ref

    if kind == "random":
        return RandomAgent()
    if kind == "baseline":
        return BaselineAgent(spec.pop("iterations", 100))
    if kind == "search":
        return SearchAgent(spec.pop("variant"), spec.pop("budget"), **spec)
    if kind == "proxy":
        return ProxyAgent(model("model"), **spec)
    if kind == "alphazero":
        return AlphaZeroAgent(model("model"), **spec)
    if kind == "albatross":
        proxy = model("proxy")
        return AlbatrossAgent(proxy, model("response"), **spec)
    raise ValueError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}")
