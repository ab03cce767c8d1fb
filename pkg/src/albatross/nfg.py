"""Normal-form games and the primitive operations on them.

Utilities are stored as one tensor of shape ``(n, |A_1|, ..., |A_n|)``.
Flattening ``utilities[i]`` in C order gives the row-major joint-action
index with player 1 varying slowest, which is also the JSON layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

Policy = np.ndarray
JointPolicy = Sequence[np.ndarray]

PROB_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    utilities: np.ndarray

    def __post_init__(self):
        u = np.array(self.utilities, dtype=float)
        if u.ndim < 2 or u.shape[0] != u.ndim - 1:
            raise ValueError(
                f"utilities must have shape (n, |A_1|, ..., |A_n|), got {u.shape}"
            )
        if min(u.shape[1:]) < 1:
            raise ValueError("every player needs at least one action")
        if not np.all(np.isfinite(u)):
            raise ValueError("utilities must be finite")
        u.setflags(write=False)
        object.__setattr__(self, "utilities", u)

    @property
    def num_players(self) -> int:
        return self.utilities.shape[0]

    @property
    def action_counts(self) -> tuple[int, ...]:
        return self.utilities.shape[1:]

    @property
    def num_joint_actions(self) -> int:
        return int(np.prod(self.action_counts))

    def utility(self, i: int, joint_action: Sequence[int]) -> float:
        return float(self.utilities[(i, *joint_action)])

    def is_zero_sum(self, atol: float = 0.0) -> bool:
        return self.num_players == 2 and bool(
            np.all(np.abs(self.utilities[0] + self.utilities[1]) <= atol)
        )

    def is_cooperative(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.utilities - self.utilities[0]) <= atol))

    @classmethod
    def from_bimatrix(cls, a, b=None) -> "NormalFormGame":
        """Two-player game from row/column payoff matrices; ``b=None`` means zero-sum."""
        a = np.asarray(a, dtype=float)
        b = -a if b is None else np.asarray(b, dtype=float)
        return cls(np.stack([a, b]))

    # -- JSON -------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "players": self.num_players,
            "actions": [int(k) for k in self.action_counts],
            "utilities": [self.utilities[i].ravel().tolist() for i in range(self.num_players)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalFormGame":
        n = int(d["players"])
        actions = tuple(int(k) for k in d["actions"])
        if len(actions) != n or len(d["utilities"]) != n:
            raise ValueError("players, actions and utilities disagree on player count")
        size = int(np.prod(actions))
        rows = []
        for flat in d["utilities"]:
            if len(flat) != size:
                raise ValueError(f"expected {size} utilities per player, got {len(flat)}")
            rows.append(np.asarray(flat, dtype=float).reshape(actions))
        return cls(np.stack(rows))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "NormalFormGame":
        return cls.from_dict(json.loads(text))


def check_policy(p, num_actions: int | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (num_actions is not None and p.shape[0] != num_actions):
        raise ValueError(f"policy has shape {p.shape}, expected ({num_actions},)")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_ATOL * max(1, p.shape[0]):
        raise ValueError(f"not a probability vector: {p}")
    return p


def check_joint_policy(game: NormalFormGame, jp: JointPolicy) -> list[np.ndarray]:
    if len(jp) != game.num_players:
        raise ValueError(f"joint policy has {len(jp)} entries for {game.num_players} players")
    return [check_policy(p, k) for p, k in zip(jp, game.action_counts)]


def _contract(tensor: np.ndarray, policies: dict[int, np.ndarray]) -> np.ndarray:
    """Sum out the axes listed in ``policies`` (axis -> probability vector)."""
    for axis in sorted(policies, reverse=True):
        tensor = np.tensordot(tensor, policies[axis], axes=([axis], [0]))
    return tensor


def action_utilities(game: NormalFormGame, i: int, others: JointPolicy) -> np.ndarray:
    """Vector ``u_i(a, pi_{-i})`` over player ``i``'s actions.

    ``others`` is either a full joint policy (entry ``i`` ignored) or the
    ``n - 1`` policies of the other players in player order.
    """
    n = game.num_players
    if len(others) == n:
        others = [p for j, p in enumerate(others) if j != i]
    if len(others) != n - 1:
        raise ValueError(f"need {n - 1} opponent policies, got {len(others)}")
    pols = {}
    for j, p in zip([j for j in range(n) if j != i], others):
        p = np.asarray(p, dtype=float)
        if p.shape != (game.action_counts[j],):
            raise ValueError(f"policy of player {j} has shape {p.shape}")
        pols[j] = p
    return _contract(game.utilities[i], pols)


def joint_utility(game: NormalFormGame, jp: JointPolicy, i: int) -> float:
    jp = check_joint_policy(game, jp)
    return float(action_utilities(game, i, jp) @ jp[i])


def best_response(game: NormalFormGame, i: int, others: JointPolicy, atol: float = 1e-12):
    """All maximising actions of player ``i`` and the attained value."""
    u = action_utilities(game, i, others)
    best = u.max()
    actions = tuple(int(a) for a in np.flatnonzero(u >= best - atol))
    return actions, float(best)


def softmax(x: np.ndarray, tau: float) -> np.ndarray:
    z = tau * np.asarray(x, dtype=float)
    z = np.exp(z - z.max())
    return z / z.sum()


def smooth_best_response(game: NormalFormGame, i: int, others: JointPolicy, tau: float) -> Policy:
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"temperature must be finite and >= 0, got {tau}")
    return softmax(action_utilities(game, i, others), tau)


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def transformed_utility(game: NormalFormGame, jp: JointPolicy, i: int, tau: float) -> float:
    """Entropy-regularised utility ``u_i(pi) + H(pi_i) / tau``."""
    if not tau > 0:
        raise ValueError(f"temperature must be > 0, got {tau}")
    jp = check_joint_policy(game, jp)
    return joint_utility(game, jp, i) + entropy(jp[i]) / tau


def random_nfg(seed, players: int = 2, actions=2, kind: str = "general") -> NormalFormGame:
    """Utilities i.i.d. uniform on [-1, 1]; ``kind`` in general | zero-sum | cooperative."""
    if players < 2:
        raise ValueError("need at least two players")
    counts = (actions,) * players if np.isscalar(actions) else tuple(actions)
    if len(counts) != players or min(counts) < 1:
        raise ValueError(f"bad action counts {counts}")
    rng = np.random.default_rng(seed)
    if kind == "general":
        u = rng.uniform(-1, 1, size=(players, *counts))
    elif kind == "zero-sum":
        if players != 2:
            raise ValueError("zero-sum games are two-player")
        a = rng.uniform(-1, 1, size=counts)
        u = np.stack([a, -a])
    elif kind == "cooperative":
        a = rng.uniform(-1, 1, size=counts)
        u = np.broadcast_to(a, (players, *counts)).copy()
    else:
        raise ValueError(f"unknown game class {kind!r}")
    return NormalFormGame(u)


def uniform_policy(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def pure_policy(k: int, a: int) -> np.ndarray:
    p = np.zeros(k)
    p[a] = 1.0
    return p
