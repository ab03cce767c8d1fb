"""Battlesnake and Tron as simultaneous-move games.

Cells are ``(x, y)`` with ``y`` growing upwards. Actions: 0 up, 1 right,
2 down, 3 left. A snake body is a tuple of cells, head first. In the
stochastic modes eating duplicates the tail segment, so the tail stays put
for one move (the official growth rule); Tron trails never shrink.

Start layouts: two snakes sit on row ``b // 2`` at columns
``(b - 1) // 4`` and its mirror image; four snakes sit at the quadrant
centres ``(q, q), (b-1-q, q), (q, b-1-q), (b-1-q, b-1-q)`` with ``q = b // 4``.
"""

from __future__ import annotations

import enum
import math
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

UP, RIGHT, DOWN, LEFT = range(4)
MOVES = ((0, 1), (1, 0), (0, -1), (-1, 0))
ACTION_NAMES = ("up", "right", "down", "left")


class Mode(str, enum.Enum):
    TRON_2P = "tron2p"
    STOCH_2P = "stoch2p"
    STOCH_4P = "stoch4p"
    COOP_TRON_4P = "cooptron4p"

    @property
    def num_snakes(self) -> int:
        return 2 if self in (Mode.TRON_2P, Mode.STOCH_2P) else 4

    @property
    def tron(self) -> bool:
        return self in (Mode.TRON_2P, Mode.COOP_TRON_4P)

    @property
    def cooperative(self) -> bool:
        return self is Mode.COOP_TRON_4P


@dataclass(frozen=True)
class BoardConfig:
    width: int = 7
    height: int = 7
    mode: Mode = Mode.TRON_2P
    max_health: int = 100
    food_spawn_chance: float = 0.15
    min_food: int = 1
    init_snake_length: int | None = None
    max_turns: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.init_snake_length is None:
            object.__setattr__(self, "init_snake_length", 1 if self.mode.tron else 3)
        if self.width < 2 or self.height < 2:
            raise ValueError("board must be at least 2x2")
        if not 0.0 <= self.food_spawn_chance <= 1.0:
            raise ValueError("food_spawn_chance must be a probability")
        if self.max_health < 1 or self.init_snake_length < 1 or self.min_food < 0:
            raise ValueError("health, snake length and food count must be positive")
        if self.width * self.height < self.num_snakes * self.init_snake_length:
            raise ValueError("board too small for the snakes")

    @property
    def num_snakes(self) -> int:
        return self.mode.num_snakes

    @property
    def cells(self) -> int:
        return self.width * self.height

    @property
    def capacity_steps(self) -> int:
        """Upper bound on Tron episode length: the board fills after this many moves."""
        n = self.num_snakes
        return math.ceil((self.cells - n * self.init_snake_length) / n)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["mode"] = self.mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BoardConfig":
        return cls(**d)


@dataclass(frozen=True)
class SnakeState:
    body: tuple[tuple[int, int], ...]
    health: int
    alive: bool = True

    @property
    def head(self):
        return self.body[0]

    @property
    def length(self) -> int:
        return len(self.body)

    @property
    def just_ate(self) -> bool:
        return len(self.body) > 1 and self.body[-1] == self.body[-2]


@dataclass(frozen=True)
class SimGameState:
    snakes: tuple[SnakeState, ...]
    food: frozenset = frozenset()
    turn: int = 0
    seed: int = 0
    # cached terminal flag, set by reset/step
    done: bool = field(default=False, compare=False)

    @property
    def num_players(self) -> int:
        return len(self.snakes)

    def alive_players(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.snakes) if s.alive)


@dataclass(frozen=True)
class StepOutcome:
    rewards: np.ndarray
    terminated: bool


def start_positions(config: BoardConfig) -> list[tuple[int, int]]:
    w, h = config.width, config.height
    if config.num_snakes == 2:
        x = (w - 1) // 4
        return [(x, h // 2), (w - 1 - x, h // 2)]
    qx, qy = w // 4, h // 4
    return [(qx, qy), (w - 1 - qx, qy), (qx, h - 1 - qy), (w - 1 - qx, h - 1 - qy)]


def _rng(seed: int, turn: int, chance) -> random.Random:
    words = [seed & 0xFFFFFFFF, seed >> 32 & 0xFFFFFFFF, turn + 1]
    if chance is not None:
        words.append(1 + int(chance))
    return random.Random(int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0]))


def _free_cells(config: BoardConfig, snakes, food) -> list[tuple[int, int]]:
    occupied = set(food)
    for s in snakes:
        if s.alive:
            occupied.update(s.body)
    return [(x, y) for y in range(config.height) for x in range(config.width) if (x, y) not in occupied]


def _spawn_food(config, snakes, food: set, rng: random.Random, initial: bool = False):
    if config.mode.tron:
        return
    free = _free_cells(config, snakes, food)
    while len(food) < config.min_food and free:
        food.add(free.pop(rng.randrange(len(free))))
    if not initial and free and rng.random() < config.food_spawn_chance:
        food.add(free.pop(rng.randrange(len(free))))


def _is_terminal(config: BoardConfig, snakes, turn: int) -> bool:
    alive = sum(s.alive for s in snakes)
    if config.max_turns is not None and turn >= config.max_turns:
        return True
    if config.mode.cooperative:
        return alive == 0
    return alive <= 1


def reset(config: BoardConfig, seed: int = 0) -> SimGameState:
    snakes = tuple(
        SnakeState((p,) * config.init_snake_length, config.max_health)
        for p in start_positions(config)
    )
    food: set = set()
    _spawn_food(config, snakes, food, _rng(seed, -1, None), initial=True)
    return SimGameState(snakes, frozenset(food), 0, int(seed), _is_terminal(config, snakes, 0))


def is_terminal(config: BoardConfig, state: SimGameState) -> bool:
    return _is_terminal(config, state.snakes, state.turn)


def step(config: BoardConfig, state: SimGameState, joint_action: Sequence, chance=None):
    """Advance all snakes simultaneously.

    ``joint_action`` has one entry per player; entries of dead players are
    ignored. ``chance`` selects an alternative food-spawn stream (used by
    search to sample several outcomes of the same move).
    """
    if state.done or is_terminal(config, state):
        raise ValueError("cannot step a terminal state")
    n = state.num_players
    if len(joint_action) != n:
        raise ValueError(f"need {n} actions, got {len(joint_action)}")
    tron = config.mode.tron
    food = set(state.food)
    moved = []
    for i, s in enumerate(state.snakes):
        if not s.alive:
            moved.append(s)
            continue
        a = joint_action[i]
        if a is None or not 0 <= int(a) < 4:
            raise ValueError(f"player {i} is alive and needs an action in 0..3, got {a!r}")
        dx, dy = MOVES[int(a)]
        head = (s.head[0] + dx, s.head[1] + dy)
        if tron:
            moved.append(SnakeState((head,) + s.body, s.health))
            continue
        body = (head,) + s.body[:-1]
        health = s.health - 1
        moved.append(SnakeState(body, health))
    if not tron:
        eaten = set()
        for i, s in enumerate(moved):
            if s.alive and state.snakes[i].alive and s.head in food:
                eaten.add(s.head)
                moved[i] = SnakeState(s.body + (s.body[-1],), config.max_health)
        food -= eaten

    was_alive = [s.alive for s in state.snakes]
    dead = set()
    for i, s in enumerate(moved):
        if not was_alive[i]:
            continue
        x, y = s.head
        if not (0 <= x < config.width and 0 <= y < config.height) or (not tron and s.health <= 0):
            dead.add(i)
    survivors = [i for i in range(n) if was_alive[i] and i not in dead]
    bodies = set()
    for i in survivors:
        bodies.update(moved[i].body[1:])
    collided = set()
    for i in survivors:
        head = moved[i].head
        if head in bodies:
            collided.add(i)
            continue
        for j in survivors:
            if j != i and moved[j].head == head and moved[i].length <= moved[j].length:
                collided.add(i)
                break
    dead |= collided

    snakes = tuple(
        SnakeState((), s.health, False) if (i in dead or not was_alive[i]) else s
        for i, s in enumerate(moved)
    )
    rewards = _rewards(config, was_alive, dead, n)
    turn = state.turn + 1
    if not tron:
        _spawn_food(config, snakes, food, _rng(state.seed, turn, chance))
    done = _is_terminal(config, snakes, turn)
    new = SimGameState(snakes, frozenset(food), turn, state.seed, done)
    return new, StepOutcome(rewards, done)


def _rewards(config: BoardConfig, was_alive, dead: set, n: int) -> np.ndarray:
    r = np.zeros(n)
    alive_before = [i for i in range(n) if was_alive[i]]
    alive_after = [i for i in alive_before if i not in dead]
    if config.mode.cooperative:
        if len(alive_after) == n:
            r[:] = 1.0 / config.capacity_steps
        return r
    if not dead:
        return r
    for i in dead:
        r[i] = -1.0
    if n == 2:
        if len(alive_after) == 1:
            r[alive_after[0]] = 1.0
        return r
    if alive_after:
        r[alive_after] = 1.0 / len(alive_after)
    return r


def state_key(state: SimGameState, tron: bool | None = None) -> str:
    """Canonical string encoding; snakes in player order, no symmetry folding."""
    parts = []
    for s in state.snakes:
        if not s.alive:
            parts.append("x")
            continue
        cells = ".".join(f"{x},{y}" for x, y in s.body)
        parts.append(cells if tron else f"{s.health}:{cells}")
    if not tron and state.food:
        parts.append("f" + ".".join(f"{x},{y}" for x, y in sorted(state.food)))
    return "|".join(parts)


# -- area control -----------------------------------------------------------

def _free_times(config: BoardConfig, state: SimGameState) -> dict:
    """Layer from which each occupied cell becomes passable (inf = never)."""
    free_at: dict = {}
    for s in state.snakes:
        if not s.alive:
            continue
        length = len(s.body)
        for idx, cell in enumerate(s.body):
            # segment idx leaves after length - idx moves
            t = math.inf if config.mode.tron else length - idx
            free_at[cell] = max(free_at.get(cell, 0), t)
    return free_at


def area_control(config: BoardConfig, state: SimGameState) -> np.ndarray:
    """Number of cells each snake claims in ``area_owners`` (heads excluded)."""
    alpha = np.zeros(state.num_players, dtype=int)
    heads = {s.head for s in state.snakes if s.alive}
    for c, i in area_owners(config, state).items():
        if i is not None and c not in heads:
            alpha[i] += 1
    return alpha


def area_owners(config: BoardConfig, state: SimGameState) -> dict:
    """Cells each snake reaches first in a simultaneous flood fill.

    All heads expand one layer at a time. A cell reached by several snakes in
    the same layer goes to the strictly longest one; on a length tie nobody
    gets it and nobody expands through it. In the stochastic modes body cells
    open up as tails move away (layer ``d`` frees the last ``d`` segments),
    and territory bordering a cell that is still closed keeps waiting for it.
    Returns cell -> owning player, or ``None`` for contested cells; heads
    belong to their snake.
    """
    free_at = _free_times(config, state)
    w, h = config.width, config.height
    owner: dict = {}
    frontiers = {}
    for i, s in enumerate(state.snakes):
        if s.alive:
            frontiers[i] = [s.head]
            owner[s.head] = i
    lengths = {i: state.snakes[i].length for i in frontiers}
    layer = 0
    while any(frontiers.values()):
        layer += 1
        claims: dict = {}
        for i, front in frontiers.items():
            for x, y in front:
                for dx, dy in MOVES:
                    c = (x + dx, y + dy)
                    if not (0 <= c[0] < w and 0 <= c[1] < h) or c in owner:
                        continue
                    if free_at.get(c, 0) > layer:
                        continue
                    claims.setdefault(c, set()).add(i)
        # cells next to a body segment that opens later keep expanding
        new_fronts = {i: [] for i in frontiers}
        for i, front in frontiers.items():
            for x, y in front:
                for dx, dy in MOVES:
                    c = (x + dx, y + dy)
                    if c not in owner and c not in claims and layer < free_at.get(c, 0) < math.inf:
                        new_fronts[i].append((x, y))
                        break
        for c, who in claims.items():
            if len(who) == 1:
                winner = next(iter(who))
            else:
                best = max(lengths[i] for i in who)
                top = [i for i in who if lengths[i] == best]
                winner = top[0] if len(top) == 1 else None
            owner[c] = winner
            if winner is not None:
                new_fronts[winner].append(c)
        frontiers = new_fronts
    return owner


def heuristic_value(config: BoardConfig, state: SimGameState, i: int, alpha=None) -> float:
    """Area-control advantage, plus relative health outside Tron.

    Dead players get 0: their terminal reward was paid by the step that
    killed them.
    """
    if not state.snakes[i].alive:
        return 0.0
    alive = state.alive_players()
    if alpha is None:
        alpha = area_control(config, state)
    cells = config.cells
    a_dev = (alpha[i] - sum(alpha[j] for j in alive) / len(alive)) / cells
    if config.mode.tron:
        return float(a_dev)
    h_dev = (state.snakes[i].health - sum(state.snakes[j].health for j in alive) / len(alive))
    return float(0.5 * (a_dev + h_dev / config.max_health))


def heuristic_values(config: BoardConfig, state: SimGameState) -> np.ndarray:
    alpha = area_control(config, state)
    return np.array([heuristic_value(config, state, i, alpha) for i in range(state.num_players)])


class SnakeEnv:
    """Adapter giving search and training a uniform game interface."""

    num_actions_per_player = 4

    def __init__(self, config: BoardConfig):
        self.config = config
        self.num_players = config.num_snakes
        self.stochastic = not config.mode.tron

    def reset(self, seed: int = 0) -> SimGameState:
        return reset(self.config, seed)

    def step(self, state, joint_action, chance=None):
        return step(self.config, state, joint_action, chance)

    def is_terminal(self, state) -> bool:
        return state.done

    def alive_players(self, state) -> tuple[int, ...]:
        return state.alive_players()

    def num_actions(self, state, player: int) -> int:
        return 4

    def key(self, state) -> str:
        return state_key(state, self.config.mode.tron)

    def heuristic(self, state) -> np.ndarray:
        return heuristic_values(self.config, state)


def render(config: BoardConfig, state: SimGameState) -> str:
    """ASCII board, top row first: digits are heads, letters bodies, * food."""
    grid = [["." for _ in range(config.width)] for _ in range(config.height)]
    for c in state.food:
        grid[c[1]][c[0]] = "*"
    for i, s in enumerate(state.snakes):
        if not s.alive:
            continue
        for k, (x, y) in reversed(list(enumerate(s.body))):
            if 0 <= x < config.width and 0 <= y < config.height:
                grid[y][x] = str(i) if k == 0 else "abcdefgh"[i]
    return "\n".join("".join(row) for row in reversed(grid))
