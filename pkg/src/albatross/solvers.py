"""Equilibrium solvers for normal-form games.

* Logit equilibria by stochastic fictitious play (SFP) with four step-size
  schedules, plus a vectorised two-player variant for running many games
  at once.
* Two-player Nash equilibria by support enumeration.
* Quantal Stackelberg equilibria by Dinkelbach-style bisection with a grid
  search for the inner problem.
* SBRLE / BRLE composition of the above.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .nfg import (
    NormalFormGame,
    action_utilities,
    best_response,
    check_joint_policy,
    joint_utility,
    pure_policy,
    softmax,
    uniform_policy,
)

INFINITY = math.inf

MSA = "msa"
POLYAK = "polyak"
NAGURNEY_ZHANG = "nagurney"
SRA = "sra"
SCHEDULES = (MSA, POLYAK, NAGURNEY_ZHANG, SRA)


def nagurney_zhang_k(t: int) -> int:
    """Block index k with k(k-1)/2 < t <= k(k+1)/2; the step size is 1/k."""
    k = int(math.ceil((math.sqrt(8 * t + 1) - 1) / 2))
    # guard against floating point at block boundaries
    while k * (k + 1) // 2 < t:
        k += 1
    while k > 1 and (k - 1) * k // 2 >= t:
        k -= 1
    return k


def step_size(kind: str, t: int) -> float:
    """Step size of a stateless schedule at iteration ``t >= 1``."""
    if t < 1:
        raise ValueError(f"iteration index must be >= 1, got {t}")
    if kind == MSA:
        return 1.0 / t
    if kind == POLYAK:
        return t ** (-2.0 / 3.0)
    if kind == NAGURNEY_ZHANG:
        return 1.0 / nagurney_zhang_k(t)
    if kind == SRA:
        raise ValueError("SRA is stateful; use StepSchedule")
    raise ValueError(f"unknown schedule {kind!r}")


@dataclass
class StepSchedule:
    """Step-size generator for SFP.

    SRA keeps ``beta``; each call receives the current policy error. When the
    error did not shrink, ``beta`` grows by ``big_gamma`` (faster decay),
    otherwise by ``gamma``.
    """

    kind: str = NAGURNEY_ZHANG
    gamma: float = 0.3
    big_gamma: float = 1.8
    beta: float = field(default=0.0, init=False)
    prev_error: float = field(default=math.inf, init=False)

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.kind!r}")

    def __call__(self, t: int, error: float | None = None) -> float:
        if self.kind != SRA:
            return step_size(self.kind, t)
        if t < 1:
            raise ValueError(f"iteration index must be >= 1, got {t}")
        if error is None:
            raise ValueError("SRA needs the current policy error")
        if t == 1:
            self.beta = 1.0
        elif error >= self.prev_error:
            self.beta += self.big_gamma
        else:
            self.beta += self.gamma
        self.prev_error = error
        return 1.0 / self.beta


def _as_schedule(schedule) -> StepSchedule:
    if isinstance(schedule, StepSchedule):
        # fresh state for every solve
        return StepSchedule(schedule.kind, schedule.gamma, schedule.big_gamma)
    return StepSchedule(schedule)


@dataclass
class EquilibriumResult:
    joint_policy: list[np.ndarray]
    values: np.ndarray
    residual: float = 0.0
    iterations_used: int = 0

    def to_dict(self) -> dict:
        return {
            "policies": [p.tolist() for p in self.joint_policy],
            "values": self.values.tolist(),
            "residual": float(self.residual),
            "iterations": int(self.iterations_used),
        }


def _values(game: NormalFormGame, jp) -> np.ndarray:
    return np.array([joint_utility(game, jp, i) for i in range(game.num_players)])


def _all_sbr(game: NormalFormGame, pols: list[np.ndarray], tau: float) -> list[np.ndarray]:
    u = game.utilities
    if game.num_players == 2:
        return [softmax(u[0] @ pols[1], tau), softmax(pols[0] @ u[1], tau)]
    if game.num_players == 1:
        return [softmax(u[0], tau)]
    return [softmax(action_utilities(game, i, pols), tau) for i in range(game.num_players)]


def _residual(pols, sbrs) -> float:
    return max(float(np.abs(s - p).sum()) for p, s in zip(pols, sbrs))


def policy_error(game: NormalFormGame, jp, tau: float) -> float:
    """Max over players of the L1 distance between ``pi_i`` and ``SBR(pi_-i, tau)``."""
    pols = check_joint_policy(game, jp)
    return _residual(pols, _all_sbr(game, pols, tau))


def random_simplex_init(game: NormalFormGame, seed) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.dirichlet(np.ones(k)) for k in game.action_counts]


def solve_le(
    game: NormalFormGame,
    tau: float,
    schedule=NAGURNEY_ZHANG,
    max_iters: int = 10_000,
    tol: float = 1e-6,
    init=None,
) -> EquilibriumResult:
    """Logit equilibrium at temperature ``tau`` by stochastic fictitious play.

    ``init`` may be a joint policy, an integer seed for a random simplex
    start, or ``None`` for uniform. Non-convergence is reported through
    ``residual > tol``, never raised.
    """
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"temperature must be finite and >= 0, got {tau}")
    if init is None:
        pols = [uniform_policy(k) for k in game.action_counts]
    elif isinstance(init, (int, np.integer)):
        pols = random_simplex_init(game, init)
    else:
        pols = [p.copy() for p in check_joint_policy(game, init)]
    sched = _as_schedule(schedule)
    if game.num_players == 2 and max_iters > 0:
        from ._kernels import KIND_CODES, sfp2

        p, q, res, t = sfp2(
            np.ascontiguousarray(game.utilities[0]), np.ascontiguousarray(game.utilities[1]),
            float(tau), KIND_CODES[sched.kind], int(max_iters), float(tol),
            pols[0].astype(float), pols[1].astype(float), float(sched.gamma), float(sched.big_gamma),
        )
        pols = [p, q]
        return EquilibriumResult(pols, _values(game, pols), float(res), int(t))
    t = 0
    sbrs = _all_sbr(game, pols, tau)
    res = _residual(pols, sbrs)
    while res > tol and t < max_iters:
        t += 1
        alpha = sched(t, res)
        pols = [p + alpha * (s - p) for p, s in zip(pols, sbrs)]
        sbrs = _all_sbr(game, pols, tau)
        res = _residual(pols, sbrs)
    pols = [p / p.sum() for p in pols]
    return EquilibriumResult(pols, _values(game, pols), res, t)


def solve_le_batch(a, b, taus, schedule=NAGURNEY_ZHANG, max_iters=10_000, tol=0.0, init=None):
    """Vectorised SFP over ``G`` two-player games of equal shape.

    ``a``, ``b``: arrays ``(G, m, k)`` of row and column utilities. Each game
    follows exactly the iteration of :func:`solve_le`, including its own
    stopping time. Returns ``(x, y, residual, iterations)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    g, m, k = a.shape
    taus = np.broadcast_to(np.asarray(taus, dtype=float), (g,)).copy()
    if init is None:
        x = np.full((g, m), 1.0 / m)
        y = np.full((g, k), 1.0 / k)
    else:
        x, y = (np.array(v, dtype=float) for v in init)
    kind = _as_schedule(schedule).kind
    bt = np.asarray(b).transpose(0, 2, 1)

    def sbr(x, y):
        ux = np.einsum("gmk,gk->gm", a, y) * taus[:, None]
        uy = np.einsum("gkm,gm->gk", bt, x) * taus[:, None]
        ex = np.exp(ux - ux.max(1, keepdims=True))
        ey = np.exp(uy - uy.max(1, keepdims=True))
        return ex / ex.sum(1, keepdims=True), ey / ey.sum(1, keepdims=True)

    sx, sy = sbr(x, y)
    res = np.maximum(np.abs(sx - x).sum(1), np.abs(sy - y).sum(1))
    iters = np.zeros(g, dtype=int)
    beta = np.zeros(g)
    prev = np.full(g, np.inf)
    for t in range(1, max_iters + 1):
        active = res > tol
        if not active.any():
            break
        if kind == SRA:
            if t == 1:
                beta[:] = 1.0
            else:
                beta += np.where(res >= prev, 1.8, 0.3)
            prev = res
            alpha = 1.0 / beta
        else:
            alpha = np.full(g, step_size(kind, t))
        # games are frozen once their own stopping rule fires
        alpha = np.where(active, alpha, 0.0)
        iters += active
        x = x + alpha[:, None] * (sx - x)
        y = y + alpha[:, None] * (sy - y)
        sx, sy = sbr(x, y)
        res = np.where(active, np.maximum(np.abs(sx - x).sum(1), np.abs(sy - y).sum(1)), res)
    return x, y, res, iters


# -- Nash -----------------------------------------------------------------

def _support_pairs(m: int, k: int):
    sizes = [(s1, s2) for s1 in range(1, m + 1) for s2 in range(1, k + 1)]
    sizes.sort(key=lambda s: (s[0] + s[1], abs(s[0] - s[1]), s[0]))
    for s1, s2 in sizes:
        for sup1 in itertools.combinations(range(m), s1):
            for sup2 in itertools.combinations(range(k), s2):
                yield sup1, sup2


def _indifference(mat: np.ndarray, nvars: int):
    """Solve ``mat @ z = v * 1``, ``sum z = 1`` in the least-squares sense."""
    rows = mat.shape[0]
    lhs = np.zeros((rows + 1, nvars + 1))
    lhs[:rows, :nvars] = mat
    lhs[:rows, nvars] = -1.0
    lhs[rows, :nvars] = 1.0
    rhs = np.zeros(rows + 1)
    rhs[rows] = 1.0
    sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if np.abs(lhs @ sol - rhs).max() > 1e-9:
        return None
    return sol[:nvars]


def solve_nash_2p(game: NormalFormGame, enumerate_all: bool = False, atol: float = 1e-9):
    """Nash equilibria of a bimatrix game by support enumeration.

    Supports are visited by increasing total size, then imbalance. Returns a
    list holding the first equilibrium, or every distinct one found when
    ``enumerate_all`` is set.
    """
    if game.num_players != 2:
        raise ValueError("support enumeration is implemented for two players only")
    a, b = game.utilities
    m, k = a.shape
    found: list[EquilibriumResult] = []
    for sup1, sup2 in _support_pairs(m, k):
        ys = _indifference(a[np.ix_(sup1, sup2)], len(sup2))
        if ys is None or ys.min() < -atol:
            continue
        xs = _indifference(b[np.ix_(sup1, sup2)].T, len(sup1))
        if xs is None or xs.min() < -atol:
            continue
        x = np.zeros(m)
        y = np.zeros(k)
        x[list(sup1)] = np.clip(xs, 0, None)
        y[list(sup2)] = np.clip(ys, 0, None)
        x /= x.sum()
        y /= y.sum()
        v1 = x @ a @ y
        v2 = x @ b @ y
        if (a @ y).max() > v1 + atol or (x @ b).max() > v2 + atol:
            continue
        if any(np.abs(e.joint_policy[0] - x).sum() + np.abs(e.joint_policy[1] - y).sum() < 1e-8
               for e in found):
            continue
        found.append(EquilibriumResult([x, y], np.array([v1, v2]), 0.0, 0))
        if not enumerate_all:
            break
    if not found:
        raise RuntimeError("support enumeration found no equilibrium; this is a solver bug")
    return found


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All points of the k-simplex with coordinates in multiples of 1/resolution."""
    pts = []
    for cut in itertools.combinations(range(resolution + k - 1), k - 1):
        parts = np.diff((-1, *cut, resolution + k - 1)) - 1
        pts.append(parts)
    return np.asarray(pts, dtype=float) / resolution


def nash_conv(game: NormalFormGame, jp) -> float:
    """Sum over players of the gain from a best-response deviation."""
    total = 0.0
    for i in range(game.num_players):
        _, best = best_response(game, i, jp)
        total += best - joint_utility(game, jp, i)
    return total


def nash_grid_search(game: NormalFormGame, resolution: int = 12):
    """Brute force over simplex grids: the joint policy with least NashConv.

    A test oracle for tiny games only (at most three players and three actions).
    """
    if game.num_players > 3 or max(game.action_counts) > 3:
        raise ValueError("grid search is limited to <= 3 players x <= 3 actions")
    grids = [simplex_grid(k, resolution) for k in game.action_counts]
    best, best_jp = math.inf, None
    for combo in itertools.product(*grids):
        jp = [np.asarray(p) for p in combo]
        nc = nash_conv(game, jp)
        if nc < best:
            best, best_jp = nc, jp
    return best_jp, best


# -- QSE ------------------------------------------------------------------

def _local_grid(center: np.ndarray, radius: float, coarse: np.ndarray) -> np.ndarray:
    k = center.shape[0]
    pts = center + 2 * radius * (coarse - 1.0 / k)
    return pts[(pts >= -1e-15).all(1)].clip(0, None)


def solve_qse(
    game: NormalFormGame,
    leader: int = 0,
    tau_follower: float = 1.0,
    p_tol: float = 1e-10,
    grid_points: int = 101,
    max_bisections: int = 200,
) -> EquilibriumResult:
    """Quantal Stackelberg equilibrium: the leader commits, the follower plays SBR.

    Maximises ``V(x) = sum_b u_L(x, b) w_b(x) / sum_b w_b(x)`` with
    ``w_b(x) = exp(tau * u_F(x, b))`` by bisection on the Dinkelbach
    parameter ``p``. The inner problem ``max_x sum_b (u_L(x, b) - p) w_b(x)``
    is solved on a simplex grid refined once around its best cell.
    """
    if game.num_players != 2:
        raise ValueError("QSE is defined for two players")
    if tau_follower < 0 or not np.isfinite(tau_follower):
        raise ValueError("follower temperature must be finite and >= 0")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    follower = 1 - leader
    lead_u = game.utilities[leader]
    foll_u = game.utilities[follower]
    if leader == 1:
        lead_u, foll_u = lead_u.T, foll_u.T
    m = lead_u.shape[0]
    lo, hi = float(lead_u.min()), float(lead_u.max())
    if hi - lo == 0:
        x = uniform_policy(m)
        return _qse_result(game, leader, follower, x, tau_follower, 0.0, 0)

    def bisect(cands):
        ul = cands @ lead_u
        z = tau_follower * (cands @ foll_u)
        w = np.exp(z - z.max())
        plo, phi = lo, hi
        f_val, it, scores = math.inf, 0, None
        for it in range(1, max_bisections + 1):
            p = 0.5 * (plo + phi)
            scores = ((ul - p) * w).sum(1)
            f_val = scores.max()
            if abs(f_val) <= p_tol:
                break
            if f_val > 0:
                plo = p
            else:
                phi = p
        return cands[int(np.argmax(scores))], abs(f_val), it

    coarse = simplex_grid(m, grid_points - 1)
    x0, _, it0 = bisect(coarse)
    fine = _local_grid(x0, 1.0 / (grid_points - 1), coarse)
    x, f_abs, it1 = bisect(np.vstack([coarse, fine]))
    return _qse_result(game, leader, follower, x, tau_follower, f_abs, it0 + it1)


def _qse_result(game, leader, follower, x, tau, residual, iters):
    x = x / x.sum()
    y = softmax(action_utilities(game, follower, [x]), tau)
    jp = [None, None]
    jp[leader], jp[follower] = x, y
    return EquilibriumResult(jp, _values(game, jp), residual, iters)


def qse_leader_value(game: NormalFormGame, leader: int, x: np.ndarray, tau: float) -> float:
    """Leader utility of committing to ``x`` against the follower's SBR."""
    follower = 1 - leader
    y = softmax(action_utilities(game, follower, [x]), tau)
    jp = [None, None]
    jp[leader], jp[follower] = x, y
    return joint_utility(game, jp, leader)


# -- SBRLE ----------------------------------------------------------------

def solve_sbrle(
    game: NormalFormGame,
    rational: int,
    weak_temps,
    tau_r: float,
    **le_kwargs,
) -> EquilibriumResult:
    """Weak agents play their LE policy at their own temperature; the rational
    player answers with ``SBR(., tau_r)``, or an exact best response when
    ``tau_r`` is ``INFINITY`` (ties resolved to the lowest action index).

    ``weak_temps`` maps each weak player to a temperature, or lists them in
    player order skipping ``rational``. With different temperatures each
    weak agent's policy comes from the symmetric LE at its own temperature.
    """
    n = game.num_players
    weak = [j for j in range(n) if j != rational]
    if isinstance(weak_temps, Mapping):
        temps = {j: float(weak_temps[j]) for j in weak}
    else:
        weak_temps = list(np.atleast_1d(weak_temps))
        if len(weak_temps) == 1 and len(weak) > 1:
            weak_temps = weak_temps * len(weak)
        if len(weak_temps) != len(weak):
            raise ValueError(f"need {len(weak)} weak temperatures")
        temps = dict(zip(weak, map(float, weak_temps)))
    if not (tau_r == INFINITY or (np.isfinite(tau_r) and tau_r >= 0)):
        raise ValueError(f"response temperature must be >= 0 or INFINITY, got {tau_r}")
    cache: dict[float, EquilibriumResult] = {}
    for tau in set(temps.values()):
        cache[tau] = solve_le(game, tau, **le_kwargs)
    jp: list = [None] * n
    for j in weak:
        jp[j] = cache[temps[j]].joint_policy[j]
    u = action_utilities(game, rational, [jp[j] for j in weak])
    if tau_r == INFINITY:
        jp[rational] = pure_policy(len(u), int(np.argmax(u)))
    else:
        jp[rational] = softmax(u, tau_r)
    residual = max(r.residual for r in cache.values())
    iters = sum(r.iterations_used for r in cache.values())
    return EquilibriumResult(jp, _values(game, jp), residual, iters)
