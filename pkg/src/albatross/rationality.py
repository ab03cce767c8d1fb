"""Maximum-likelihood temperature estimation and training-temperature sampling.

An observation pairs the action an agent chose with the utilities of all of
its actions in that situation, ``u(a, pi_-j)``. The agent is modelled as
choosing with probability ``softmax(tau * u)``; the log-likelihood is concave
in ``tau``, so bisection on the sign of its derivative finds the maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ObservationRecord:
    chosen_action: int
    context_utilities: tuple[float, ...]

    def __post_init__(self):
        u = tuple(float(v) for v in self.context_utilities)
        if not u or not all(math.isfinite(v) for v in u):
            raise ValueError("context utilities must be a non-empty finite vector")
        if not 0 <= self.chosen_action < len(u):
            raise ValueError(f"action {self.chosen_action} out of range for {len(u)} actions")
        object.__setattr__(self, "context_utilities", u)

    def to_dict(self) -> dict:
        return {"utilities": list(self.context_utilities), "chosen": self.chosen_action}

    @classmethod
    def from_dict(cls, d: dict) -> "ObservationRecord":
        return cls(int(d["chosen"]), tuple(d["utilities"]))


@dataclass(frozen=True)
class TemperatureEstimate:
    tau_hat: float
    interval: tuple[float, float]
    iterations: int

    @property
    def width(self) -> float:
        """Width of the final bisection bracket around ``tau_hat``."""
        return (self.interval[1] - self.interval[0]) / 2**self.iterations


def _stack(obs: Sequence[ObservationRecord]):
    if len(obs) == 0:
        raise ValueError("need at least one observation")
    width = max(len(o.context_utilities) for o in obs)
    u = np.full((len(obs), width), -np.inf)
    for k, o in enumerate(obs):
        u[k, : len(o.context_utilities)] = o.context_utilities
    chosen = np.array([o.chosen_action for o in obs])
    return u, chosen


def _logsumexp(z: np.ndarray) -> np.ndarray:
    zmax = z.max(1, keepdims=True)
    return (zmax + np.log(np.exp(z - zmax).sum(1, keepdims=True)))[:, 0]


def choice_probabilities(utilities, tau: float) -> np.ndarray:
    """Logit choice model ``softmax(tau * u)``; any finite ``tau`` is allowed."""
    z = tau * np.asarray(utilities, dtype=float)
    z = np.exp(z - z.max())
    return z / z.sum()


def log_likelihood(obs: Sequence[ObservationRecord], tau: float) -> float:
    u, chosen = _stack(obs)
    # padded actions carry -inf utility and must stay -inf at tau == 0
    z = np.where(np.isfinite(u), tau * np.where(np.isfinite(u), u, 0.0), -np.inf)
    picked = z[np.arange(len(chosen)), chosen]
    return float((picked - _logsumexp(z)).sum())


def likelihood_gradient(obs: Sequence[ObservationRecord], tau: float) -> float:
    u, chosen = _stack(obs)
    valid = np.isfinite(u)
    uu = np.where(valid, u, 0.0)
    z = np.where(valid, tau * uu, -np.inf)
    w = np.exp(z - z.max(1, keepdims=True))
    w /= w.sum(1, keepdims=True)
    mean_u = (w * uu).sum(1)
    return float((uu[np.arange(len(chosen)), chosen] - mean_u).sum())


def estimate_temperature(
    obs: Sequence[ObservationRecord],
    tau_min: float = 0.0,
    tau_max: float = 10.0,
    iterations: int = 30,
) -> TemperatureEstimate:
    """Bisection on the sign of the log-likelihood gradient."""
    if not tau_min < tau_max:
        raise ValueError(f"empty interval [{tau_min}, {tau_max}]")
    if iterations < 1:
        raise ValueError("need at least one bisection step")
    if len(obs) == 0:
        raise ValueError("need at least one observation")
    lo, hi = float(tau_min), float(tau_max)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if likelihood_gradient(obs, mid) > 0:
            lo = mid
        else:
            hi = mid
    return TemperatureEstimate(0.5 * (lo + hi), (float(tau_min), float(tau_max)), iterations)


def likelihood_curve(obs, tau_min=0.0, tau_max=10.0, points=101):
    taus = np.linspace(tau_min, tau_max, points)
    return taus, np.array([log_likelihood(obs, t) for t in taus])


def cosine_transform(u: float, tau_min: float, tau_max: float) -> float:
    return tau_min + (tau_max - tau_min) * (1.0 + math.cos(math.pi * u)) / 2.0


def sample_temperature(rng: np.random.Generator, tau_min: float = 0.0, tau_max: float = 10.0) -> float:
    """Uniform draw pushed through a cosine; density piles up at both ends."""
    if tau_min > tau_max:
        raise ValueError(f"empty interval [{tau_min}, {tau_max}]")
    return cosine_transform(float(rng.uniform()), tau_min, tau_max)
