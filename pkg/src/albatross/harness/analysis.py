"""Post-hoc metrics: policy entropy, mutual information, Elo."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

import numpy as np


def _entropy_bits(counts) -> float:
    c = np.asarray(list(counts), dtype=float)
    c = c[c > 0]
    if c.size == 0:
        return 0.0
    p = c / c.sum()
    return float(-(p * np.log2(p)).sum())


def action_entropy(actions: Sequence[int]) -> float:
    return _entropy_bits(Counter(actions).values())


def mutual_information(xs: Sequence[int], ys: Sequence[int]) -> float:
    """I(X; Y) = H(X) + H(Y) - H(X, Y) in bits, from empirical frequencies."""
    if len(xs) != len(ys):
        raise ValueError("action streams differ in length")
    if not xs:
        raise ValueError("empty action streams")
    hx = action_entropy(xs)
    hy = action_entropy(ys)
    hxy = _entropy_bits(Counter(zip(xs, ys)).values())
    return max(0.0, hx + hy - hxy)


def analyze_policies(logs: Iterable[dict], pair=(0, 1)) -> dict:
    """Entropy per player and the mutual information of two players' actions.

    ``logs`` are turn records with a ``joint_action`` list (``None`` for dead
    players). Only turns where both players of ``pair`` acted enter the
    mutual information.
    """
    logs = list(logs)
    if not logs:
        raise ValueError("no turns to analyse")
    n = len(logs[0]["joint_action"])
    streams = {i: [] for i in range(n)}
    xs, ys = [], []
    i, j = pair
    for rec in logs:
        ja = rec["joint_action"]
        for p, a in enumerate(ja):
            if a is not None:
                streams[p].append(int(a))
        if ja[i] is not None and ja[j] is not None:
            xs.append(int(ja[i]))
            ys.append(int(ja[j]))
    return {
        "entropy_bits": {p: action_entropy(s) for p, s in streams.items()},
        "mutual_information_bits": mutual_information(xs, ys) if xs else 0.0,
        "pair": list(pair),
        "turns": len(logs),
    }


def rate_agents(results: Iterable[tuple], k: float = 32.0, initial: float = 1200.0) -> dict:
    """Sequential logistic Elo over ``(a, b, score_a)`` with score in {1, 0.5, 0}."""
    ratings: dict = {}
    for a, b, score in results:
        ra = ratings.setdefault(a, initial)
        rb = ratings.setdefault(b, initial)
        expected = 1.0 / (1.0 + 10 ** ((rb - ra) / 400.0))
        ratings[a] = ra + k * (score - expected)
        ratings[b] = rb - k * (score - expected)
    return ratings


def fit_slope(xs, ys) -> float:
    """Least-squares slope of ``ys`` against ``xs``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        return 0.0
    return float(np.polyfit(xs, ys, 1)[0])
