"""A best-responding agent tracks scripted opponents in a repeated 2x2 game.

The agent starts from the assumption that its opponent is fully rational
and revises the opponent's temperature after every round. Negative
estimates mean the opponent prefers actions that look bad for it.

Run: python demos/repeated_game.py
"""

import numpy as np

from albatross.harness.experiments import SCRIPTS, lock_in, repeated_matrix_scenario
from albatross.nfg import NormalFormGame

game = NormalFormGame(np.array([[[4, 0], [1, 2]], [[4, 1], [0, 2]]], dtype=float))
for script in SCRIPTS:
    log = repeated_matrix_scenario(game, script, steps=8)
    print(f"\n{script}: settles on {lock_in(log)}")
    for r in log:
        print(f"  step {r['step']}: actions ({r['p1_action']}, {r['p2_action']})"
              f"  tau {r['tau_used']:+7.3f} -> {r['tau_estimate']:+7.3f}  utility {r['utility']:g}")
