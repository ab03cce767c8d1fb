"""Nash, logit, Stackelberg and response equilibria on one small zero-sum game.

Run: python demos/equilibria.py
"""

import numpy as np

from albatross.nfg import NormalFormGame
from albatross.solvers import INFINITY, solve_le, solve_nash_2p, solve_qse, solve_sbrle

a = np.array([[-4.0, -7.0], [-6.0, 2.0]])
game = NormalFormGame(np.stack([a, -a]))

(ne,) = solve_nash_2p(game)
print("Nash:", [p.round(4).tolist() for p in ne.joint_policy], "row value", round(ne.values[0], 4))

# tau is an inverse temperature: 0 is uniform play, large values approach Nash
for tau in (0.0, 0.3, 1.0, 3.0, 10.0):
    le = solve_le(game, tau, tol=1e-12)
    print(f"logit tau={tau:>4}:", [p.round(4).tolist() for p in le.joint_policy])

# a leader that knows the follower only smoothly best-responds at tau 0.3
qse = solve_qse(game, 0, 0.3)
print("leader vs tau=0.3 follower:", qse.joint_policy[0].round(4).tolist(), "value", round(qse.values[0], 4))

# exploit a column player who plays its logit policy at tau 0.3
for tau_r in (1.0, 10.0, INFINITY):
    r = solve_sbrle(game, 0, {1: 0.3}, tau_r, tol=1e-12)
    print(f"response tau_r={tau_r}:", r.joint_policy[0].round(4).tolist(), "value", round(r.values[0], 4))
