"""Train tabular models on 5x5 Tron and compare two agents against weak searchers.

The proxy learns logit play at every temperature, the response model
learns to exploit the proxy, and the AlphaZero-style model learns
near-optimal play only. The Albatross agent estimates each opponent's
temperature online and queries the response model with it.

Takes a few minutes. Run: python demos/tron_exploitation.py
"""

import time

from albatross.engine import BoardConfig, Mode, SnakeEnv
from albatross.harness.agents import AlbatrossAgent, AlphaZeroAgent
from albatross.harness.experiments import exploitability_curve
from albatross.learner import TrainConfig, train_alphazero, train_proxy, train_response

board = BoardConfig(5, 5, Mode.TRON_2P)
env = SnakeEnv(board)
cfg = TrainConfig(episodes=2000, gamma=0.99, tau_step=1.0, le_iters=300, le_tol=1e-6)

t0 = time.time()
proxy = train_proxy(env, cfg, seed=11)
response = train_response(env, cfg, proxy, seed=12)
alphazero = train_alphazero(env, cfg, seed=13)
print(f"trained in {time.time() - t0:.0f}s")

report = exploitability_curve(
    board,
    lambda: AlbatrossAgent(proxy, response, gamma=0.99),
    lambda: AlphaZeroAgent(alphazero, gamma=0.99),
    budgets=[2, 8, 32],
    games=100,
)
print("agent      budget  mean   stderr   n")
for label, budget, mean, se, n in report.rows:
    print(f"{label:<10} {budget:>6}  {mean:+.2f}  {se:.3f}  {n}")
