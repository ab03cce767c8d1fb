"""Recover an opponent's rationality from its choices.

An opponent picks actions from a logit choice over known utilities. The
log-likelihood is concave in the temperature, so bisection on its
gradient finds the maximum-likelihood estimate.

Run: python demos/temperature_estimation.py
"""

import numpy as np

from albatross.rationality import ObservationRecord, estimate_temperature, likelihood_curve
from albatross.nfg import softmax

rng = np.random.default_rng(0)
for true_tau in (0.0, 0.5, 2.0, 5.0):
    obs = []
    for n in range(1, 1001):
        u = rng.uniform(-1, 1, 6)
        obs.append(ObservationRecord(int(rng.choice(6, p=softmax(u, true_tau))), tuple(u)))
    trail = [estimate_temperature(obs[:n], 0, 10, 30).tau_hat for n in (10, 100, 1000)]
    print(f"true {true_tau:>3}: estimates after 10/100/1000 choices", np.round(trail, 3))

taus, ll = likelihood_curve(obs, 0, 10, 11)
print("log-likelihood on a coarse grid:", np.round(ll, 1))
