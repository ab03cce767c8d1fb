"""Compiled inner loop for two-player stochastic fictitious play.

Tree search solves thousands of small bimatrix games, where the per-call
overhead of numpy dominates. The kernel mirrors ``solvers.solve_le``
step for step.
"""

import math

import numpy as np
from numba import njit

KIND_CODES = {"msa": 0, "polyak": 1, "nagurney": 2, "sra": 3}


@njit(cache=True)
def _softmax(u, tau, out):
    m = u.max()
    s = 0.0
    for i in range(u.shape[0]):
        out[i] = math.exp(tau * (u[i] - m))
        s += out[i]
    for i in range(u.shape[0]):
        out[i] /= s


@njit(cache=True)
def _sbr_residual(a, b, p, q, tau, sp, sq):
    _softmax(a @ q, tau, sp)
    _softmax(p @ b, tau, sq)
    r1 = np.abs(sp - p).sum()
    r2 = np.abs(sq - q).sum()
    return max(r1, r2)


@njit(cache=True)
def sfp2(a, b, tau, kind, max_iters, tol, p, q, gamma, big_gamma):
    sp = np.empty_like(p)
    sq = np.empty_like(q)
    res = _sbr_residual(a, b, p, q, tau, sp, sq)
    t = 0
    k = 1
    block_end = 1
    beta = 0.0
    prev = np.inf
    while res > tol and t < max_iters:
        t += 1
        if kind == 0:
            alpha = 1.0 / t
        elif kind == 1:
            alpha = t ** (-2.0 / 3.0)
        elif kind == 2:
            if t > block_end:
                k += 1
                block_end += k
            alpha = 1.0 / k
        else:
            if t == 1:
                beta = 1.0
            elif res >= prev:
                beta += big_gamma
            else:
                beta += gamma
            prev = res
            alpha = 1.0 / beta
        p += alpha * (sp - p)
        q += alpha * (sq - q)
        res = _sbr_residual(a, b, p, q, tau, sp, sq)
    p /= p.sum()
    q /= q.sum()
    return p, q, res, t
