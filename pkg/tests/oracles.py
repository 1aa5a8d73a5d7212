"""Brute-force reference computations that share no code path with the kernels."""

import itertools
import math

import numpy as np
from scipy.special import logsumexp


def spins_table(n):
    """All configurations, row index = mask (bit i set -> spin i = +1)."""
    masks = np.arange(2**n)[:, None]
    return np.where((masks >> np.arange(n)) & 1, 1.0, -1.0)


def double_sum_energy(g, s):
    n = len(s)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += g[i][j] * s[i] * s[j]
    return total / math.sqrt(n)


def energies(g):
    s = spins_table(len(g))
    return np.einsum("ki,ij,kj->k", s, g, s) / math.sqrt(len(g))


def single_system(g, beta):
    """(log_z, corr, mean_energy) by materialising every state."""
    s = spins_table(len(g))
    e = energies(g)
    log_z = logsumexp(beta * e)
    w = np.exp(beta * e - log_z)
    return log_z, s.T @ (w[:, None] * s), float(w @ e)


def interpolated(g, gp, t):
    return math.sqrt(t) * np.asarray(g) + math.sqrt(1 - t) * np.asarray(gp)


def pair_system(g1, g2, beta, lam):
    """Pair measure with overlap tilt on the full 4**n grid.

    Returns (log_z, r2, r2_cross, weights) where weights[a, b] is the
    probability of (sigma=a, rho=b).
    """
    n = len(g1)
    s = spins_table(n)
    e1, e2 = energies(g1), energies(g2)
    overlap = (s @ s.T) / n
    expo = beta * (e1[:, None] + e2[None, :]) + lam * beta**2 * n * overlap**2
    log_z = logsumexp(expo)
    w = np.exp(expo - log_z)
    r2 = float(np.sum(w * overlap**2))
    p_sigma, p_rho = w.sum(axis=1), w.sum(axis=0)
    r2_cross = float(p_sigma @ overlap**2 @ p_rho)
    return log_z, r2, r2_cross, w


def four_replica_cross(w, n):
    """<R(sigma1, rho2)^2> by the full 16**n sum over two independent pairs."""
    s = spins_table(n)
    r2 = ((s @ s.T) / n) ** 2
    return float((w[:, :, None, None] * w[None, None, :, :] * r2[:, None, None, :]).sum())


def rademacher_mgf_by_enumeration(n, x):
    total = 0.0
    for signs in itertools.product((-1, 1), repeat=n):
        total += math.exp(x * sum(signs) ** 2 / n)
    return total / 2**n
