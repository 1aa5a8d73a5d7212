"""Exact single-system SK quantities by Gray-code enumeration of all ``2**n`` states."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .disorder import EffectiveCouplings

__all__ = [
    "MAX_N",
    "SpinConfiguration",
    "GibbsSummary",
    "all_spins",
    "hamiltonian",
    "gibbs_enumerate",
    "overlap",
    "overlap_second_moment_product",
]

MAX_N = 30


@dataclass(frozen=True)
class SpinConfiguration:
    """A point of ``{-1, +1}**n`` stored as a bit mask (bit set means +1)."""

    bits: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError(f"bits {self.bits} out of range for n={self.n}")

    @classmethod
    def from_spins(cls, spins) -> "SpinConfiguration":
        s = np.asarray(spins)
        if not np.all(np.abs(s) == 1):
            raise ValueError("spins must be +1 or -1")
        bits = sum(1 << i for i, v in enumerate(s) if v > 0)
        return cls(int(bits), len(s))

    @property
    def spins(self) -> np.ndarray:
        return np.where((self.bits >> np.arange(self.n)) & 1, 1.0, -1.0)

    def flipped(self) -> "SpinConfiguration":
        return SpinConfiguration(self.bits ^ ((1 << self.n) - 1), self.n)


@dataclass(frozen=True, eq=False)
class GibbsSummary:
    """Result of one enumeration: ``log_z`` is the free energy ``F_N(beta)`` of the realization."""

    n: int
    beta: float
    log_z: float
    corr: np.ndarray
    mean_energy: float

    def two_replica_r2(self) -> float:
        """``<R(s1, s2)**2>`` for two independent replicas of this same system."""
        return overlap_second_moment_product(self, self)


@lru_cache(maxsize=32)
def _all_spins_cached(n: int) -> np.ndarray:
    masks = np.arange(1 << n)[:, None]
    out = np.where((masks >> np.arange(n)) & 1, 1.0, -1.0)
    out.setflags(write=False)
    return out


def all_spins(n: int) -> np.ndarray:
    """All ``2**n`` configurations as a ``(2**n, n)`` array of ±1, row index = mask."""
    if not 1 <= n <= 20:
        raise ValueError(f"materialising all states needs 1 <= n <= 20, got {n}")
    return _all_spins_cached(n)


def _check_n(n: int, cap: int = MAX_N) -> None:
    if not 1 <= n <= cap:
        raise ValueError(f"system size must be in [1, {cap}] for exact enumeration, got {n}")


def hamiltonian(c: EffectiveCouplings, sigma: SpinConfiguration) -> float:
    if c.n != sigma.n:
        raise ValueError(f"size mismatch: couplings n={c.n}, configuration n={sigma.n}")
    s = sigma.spins
    # j has zero diagonal and is symmetric, so s.j.s/2 is the i<j sum
    return (c.diag_sum + 0.5 * float(s @ c.j @ s)) / math.sqrt(c.n)


def gibbs_enumerate(c: EffectiveCouplings, beta: float, *, with_corr: bool = True) -> GibbsSummary:
    """Free energy, correlation matrix and mean energy at inverse temperature ``beta``.

    With ``with_corr=False`` the ``O(n**2)`` per-state correlation update is
    skipped and ``corr`` is returned as ``None``; use it when only ``log_z`` is
    needed.
    """
    _check_n(c.n)
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    log_z, upper, mean_e = _kernels.gibbs_gray(c.j, c.diag_sum, float(beta), with_corr)
    corr = None
    if with_corr:
        corr = np.eye(c.n)
        iu = np.triu_indices(c.n, k=1)
        corr[iu] = upper
        corr[(iu[1], iu[0])] = upper
    return GibbsSummary(c.n, float(beta), float(log_z), corr, float(mean_e))


def overlap(sigma: SpinConfiguration, rho: SpinConfiguration) -> float:
    if sigma.n != rho.n:
        raise ValueError(f"size mismatch: {sigma.n} vs {rho.n}")
    return (sigma.n - 2 * (sigma.bits ^ rho.bits).bit_count()) / sigma.n


def overlap_second_moment_product(a: GibbsSummary, b: GibbsSummary) -> float:
    """``<R(s, r)**2>`` with ``s`` and ``r`` drawn independently from the two measures."""
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n}")
    if a.corr is None or b.corr is None:
        raise ValueError("both summaries need correlation matrices")
    return float(np.sum(a.corr * b.corr)) / (a.n * a.n)
