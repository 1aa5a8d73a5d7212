"""The interpolated two-replica system.

Replica one sees ``sqrt(t) H + sqrt(1-t) H'`` and replica two sees
``sqrt(t) H + sqrt(1-t) H''``, where ``H, H', H''`` are built from three
independent disorder matrices. The pair measure is additionally tilted by
``lambda * beta**2 * n * R**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .disorder import (
    DisorderRealization,
    EffectiveCouplings,
    SeedSpec,
    StreamTag,
    effective_couplings,
    sample_disorder,
)
from .sk_core import (
    MAX_N,
    SpinConfiguration,
    all_spins,
    gibbs_enumerate,
    hamiltonian,
    overlap_second_moment_product,
)

__all__ = [
    "MAX_N_PAIR",
    "CoupledDisorder",
    "InterpolationPoint",
    "CoupledSummary",
    "coupled_hamiltonians",
    "coupled_enumerate",
    "factorized_r2",
    "shifted_phi",
]

MAX_N_PAIR = 13


@dataclass(frozen=True, eq=False)
class CoupledDisorder:
    g: DisorderRealization
    g_prime: DisorderRealization
    g_double_prime: DisorderRealization

    def __post_init__(self):
        sizes = {self.g.n, self.g_prime.n, self.g_double_prime.n}
        if len(sizes) != 1:
            raise ValueError(f"all three disorders must share n, got {sorted(sizes)}")
        object.__setattr__(self, "_couplings", tuple(
            effective_couplings(d) for d in (self.g, self.g_prime, self.g_double_prime)
        ))

    @property
    def n(self) -> int:
        return self.g.n

    @classmethod
    def sample(cls, n: int, master_seed: int, replica_index: int = 0) -> "CoupledDisorder":
        """Draw the triple for one replica index from three tagged streams."""
        base = SeedSpec(master_seed, replica_index)
        return cls(*(sample_disorder(n, base.with_tag(tag)) for tag in StreamTag))

    def couplings(self, t: float) -> tuple[EffectiveCouplings, EffectiveCouplings]:
        """Effective couplings of the two interpolated Hamiltonians at time ``t``."""
        _check_t(t)
        c, cp, cpp = self._couplings
        a, b = math.sqrt(t), math.sqrt(1.0 - t)
        return c.scaled(a) + cp.scaled(b), c.scaled(a) + cpp.scaled(b)


@dataclass(frozen=True)
class InterpolationPoint:
    beta: float
    t: float
    lam: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        _check_t(self.t)
        if not math.isfinite(self.lam):
            raise ValueError(f"lambda must be finite, got {self.lam}")


@dataclass(frozen=True, eq=False)
class CoupledSummary:
    """Per-realization output of the pair enumeration.

    ``phi_hat`` is ``log Z / n`` before any disorder average; ``r2_cross`` is the
    second moment of the overlap between ``sigma`` of one pair and ``rho`` of an
    independent pair.
    """

    n: int
    point: InterpolationPoint
    phi_hat: float
    corr_sigma: np.ndarray
    corr_rho: np.ndarray
    r2: float
    r2_cross: float


def _check_t(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")


def coupled_hamiltonians(
    cd: CoupledDisorder, t: float, sigma: SpinConfiguration, rho: SpinConfiguration
) -> tuple[float, float]:
    c1, c2 = cd.couplings(t)
    return hamiltonian(c1, sigma), hamiltonian(c2, rho)


def coupled_enumerate(cd: CoupledDisorder, p: InterpolationPoint) -> CoupledSummary:
    n = cd.n
    if not 1 <= n <= MAX_N_PAIR:
        raise ValueError(f"pair enumeration needs 1 <= n <= {MAX_N_PAIR}, got {n}")
    c1, c2 = cd.couplings(p.t)
    e1 = _kernels.energies_by_mask(c1.j, c1.diag_sum)
    e2 = _kernels.energies_by_mask(c2.j, c2.diag_sum)
    coef = p.lam * p.beta**2 / n
    log_z, r2, p1, p2 = _kernels.coupled_gray(e1, e2, n, float(p.beta), float(coef))

    spins = all_spins(n)
    corr_sigma = spins.T @ (p1[:, None] * spins)
    corr_rho = spins.T @ (p2[:, None] * spins)
    np.fill_diagonal(corr_sigma, 1.0)
    np.fill_diagonal(corr_rho, 1.0)
    r2_cross = float(np.sum(corr_sigma * corr_rho)) / (n * n)
    return CoupledSummary(
        n=n,
        point=p,
        phi_hat=float(log_z) / n,
        corr_sigma=corr_sigma,
        corr_rho=corr_rho,
        r2=float(r2),
        r2_cross=r2_cross,
    )


def factorized_r2(cd: CoupledDisorder, beta: float, t: float) -> float:
    """``<R(sigma, rho)**2>`` at zero tilt from two ``2**n`` enumerations.

    Without the tilt the pair measure is a product of the two single-system
    Gibbs measures, so only their correlation matrices are needed.
    """
    if not 1 <= cd.n <= MAX_N:
        raise ValueError(f"system size must be in [1, {MAX_N}], got {cd.n}")
    c1, c2 = cd.couplings(t)
    return overlap_second_moment_product(gibbs_enumerate(c1, beta), gibbs_enumerate(c2, beta))


def shifted_phi(cd: CoupledDisorder, beta: float, t: float, lam: float) -> float:
    """``phi_hat`` evaluated at tilt ``lam - t``."""
    return coupled_enumerate(cd, InterpolationPoint(beta, t, lam - t)).phi_hat
