"""Disorder averages over independent realizations with bootstrap error bars.

Every estimator here evaluates a per-realization function on replica indices
``0 .. k-1`` of one master seed, gathers the values in index order and only
then reduces them, so results do not depend on the thread count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bounds import beta_critical
from .coupled import CoupledDisorder, InterpolationPoint, coupled_enumerate, factorized_r2
from .disorder import StreamTag, effective_couplings
from .sk_core import gibbs_enumerate

__all__ = [
    "THREADS_ENV",
    "N_BOOTSTRAP",
    "NonFiniteValueError",
    "DisorderAverage",
    "QuadratureRule",
    "PairedComparison",
    "IdentityEstimate",
    "IdentityCheck",
    "MonotonicityScan",
    "gauss_legendre",
    "default_threads",
    "replica_values",
    "summarize",
    "bootstrap_std",
    "paired",
    "disorder_mc",
    "variance_direct",
    "variance_via_identity",
    "identity_check",
    "r2_profile",
    "monotonicity_scan",
    "annealed_overlap_mgf",
    "interpolation_gap",
    "derivative_gap",
]

log = logging.getLogger(__name__)

THREADS_ENV = "SKFLUCT_THREADS"
N_BOOTSTRAP = 1000
# spawn-key slot for bootstrap streams; disorder streams use (replica, tag)
_BOOT_KEY = (2**32 - 1, len(StreamTag))


class NonFiniteValueError(ArithmeticError):
    """A per-realization value came out NaN or infinite."""

    def __init__(self, master_seed: int, replica_index: int, value):
        self.master_seed = master_seed
        self.replica_index = replica_index
        self.value = value
        super().__init__(
            f"non-finite value {value!r} at master_seed={master_seed}, "
            f"replica_index={replica_index}, stream_tags={[t.name for t in StreamTag]}"
        )


@dataclass(frozen=True)
class DisorderAverage:
    mean: float
    variance: float
    stderr_mean: float
    stderr_variance: float
    k: int
    seed: int


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on ``[0, 1]`` (weights sum to one)."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class PairedComparison:
    """``lhs - rhs`` for two estimates computed on the same realizations."""

    lhs: float
    rhs: float
    difference: float
    stderr: float

    @property
    def window(self) -> float:
        return 3.0 * self.stderr

    def agrees(self, slack: float = 0.0) -> bool:
        return abs(self.difference) <= self.window + slack

    def at_most(self, slack: float = 0.0) -> bool:
        return self.difference <= self.window + slack


@dataclass(frozen=True)
class IdentityEstimate:
    value: float
    stderr: float
    k: int


@dataclass(frozen=True)
class IdentityCheck:
    direct: DisorderAverage
    identity: IdentityEstimate
    comparison: PairedComparison


@dataclass(frozen=True)
class MonotonicityScan:
    t_grid: tuple
    values: list
    steps: list

    def nondecreasing(self) -> bool:
        return all(s.mean >= -3.0 * s.stderr_mean for s in self.steps)


def gauss_legendre(m: int = 16) -> QuadratureRule:
    if m < 1:
        raise ValueError(f"need at least one node, got {m}")
    x, w = np.polynomial.legendre.leggauss(m)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w)


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1


def replica_values(
    quantity: Callable[[CoupledDisorder], float | np.ndarray],
    n: int,
    k: int,
    master_seed: int,
    threads: int | None = None,
) -> np.ndarray:
    """Evaluate ``quantity`` on replicas ``0..k-1``; rows are in replica order."""
    if k < 1:
        raise ValueError(f"need at least one realization, got k={k}")
    threads = default_threads() if threads is None else max(1, int(threads))

    def one(i: int):
        return np.asarray(quantity(CoupledDisorder.sample(n, master_seed, i)), dtype=np.float64)

    if threads == 1:
        out = [one(i) for i in range(k)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, range(k)))
    values = np.stack(out)
    bad = ~np.isfinite(values.reshape(k, -1)).all(axis=1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteValueError(master_seed, i, values[i])
    return values


def _boot_rng(master_seed: int, salt: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(*_BOOT_KEY, salt))
    return np.random.Generator(np.random.Philox(seq))


def bootstrap_std(statistic, *columns, master_seed: int, n_boot: int = N_BOOTSTRAP, salt: int = 0) -> float:
    """Bootstrap standard deviation of ``statistic(*columns)``.

    All columns are resampled with the same indices, which keeps paired
    estimates paired.
    """
    k = len(columns[0])
    rng = _boot_rng(master_seed, salt)
    stats = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, k, size=k)
        stats[b] = statistic(*(c[idx] for c in columns))
    return float(np.std(stats, ddof=1))


def _unbiased_var(x: np.ndarray) -> float:
    # shifting by a sample value keeps constant columns at exactly zero
    return float(np.var(x - x[0], ddof=1))


def summarize(values, master_seed: int, n_boot: int = N_BOOTSTRAP) -> DisorderAverage:
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d array of per-realization values, got shape {x.shape}")
    k = len(x)
    if k < 2:
        raise ValueError(f"need k >= 2 to report a variance, got k={k}")
    var = _unbiased_var(x)
    return DisorderAverage(
        mean=float(np.mean(x)),
        variance=var,
        stderr_mean=math.sqrt(var / k),
        stderr_variance=bootstrap_std(_unbiased_var, x, master_seed=master_seed, n_boot=n_boot),
        k=k,
        seed=master_seed,
    )


def paired(lhs: np.ndarray, rhs: np.ndarray) -> PairedComparison:
    """Compare two means over the same realizations through per-realization differences."""
    diff = np.asarray(lhs) - np.asarray(rhs)
    k = len(diff)
    return PairedComparison(
        lhs=float(np.mean(lhs)),
        rhs=float(np.mean(rhs)),
        difference=float(np.mean(diff)),
        stderr=float(np.std(diff, ddof=1) / math.sqrt(k)),
    )


def disorder_mc(quantity, n: int, k: int, master_seed: int, threads: int | None = None) -> DisorderAverage:
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    return summarize(replica_values(quantity, n, k, master_seed, threads), master_seed)


def _log_z(beta: float):
    def quantity(cd: CoupledDisorder) -> float:
        return gibbs_enumerate(effective_couplings(cd.g), beta, with_corr=False).log_z

    return quantity


def variance_direct(n: int, beta: float, k: int, master_seed: int, threads: int | None = None) -> DisorderAverage:
    """Sample statistics of ``F_N(beta)``; the ``variance`` field is the estimate of ``Var F_N``."""
    return disorder_mc(_log_z(beta), n, k, master_seed, threads)


def r2_profile(cd: CoupledDisorder, beta: float, t_values: Sequence[float]) -> np.ndarray:
    """Zero-tilt ``<R(sigma, rho)**2>`` at each ``t`` for one realization."""
    return np.array([factorized_r2(cd, beta, t) for t in t_values])


def _identity_values(n, beta, k, rule, master_seed, threads, with_log_z):
    log_z = _log_z(beta)

    def quantity(cd):
        integral = beta * beta * n * rule.integrate(r2_profile(cd, beta, rule.nodes))
        return (integral, log_z(cd)) if with_log_z else integral

    return replica_values(quantity, n, k, master_seed, threads)


def variance_via_identity(
    n: int,
    beta: float,
    k: int,
    rule: QuadratureRule | None = None,
    master_seed: int = 0,
    threads: int | None = None,
) -> IdentityEstimate:
    """``beta**2 n`` times the quadrature of the disorder-averaged ``<R**2>_{t,0}`` over ``t``.

    All nodes are evaluated on the same realizations; the error bar is the
    bootstrap spread of the mean of the per-realization integrals.
    """
    rule = gauss_legendre() if rule is None else rule
    vals = _identity_values(n, beta, k, rule, master_seed, threads, with_log_z=False)
    return IdentityEstimate(
        value=float(np.mean(vals)),
        stderr=bootstrap_std(np.mean, vals, master_seed=master_seed),
        k=k,
    )


def identity_check(
    n: int,
    beta: float,
    k: int,
    rule: QuadratureRule | None = None,
    master_seed: int = 0,
    threads: int | None = None,
) -> IdentityCheck:
    """Direct sample variance of ``F_N`` against the overlap-integral identity.

    Both estimates share the ``g`` disorder of each replica, so the error on
    their difference comes from a joint bootstrap.
    """
    rule = gauss_legendre() if rule is None else rule
    vals = _identity_values(n, beta, k, rule, master_seed, threads, with_log_z=True)
    integrals, log_z = vals[:, 0], vals[:, 1]
    direct = summarize(log_z, master_seed)
    identity = IdentityEstimate(
        float(np.mean(integrals)), bootstrap_std(np.mean, integrals, master_seed=master_seed), k
    )
    diff_std = bootstrap_std(
        lambda f, i: _unbiased_var(f) - np.mean(i), log_z, integrals, master_seed=master_seed, salt=1
    )
    comparison = PairedComparison(direct.variance, identity.value, direct.variance - identity.value, diff_std)
    return IdentityCheck(direct, identity, comparison)


def monotonicity_scan(
    n: int,
    beta: float,
    k: int,
    t_grid: Sequence[float],
    master_seed: int,
    threads: int | None = None,
) -> MonotonicityScan:
    t_grid = tuple(float(t) for t in t_grid)
    if any(b < a for a, b in zip(t_grid, t_grid[1:])) or not all(0 <= t <= 1 for t in t_grid):
        raise ValueError(f"t_grid must be sorted within [0, 1], got {t_grid}")
    vals = replica_values(lambda cd: r2_profile(cd, beta, t_grid), n, k, master_seed, threads)
    values = [summarize(vals[:, j], master_seed) for j in range(len(t_grid))]
    steps = [summarize(vals[:, j + 1] - vals[:, j], master_seed) for j in range(len(t_grid) - 1)]
    return MonotonicityScan(t_grid, values, steps)


def annealed_overlap_mgf(
    n: int,
    x: float,
    k: int,
    master_seed: int,
    beta: float | None = None,
    threads: int | None = None,
) -> DisorderAverage:
    """Disorder average of ``<exp(x n R**2)>`` under the decoupled ``t = 0`` pair measure.

    Evaluated as ``exp(n (phi_hat(0, x / beta**2) - phi_hat(0, 0)))``, i.e. by
    tilting the pair enumeration rather than sampling.
    """
    beta = beta_critical() if beta is None else beta

    def quantity(cd):
        if x == 0:
            return 1.0
        tilted = coupled_enumerate(cd, InterpolationPoint(beta, 0.0, x / beta**2)).phi_hat
        flat = coupled_enumerate(cd, InterpolationPoint(beta, 0.0, 0.0)).phi_hat
        return math.exp(n * (tilted - flat))

    return disorder_mc(quantity, n, k, master_seed, threads)


def interpolation_gap(
    n: int,
    beta: float,
    points: Sequence[tuple[float, float]],
    k: int,
    master_seed: int,
    threads: int | None = None,
) -> list[PairedComparison]:
    """``E phi(t, lam)`` against ``E phi(0, lam + t)`` for each ``(t, lam)``, paired per realization."""

    def quantity(cd):
        row = []
        for t, lam in points:
            row.append(coupled_enumerate(cd, InterpolationPoint(beta, t, lam)).phi_hat)
            row.append(coupled_enumerate(cd, InterpolationPoint(beta, 0.0, lam + t)).phi_hat)
        return row

    vals = replica_values(quantity, n, k, master_seed, threads)
    return [paired(vals[:, 2 * i], vals[:, 2 * i + 1]) for i in range(len(points))]


def _phi_t_derivative(cd, beta, t, lam, h):
    if not h <= t <= 1 - h:
        raise ValueError(f"central difference needs t in [h, 1-h], got t={t}, h={h}")
    up = coupled_enumerate(cd, InterpolationPoint(beta, t + h, lam)).phi_hat
    down = coupled_enumerate(cd, InterpolationPoint(beta, t - h, lam)).phi_hat
    return (up - down) / (2.0 * h)


def derivative_gap(
    n: int,
    beta: float,
    points: Sequence[tuple[float, float]],
    k: int,
    master_seed: int,
    h: float = 1e-4,
    richardson: bool = False,
    threads: int | None = None,
) -> list[PairedComparison]:
    """Finite-difference ``t``-derivative of ``phi_hat`` against ``beta**2 (r2 - r2_cross)``.

    The two sides agree only after the disorder average, so they are compared
    as paired means. With ``richardson`` the difference quotient is
    extrapolated from steps ``h`` and ``h/2``.
    """

    def quantity(cd):
        row = []
        for t, lam in points:
            fd = _phi_t_derivative(cd, beta, t, lam, h)
            if richardson:
                fd = (4.0 * _phi_t_derivative(cd, beta, t, lam, h / 2) - fd) / 3.0
            mid = coupled_enumerate(cd, InterpolationPoint(beta, t, lam))
            row.extend((fd, beta * beta * (mid.r2 - mid.r2_cross)))
        return row

    vals = replica_values(quantity, n, k, master_seed, threads)
    return [paired(vals[:, 2 * i], vals[:, 2 * i + 1]) for i in range(len(points))]
