"""Closed-form reference values: critical temperature, overlap bound, Rademacher MGF,
variance envelopes and the arithmetic of the integral split.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "BoundReport",
    "NearCritical",
    "beta_critical",
    "lemma_bound",
    "rademacher_mgf_exact",
    "mgf_bound",
    "integral_split_closed_form",
    "tail_mass",
    "variance_upper_bound",
    "critical_variance_bound",
    "critical_bound_stated",
    "theorem_envelope",
    "near_critical_beta",
    "near_critical_tail",
    "empirical_constant",
]


# beta_c**2 is not exactly 1/2 in binary; domain edges are compared with this slack
_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class BoundReport:
    value_estimated: float
    value_bound: float
    stderr: float = 0.0

    @property
    def window(self) -> float:
        return 3.0 * self.stderr

    @property
    def satisfied(self) -> bool:
        return self.value_estimated <= self.value_bound + self.window


@dataclass(frozen=True)
class NearCritical:
    """``beta**2 = beta_c**2 + d * n**(-alpha)``."""

    alpha: float
    d: float

    def __post_init__(self):
        if self.alpha <= 0 or self.d <= 0:
            raise ValueError(f"alpha and d must be positive, got alpha={self.alpha}, d={self.d}")


def beta_critical() -> float:
    return math.sqrt(0.5)


def lemma_bound(n: int, beta: float, t: float) -> float:
    """Upper bound on the disorder-averaged ``<R(sigma, rho)**2>`` at zero tilt.

    Defined only while ``2 beta**2 t < 1``.
    """
    u = 1.0 - 2.0 * beta * beta * t
    if u <= _EDGE_TOL:
        raise ValueError(f"requires 2*beta^2*t < 1, got {1 - u}")
    return 2.0 / (n * u) * math.log(2.0 / u)


def rademacher_mgf_exact(n: int, x: float) -> float:
    """``E exp(x S**2 / n)`` for ``S`` a sum of ``n`` Rademacher signs, via the binomial law."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x}")
    k = np.arange(n + 1)
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    terms = log_binom - n * math.log(2.0) + x * (n - 2 * k) ** 2 / n
    return float(np.exp(logsumexp(terms)))


def mgf_bound(x: float) -> float:
    if not 0.0 <= x < 0.5:
        raise ValueError(f"x must lie in [0, 1/2), got {x}")
    return 1.0 / math.sqrt(1.0 - 2.0 * x)


def _check_split(beta: float, delta: float) -> None:
    edge = 1.0 / (2.0 * beta * beta)
    if not edge <= 1.0 + _EDGE_TOL:
        raise ValueError(f"requires 1/(2 beta^2) <= 1, got {edge}")
    if not 0.0 < delta < edge:
        raise ValueError(f"delta must lie in (0, {edge}), got {delta}")


def integral_split_closed_form(n: int, beta: float, delta: float) -> float:
    """Exact integral of :func:`lemma_bound` over ``[0, 1/(2 beta**2) - delta]``."""
    _check_split(beta, delta)
    return (math.log(beta * beta * delta) ** 2 - math.log(2.0) ** 2) / (2.0 * n * beta * beta)


def tail_mass(beta: float, delta: float) -> float:
    """Length of ``[1/(2 beta**2) - delta, 1]``; bounds the integral of ``R**2 <= 1`` there."""
    _check_split(beta, delta)
    return 1.0 - 1.0 / (2.0 * beta * beta) + delta


def variance_upper_bound(n: int, beta: float, delta: float, *, relaxed: bool = True) -> float:
    """Variance bound assembled from the split integral and the tail.

    ``relaxed=False`` keeps the exact antiderivative; ``relaxed=True`` applies
    the two relaxations used downstream (drop the ``-(log 2)**2`` term, then
    ``log(ab)**2 <= 2 log(a)**2 + 2 log(b)**2``).
    """
    b2 = beta * beta
    if relaxed:
        _check_split(beta, delta)
        head = (math.log(delta) ** 2 + 4.0 * math.log(beta) ** 2) / b2
    else:
        head = n * integral_split_closed_form(n, beta, delta)
    return b2 * (head + tail_mass(beta, delta) * n)


def critical_variance_bound(n: int) -> float:
    """Relaxed bound at the critical temperature with ``delta = 1/n``."""
    if n < 2:
        raise ValueError(f"delta = 1/n must be < 1, need n >= 2, got {n}")
    return variance_upper_bound(n, beta_critical(), 1.0 / n)


def critical_bound_stated(n: int) -> float:
    """Simplified critical bound ``(log n)**2 + 4 (log 2)**2 + 1/2``."""
    return math.log(n) ** 2 + 4.0 * math.log(2.0) ** 2 + 0.5


def theorem_envelope(n: int, regime: str | NearCritical = "critical", C: float = 1.0) -> float:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    logsq = math.log(n) ** 2
    if regime == "critical":
        return C * (logsq + 1.0)
    if isinstance(regime, NearCritical):
        return C * (logsq + n ** (1.0 - regime.alpha))
    raise ValueError(f"unknown regime {regime!r}")


def near_critical_beta(n: int, alpha: float, d: float) -> float:
    NearCritical(alpha, d)
    return math.sqrt(0.5 + d * n ** (-alpha))


def near_critical_tail(n: int, alpha: float, d: float) -> tuple[float, float, float]:
    """The tail length with ``delta = d n**(-alpha)``, three ways.

    Returns ``(direct, rewritten, cap)`` where ``direct`` is
    ``1 - 1/(2 beta**2) + delta``, ``rewritten`` is
    ``2 d n**-a / (1 + 2 d n**-a) + d n**-a`` and ``cap`` is ``3 d n**-a``.
    """
    eps = d * n ** (-alpha)
    beta = near_critical_beta(n, alpha, d)
    direct = 1.0 - 1.0 / (2.0 * beta * beta) + eps
    rewritten = 2.0 * eps / (1.0 + 2.0 * eps) + eps
    return direct, rewritten, 3.0 * eps


def empirical_constant(ns, variances, regime: str | NearCritical = "critical") -> float:
    """Smallest ``C`` with ``Var <= C * envelope(n)`` over the supplied points."""
    return max(v / theorem_envelope(n, regime) for n, v in zip(ns, variances))
