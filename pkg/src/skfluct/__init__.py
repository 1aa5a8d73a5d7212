"""Exact-enumeration laboratory for free-energy fluctuations of the SK spin glass."""

from .bounds import BoundReport, beta_critical
from .coupled import CoupledDisorder, CoupledSummary, InterpolationPoint, coupled_enumerate, factorized_r2
from .disorder import DisorderRealization, EffectiveCouplings, SeedSpec, StreamTag, effective_couplings, sample_disorder
from .estimators import DisorderAverage, disorder_mc, gauss_legendre, identity_check, variance_direct, variance_via_identity
from .sk_core import GibbsSummary, SpinConfiguration, gibbs_enumerate, hamiltonian, overlap

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "CoupledDisorder",
    "CoupledSummary",
    "DisorderAverage",
    "DisorderRealization",
    "EffectiveCouplings",
    "GibbsSummary",
    "InterpolationPoint",
    "SeedSpec",
    "SpinConfiguration",
    "StreamTag",
    "beta_critical",
    "coupled_enumerate",
    "disorder_mc",
    "effective_couplings",
    "factorized_r2",
    "gauss_legendre",
    "gibbs_enumerate",
    "hamiltonian",
    "identity_check",
    "overlap",
    "sample_disorder",
    "variance_direct",
    "variance_via_identity",
]
