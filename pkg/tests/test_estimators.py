import math

import numpy as np
import pytest

from skfluct import estimators
from skfluct.bounds import beta_critical, rademacher_mgf_exact
from skfluct.disorder import effective_couplings
from skfluct.estimators import (
    NonFiniteValueError,
    annealed_overlap_mgf,
    derivative_gap,
    disorder_mc,
    gauss_legendre,
    interpolation_gap,
    monotonicity_scan,
    replica_values,
    variance_direct,
    variance_via_identity,
)
from skfluct.sk_core import SpinConfiguration, gibbs_enumerate, hamiltonian

BC = beta_critical()
SEED = 4242


def _energy_at_fixed_state(cd):
    return hamiltonian(effective_couplings(cd.g), SpinConfiguration(0b10110010, cd.n))


# -- quadrature -------------------------------------------------------------

@pytest.mark.parametrize("m", range(8))
def test_gauss_legendre_exact_on_monomials(m):
    rule = gauss_legendre(4)
    assert rule.integrate(rule.nodes**m) == pytest.approx(1 / (m + 1), abs=1e-12)


def test_gauss_legendre_default_shape():
    rule = gauss_legendre()
    assert len(rule.nodes) == 16
    assert np.all((rule.nodes > 0) & (rule.nodes < 1))
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert rule.integrate(rule.nodes**31) == pytest.approx(1 / 32, abs=1e-12)


# -- Monte Carlo plumbing ------------------------------------------------------

def test_constant_quantity():
    avg = disorder_mc(lambda cd: 2.5, 3, 10, SEED)
    assert avg.mean == 2.5
    assert avg.variance == 0.0
    assert avg.stderr_mean == 0.0
    assert avg.k == 10 and avg.seed == SEED


def test_free_energy_at_infinite_temperature():
    avg = variance_direct(6, 0.0, 20, SEED)
    assert avg.mean == pytest.approx(6 * math.log(2), rel=1e-15)
    assert avg.variance == 0.0


def test_needs_two_samples():
    with pytest.raises(ValueError):
        disorder_mc(lambda cd: 1.0, 3, 1, SEED)


def test_non_finite_value_reports_seed():
    def quantity(cd):
        return float("nan") if cd.g.seed.replica_index == 3 else 1.0

    with pytest.raises(NonFiniteValueError) as info:
        disorder_mc(quantity, 2, 5, SEED)
    assert info.value.replica_index == 3
    assert info.value.master_seed == SEED
    assert "replica_index=3" in str(info.value)


def test_energy_variance_equals_n():
    # E H(s)^2 = n R(s, s)^2 = n
    avg = disorder_mc(_energy_at_fixed_state, 8, 10_000, SEED)
    assert abs(avg.mean) <= 4 * avg.stderr_mean
    assert avg.variance == pytest.approx(8.0, rel=0.10)


def test_thread_count_does_not_change_values():
    f = lambda cd: [gibbs_enumerate(effective_couplings(cd.g), 0.9).log_z, cd.g.g[0, 1]]
    one = replica_values(f, 7, 40, SEED, threads=1)
    many = replica_values(f, 7, 40, SEED, threads=4)
    assert one.tobytes() == many.tobytes()


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv(estimators.THREADS_ENV, "3")
    assert estimators.default_threads() == 3
    monkeypatch.setenv(estimators.THREADS_ENV, "lots")
    assert estimators.default_threads() == 1


def test_bootstrap_is_seeded():
    a = disorder_mc(_energy_at_fixed_state, 8, 200, SEED)
    b = disorder_mc(_energy_at_fixed_state, 8, 200, SEED)
    assert a == b


def test_bootstrap_error_shrinks_like_inverse_sqrt_k():
    errs = [disorder_mc(_energy_at_fixed_state, 8, k, SEED).stderr_variance for k in (500, 2000, 8000)]
    for small, large in zip(errs, errs[1:]):
        assert small / large == pytest.approx(2.0, rel=0.30)


# -- variance estimators -----------------------------------------------------

def test_single_spin_variance():
    beta = 0.8
    avg = variance_direct(1, beta, 10_000, SEED)
    assert avg.variance == pytest.approx(beta**2, rel=0.10)


def test_identity_small_beta_limit():
    beta = 1e-6
    est = variance_via_identity(5, beta, 4, gauss_legendre(16), SEED)
    assert est.value == pytest.approx(beta**2, abs=1e-9)


def test_identity_agrees_with_direct_high_temperature():
    chk = estimators.identity_check(8, 0.3, 2000, gauss_legendre(16), SEED)
    assert chk.comparison.agrees(), chk


def test_identity_estimate_matches_check():
    a = variance_via_identity(6, BC, 50, gauss_legendre(8), SEED)
    b = estimators.identity_check(6, BC, 50, gauss_legendre(8), SEED)
    assert a.value == b.identity.value


# -- overlap scans ----------------------------------------------------------

def test_monotonicity_at_zero_beta():
    scan = monotonicity_scan(6, 0.0, 5, [0.0, 0.5, 1.0], SEED)
    for v in scan.values:
        assert v.mean == pytest.approx(1 / 6, abs=1e-15)
    for s in scan.steps:
        assert s.mean == pytest.approx(0.0, abs=1e-15)


def test_monotonicity_endpoint_is_replica_overlap():
    k = 200
    scan = monotonicity_scan(8, BC, k, [0.5, 1.0], SEED)
    direct = disorder_mc(
        lambda cd: gibbs_enumerate(effective_couplings(cd.g), BC).two_replica_r2(), 8, k, SEED
    )
    assert abs(scan.values[-1].mean - direct.mean) <= 3 * direct.stderr_mean


def test_monotonicity_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        monotonicity_scan(4, BC, 3, [0.5, 0.2], SEED)


def test_annealed_mgf_trivial():
    assert annealed_overlap_mgf(4, 0.0, 5, SEED).mean == 1.0
    avg = annealed_overlap_mgf(1, 0.37, 5, SEED)
    assert avg.mean == pytest.approx(math.exp(0.37), rel=1e-12)
    assert avg.variance == pytest.approx(0.0, abs=1e-20)


def test_annealed_mgf_close_to_binomial():
    avg = annealed_overlap_mgf(5, 0.3, 1000, SEED)
    assert abs(avg.mean - rademacher_mgf_exact(5, 0.3)) <= 3 * avg.stderr_mean


def test_interpolation_gap_t_zero_is_identity():
    comps = interpolation_gap(5, BC, [(0.0, 0.3)], 10, SEED)
    assert comps[0].difference == 0.0


def test_interpolation_gap_is_an_inequality():
    comps = interpolation_gap(6, BC, [(0.5, 0.0), (0.3, 0.2)], 300, SEED)
    for c in comps:
        assert c.at_most()
        assert c.difference < 0


def test_derivative_gap_near_zero_beta():
    comps = derivative_gap(4, 1e-8, [(0.5, 0.0), (0.5, 0.1)], 5, SEED)
    for c in comps:
        assert abs(c.lhs) < 1e-6 and abs(c.rhs) < 1e-6


def test_derivative_gap_richardson_runs():
    plain = derivative_gap(4, BC, [(0.5, 0.1)], 200, SEED)[0]
    rich = derivative_gap(4, BC, [(0.5, 0.1)], 200, SEED, richardson=True)[0]
    assert rich.lhs == pytest.approx(plain.lhs, abs=1e-6)
    assert rich.agrees() and plain.agrees()
