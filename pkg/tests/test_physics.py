import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqed_rabi import OMEGA_R, PhysicalParams, measurement_rates, steady_cavity_fields, strength_to_params

EXAMPLE = PhysicalParams(chi=0.5, kappa=10.0, eps_m=2.0, delta_r=0.0, phi_lo=0.0)


def test_zero_drive_gives_empty_cavity():
    a1, a2 = steady_cavity_fields(replace(EXAMPLE, eps_m=0.0))
    assert a1 == 0 and a2 == 0


def test_steady_fields_example():
    a1, a2 = steady_cavity_fields(EXAMPLE)
    assert a1 == pytest.approx(-2 / (0.5 - 5j), abs=1e-15)
    assert a2 == pytest.approx(-2 / (-0.5 - 5j), abs=1e-15)


def test_zero_coupling_makes_fields_equal():
    a1, a2 = steady_cavity_fields(replace(EXAMPLE, chi=0.0, delta_r=0.3))
    assert a1 == a2
    r = measurement_rates(replace(EXAMPLE, chi=0.0, delta_r=0.3))
    assert r.beta == 0 and r.gamma_m == 0


def test_rates_example_closed_form():
    r = measurement_rates(EXAMPLE)
    # delta_r = 0: beta = 2 eps chi / (chi^2 + kappa^2/4), real
    beta = 2 * 2.0 * 0.5 / (0.25 + 25.0)
    assert r.beta.real == pytest.approx(beta, rel=1e-14)
    assert abs(r.beta.imag) < 1e-15 and r.theta_beta == 0.0
    assert r.gamma_ci == pytest.approx(10 * beta**2, rel=1e-13)
    assert r.gamma_ci == pytest.approx(0.06274, abs=5e-6)
    assert r.gamma_ba == 0.0
    assert r.gamma_d == pytest.approx(r.gamma_m, rel=1e-12)
    # B = 2 chi eps^2 (kappa^2/4 - chi^2) / (chi^2 + kappa^2/4)^2
    assert r.b_stark == pytest.approx(2 * 0.5 * 4 * 24.75 / 25.25**2, rel=1e-13)
    assert r.b_stark == pytest.approx(0.15528, abs=5e-6)


def test_zero_drive_all_rates_zero():
    r = measurement_rates(replace(EXAMPLE, eps_m=0.0))
    assert (r.gamma_ci, r.gamma_ba, r.gamma_d, r.gamma_m, r.b_stark) == (0, 0, 0, 0, 0)


def test_quadrature_without_information():
    r0 = measurement_rates(replace(EXAMPLE, delta_r=1.3))
    r = measurement_rates(replace(EXAMPLE, delta_r=1.3, phi_lo=r0.theta_beta + math.pi / 2))
    assert r.gamma_ci == pytest.approx(0.0, abs=1e-15)
    assert r.gamma_ba == pytest.approx(10 * abs(r.beta) ** 2, rel=1e-12)


params_st = st.builds(
    PhysicalParams,
    chi=st.floats(0.01, 1.0).map(lambda x: x * OMEGA_R),
    kappa=st.floats(1.0, 100.0).map(lambda x: x * OMEGA_R),
    eps_m=st.floats(0.01, 50.0),
    delta_r=st.floats(-5.0, 5.0),
    phi_lo=st.floats(-math.pi, math.pi),
)


@settings(max_examples=300, deadline=None)
@given(params_st)
def test_dephasing_equals_measurement_rate(p):
    r = measurement_rates(p)
    k_b2 = p.kappa * abs(r.beta) ** 2
    assert r.gamma_d == pytest.approx(k_b2, rel=1e-12)
    assert r.gamma_ci + r.gamma_ba == pytest.approx(k_b2, rel=1e-12)
    assert r.gamma_m == r.gamma_ci + r.gamma_ba
    assert min(r.gamma_ci, r.gamma_ba, r.gamma_d) >= 0


@settings(max_examples=50, deadline=None)
@given(params_st)
def test_information_rate_maximal_at_beta_phase(p):
    theta = measurement_rates(p).theta_beta
    grid = np.linspace(-math.pi, math.pi, 721)
    vals = [measurement_rates(replace(p, phi_lo=phi)).gamma_ci for phi in grid]
    best = measurement_rates(replace(p, phi_lo=theta)).gamma_ci
    assert best >= max(vals) * (1 - 1e-12)
    assert best == pytest.approx(measurement_rates(p).gamma_m, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(1.0, 100.0), st.floats(0.01, 50.0))
def test_resonant_readout_is_real(chi, kappa, eps):
    r = measurement_rates(PhysicalParams(chi=chi, kappa=kappa, eps_m=eps))
    assert r.theta_beta == 0.0
    assert abs(r.beta.imag) <= 1e-12 * abs(r.beta)
    d = chi**2 + kappa**2 / 4
    b = 2 * chi * eps**2 * (kappa**2 / 4 - chi**2) / d**2  # vanishes at kappa = 2 chi
    assert r.b_stark == pytest.approx(b, rel=1e-12, abs=1e-15 * abs(r.beta) ** 2)


def test_strength_to_params():
    p0 = strength_to_params(0.0, EXAMPLE)
    assert p0.eps_m == 0.0
    target = 0.25 * OMEGA_R
    p = strength_to_params(target, EXAMPLE)
    assert measurement_rates(p).gamma_m == pytest.approx(target, rel=1e-10)
    assert p.eps_m == pytest.approx(2.0 * math.sqrt(target / 0.0627390), rel=1e-5)
    p2 = strength_to_params(2 * target, EXAMPLE)
    assert p2.eps_m == pytest.approx(math.sqrt(2) * p.eps_m, rel=1e-12)


def test_strength_to_params_rejects():
    with pytest.raises(ValueError):
        strength_to_params(-1.0, EXAMPLE)
    with pytest.raises(ValueError):
        strength_to_params(1.0, replace(EXAMPLE, chi=0.0))


def test_params_validation_and_fingerprint():
    with pytest.raises(ValueError):
        PhysicalParams(kappa=0.0)
    with pytest.raises(ValueError):
        PhysicalParams(gamma_phi=-1.0)
    a = PhysicalParams(eps_m=1.0)
    assert a.fingerprint() == PhysicalParams(eps_m=1.0).fingerprint()
    assert a.fingerprint() != PhysicalParams(eps_m=1.0 + 1e-15).fingerprint()
