import math
from dataclasses import replace

import numpy as np
import pytest

from cqed_rabi import (
    OMEGA_R,
    DensityMatrix,
    SearchGrid,
    TrajectoryConfig,
    bayesian_update,
    default_params,
    log_likelihood,
    log_likelihood_curve,
    measurement_rates,
    mle_estimate,
    outcome_likelihoods,
    simulate_trajectory,
    unitary_step,
)
from cqed_rabi import likelihood as lk
from cqed_rabi.likelihood import LikelihoodError, refine_peak
from cqed_rabi.trajectory import CurrentRecord


def reference_loglik(record, omega, params):
    """Replay with the scalar reference functions; adds back (N/2) ln(2 pi V)."""
    rates = measurement_rates(params)
    b = rates.drive_detuning(params)
    rho = record.rho0
    total = 0.0
    for cur in record.currents:
        rho, prob = bayesian_update(rho, cur, record.tau, rates, params.gamma_phi)
        rho = unitary_step(rho, omega, b, record.tau)
        total += math.log(prob)
    return total + 0.5 * record.n_bins * math.log(2 * math.pi / record.tau)


def test_two_bin_record_by_hand():
    params = default_params(0.8 * OMEGA_R, gamma_phi=0.2 * OMEGA_R)
    g = measurement_rates(params).gamma_ci
    tau, omega = 0.05, 1.03 * OMEGA_R
    currents = [-2.0, 3.5]
    rec = CurrentRecord(np.array(currents), tau, tau, 0, 0, params.fingerprint())

    # explicit 2x2 matrices
    h = 0.5 * omega * np.array([[0, 1], [1, 0]])
    evals, evecs = np.linalg.eigh(h)
    u = evecs @ np.diag(np.exp(-1j * evals * tau)) @ evecs.conj().T
    rho = np.array([[1, 0], [0, 0]], dtype=complex)
    expected = 0.0
    for cur in currents:
        p1 = math.exp(-((cur + math.sqrt(g)) ** 2) * tau / 2) / math.sqrt(2 * math.pi / tau)
        p2 = math.exp(-((cur - math.sqrt(g)) ** 2) * tau / 2) / math.sqrt(2 * math.pi / tau)
        n = rho[0, 0].real * p1 + rho[1, 1].real * p2
        expected += math.log(n)
        off = rho[0, 1] * math.sqrt(p1 * p2) / n * math.exp(-params.gamma_phi * tau / 2)
        rho = np.array([[rho[0, 0] * p1 / n, off], [np.conj(off), rho[1, 1] * p2 / n]])
        rho = u @ rho @ u.conj().T
    expected += math.log(2 * math.pi / tau)  # the dropped (N/2) ln(2 pi V), N = 2
    assert log_likelihood(rec, omega, params) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("overrides", [{}, {"gamma_phi": 0.25 * OMEGA_R}, {"stark_in_drive": True}])
def test_kernel_matches_reference_replay(overrides):
    params = default_params(0.25 * OMEGA_R, **overrides)
    cfg = TrajectoryConfig(dt=1e-4, tau=1e-3, total_time=0.5, seed=4, trajectory_index=2)
    rec = simulate_trajectory(params, cfg)
    omegas = np.array([0.8, 1.0, 1.17]) * OMEGA_R
    fast = log_likelihood_curve(rec, omegas, params)
    slow = [reference_loglik(rec, w, params) for w in omegas]
    np.testing.assert_allclose(fast, slow, rtol=1e-11)


def test_no_information_gives_flat_likelihood():
    params = default_params(0.0)
    rec = simulate_trajectory(params, TrajectoryConfig(dt=1e-4, total_time=20.0, seed=2))
    curve = log_likelihood_curve(rec, SearchGrid().omegas(), params)
    assert np.ptp(curve) < 1e-9


def test_deterministic(params_opt):
    rec = simulate_trajectory(params_opt, TrajectoryConfig(dt=1e-4, total_time=10.0, seed=2))
    assert log_likelihood(rec, OMEGA_R, params_opt) == log_likelihood(rec, OMEGA_R, params_opt)


def test_parabola_refinement_is_exact():
    grid = np.arange(0.8, 1.2 + 1e-9, 1e-2)
    res = refine_peak(grid, -((grid - 0.97) ** 2))
    assert res.ok
    assert res.omega_ml == pytest.approx(0.97, abs=1e-12)
    assert res.peak_logl == pytest.approx(0.0, abs=1e-12)
    assert res.curvature == pytest.approx(-2.0, rel=1e-9)
    uneven = np.array([0.0, 0.1, 0.25, 0.3, 0.7, 1.0])
    res = refine_peak(uneven, -3 * (uneven - 0.27) ** 2 + 5)
    assert res.omega_ml == pytest.approx(0.27, abs=1e-12)


def test_boundary_maximum_is_discarded():
    grid = np.linspace(0.9, 1.1, 21)
    res = refine_peak(grid, grid)
    assert res.status == "discarded" and res.omega_ml is None
    res = refine_peak(grid, -grid)
    assert not res.ok


def test_grid_validation():
    with pytest.raises(ValueError):
        SearchGrid(1.0, 1.002, 1e-3).omegas()
    with pytest.raises(ValueError):
        SearchGrid(1.0, 0.5, 1e-3).omegas()
    with pytest.raises(ValueError):
        refine_peak(np.array([1.0, 0.9, 1.1, 1.2]), np.zeros(4))
    g = SearchGrid().omegas()
    assert g.size == 201 and g[0] == pytest.approx(0.9 * OMEGA_R) and g[-1] == pytest.approx(1.1 * OMEGA_R)


def test_nonfinite_accumulation_reports_bin(params_opt, monkeypatch):
    rec = CurrentRecord(np.zeros(4), 1e-3, 1e-4, 0, 0, "x")
    monkeypatch.setattr(lk._kernels, "loglik_grid", lambda *a: 3)
    with pytest.raises(LikelihoodError) as err:
        log_likelihood(rec, OMEGA_R, params_opt)
    assert err.value.bin_index == 3


def test_single_record_estimate(params_opt):
    rec = simulate_trajectory(params_opt, TrajectoryConfig(dt=1e-4, total_time=100.0, seed=1))
    res, curve = mle_estimate(rec, params_opt)
    assert res.ok
    assert abs(res.omega_ml / OMEGA_R - 1.0) < 0.05
    assert res.curvature < 0
    assert curve.record_ref == (1, 0, params_opt.fingerprint())


def test_bin_width_does_not_move_the_maximum(params_opt):
    cfg = TrajectoryConfig(dt=1e-4, tau=5e-4, total_time=100.0, seed=5, trajectory_index=3)
    fine = simulate_trajectory(params_opt, cfg)
    a, _ = mle_estimate(fine, params_opt)
    b, _ = mle_estimate(fine.coarsen(2), params_opt)
    assert abs(a.omega_ml - b.omega_ml) < 1e-3 * OMEGA_R


def test_halving_dt_does_not_move_the_maximum(params_opt):
    cfg = TrajectoryConfig(dt=5e-5, tau=1e-3, total_time=100.0, seed=5, trajectory_index=2)
    fine = simulate_trajectory(params_opt, cfg)
    coarse = simulate_trajectory(params_opt, replace(cfg, dt=1e-4), noise_substeps=2)
    a, _ = mle_estimate(fine, params_opt)
    b, _ = mle_estimate(coarse, params_opt)
    assert abs(a.omega_ml - b.omega_ml) < 1e-3 * OMEGA_R
