"""Monte Carlo experiments: estimator spread, strength sweeps, time scaling,
Fisher information.

Every result is a pure function of its arguments and ``base_seed``. Trajectory
``k`` of an ensemble always uses stream ``(seed, k)``, and per-trajectory
results are collected in index order, so the worker count never changes the
output.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from cqed_rabi.likelihood import SearchGrid, log_likelihood_curve, mle_estimate
from cqed_rabi.physics import PhysicalParams, measurement_rates, strength_to_params
from cqed_rabi.rng import derive_seed
from cqed_rabi.trajectory import TrajectoryConfig, simulate_trajectory


class EnsembleError(RuntimeError):
    """No usable estimates came out of an ensemble."""


@dataclass(frozen=True)
class RunSettings:
    """Numerical knobs shared by all experiments (times in tau_R)."""

    dt: float = 1e-5
    tau: float = 1e-3
    search: SearchGrid = field(default_factory=SearchGrid)
    workers: int = 1


def _map_indices(fn: Callable[[int], object], n: int, workers: int) -> list:
    if workers <= 1 or n <= 1:
        return [fn(k) for k in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def default_workers() -> int:
    return os.cpu_count() or 1


# ---------------------------------------------------------------- ensembles


@dataclass
class EstimationEnsemble:
    per_trajectory: np.ndarray  # omega_ml per index, nan where discarded
    config: dict

    @property
    def estimates(self) -> np.ndarray:
        return self.per_trajectory[np.isfinite(self.per_trajectory)]

    @property
    def n_discarded(self) -> int:
        return int(np.count_nonzero(~np.isfinite(self.per_trajectory)))

    @property
    def m(self) -> int:
        return self.per_trajectory.size


def run_ensemble(
    params: PhysicalParams,
    total_time: float,
    m: int,
    base_seed: int,
    settings: RunSettings = RunSettings(),
) -> EstimationEnsemble:
    """Simulate ``m`` trajectories (indices 0..m-1) and estimate Omega from each."""
    if m < 2:
        raise ValueError("an ensemble needs M >= 2")
    cfg = TrajectoryConfig(dt=settings.dt, tau=settings.tau, total_time=total_time, seed=base_seed)

    def one(k: int) -> float:
        rec = simulate_trajectory(params, cfg.with_index(k))
        res, _ = mle_estimate(rec, params, settings.search)
        return res.omega_ml if res.ok else math.nan

    est = np.array(_map_indices(one, m, settings.workers), dtype=np.float64)
    rates = measurement_rates(params)
    ens = EstimationEnsemble(
        est,
        {
            "gamma_m": rates.gamma_m,
            "gamma_phi": params.gamma_phi,
            "T": total_time,
            "M": m,
            "seed": base_seed,
            "dt": settings.dt,
            "tau": settings.tau,
            "degenerate": rates.gamma_ci == 0.0,
        },
    )
    if ens.estimates.size == 0:
        raise EnsembleError(f"all {m} estimates discarded (gamma_m={rates.gamma_m:g}, T={total_time:g})")
    return ens


def rms_variance(estimates: EstimationEnsemble | Sequence[float]) -> float:
    """Population RMS spread of the successful estimates."""
    x = estimates.estimates if isinstance(estimates, EstimationEnsemble) else np.asarray(estimates, float)
    if x.size < 2:
        raise ValueError(f"need at least 2 successful estimates, got {x.size}")
    return float(np.sqrt(np.mean((x - x.mean()) ** 2)))


# ---------------------------------------------------------------- sweeps


@dataclass
class SweepPoint:
    gamma_m: float
    total_time: float
    seed: int
    m: int
    delta_omega: float = math.nan
    n_discarded: int = 0
    error: str | None = None


def strength_sweep(
    gamma_m_list: Sequence[float],
    total_time: float,
    m: int,
    base_seed: int,
    template: PhysicalParams = PhysicalParams(),
    settings: RunSettings = RunSettings(),
) -> list[SweepPoint]:
    """RMS spread at each measurement strength. Point ``i`` runs with seed
    ``derive_seed(base_seed, i)``; a failing point is recorded, not raised."""
    points = []
    for i, g in enumerate(gamma_m_list):
        seed = derive_seed(base_seed, i)
        pt = SweepPoint(g, total_time, seed, m)
        try:
            ens = run_ensemble(strength_to_params(g, template), total_time, m, seed, settings)
            pt.delta_omega = rms_variance(ens)
            pt.n_discarded = ens.n_discarded
        except (EnsembleError, ValueError, FloatingPointError, RuntimeError) as exc:
            pt.error = str(exc)
            pt.n_discarded = m
        points.append(pt)
    return points


def interior_minimum(points: Sequence[SweepPoint]) -> int | None:
    """Index of the smallest delta_omega if it is not at either end of the sweep."""
    vals = np.array([p.delta_omega for p in points], dtype=float)
    if vals.size < 3 or not np.any(np.isfinite(vals)):
        return None
    k = int(np.nanargmin(vals))
    return k if 0 < k < vals.size - 1 else None


# ---------------------------------------------------------------- scaling


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    stderr: float
    prefactor: float


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> PowerLawFit:
    """Unweighted least squares of ``ln y = ln c + e ln x``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 4:
        raise ValueError(f"a scaling fit needs at least 4 points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    r = stats.linregress(np.log(x), np.log(y))
    return PowerLawFit(float(r.slope), float(r.stderr), float(math.exp(r.intercept)))


@dataclass
class ScalingReport:
    """Precision-vs-time data and its power-law fit.

    For ``kind == "delta_omega"`` the values are RMS spreads and ``exponent`` is
    p in ``delta_omega ~ T^-p``. For ``kind == "fisher"`` the values are Fisher
    informations and ``exponent`` is n in ``F ~ T^n``. The SQL (``c_sql/sqrt(T)``)
    and HL (``c_hl/T``) reference curves are pinned to the precision
    (delta_omega, or 1/sqrt(F)) at the first time.
    """

    kind: str
    gamma_m: float
    gamma_phi: float
    times: np.ndarray
    values: np.ndarray
    exponent: float
    exponent_stderr: float
    c_sql: float
    c_hl: float
    m: int
    seeds: list[int]
    n_discarded: list[int] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def precision(self) -> np.ndarray:
        return self.values if self.kind == "delta_omega" else 1.0 / np.sqrt(self.values)

    def sql_curve(self, times=None) -> np.ndarray:
        t = self.times if times is None else np.asarray(times, float)
        return self.c_sql / np.sqrt(t)

    def hl_curve(self, times=None) -> np.ndarray:
        t = self.times if times is None else np.asarray(times, float)
        return self.c_hl / t


def _anchors(t0: float, precision0: float) -> tuple[float, float]:
    return precision0 * math.sqrt(t0), precision0 * t0


def _check_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, float)
    if t.size < 4:
        raise ValueError(f"need at least 4 measurement times, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("measurement times must be strictly increasing")
    return t


def scaling_study(
    gamma_m: float,
    times: Sequence[float],
    m: int,
    gamma_phi: float,
    base_seed: int,
    template: PhysicalParams = PhysicalParams(),
    settings: RunSettings = RunSettings(),
) -> ScalingReport:
    t = _check_times(times)
    params = strength_to_params(gamma_m, replace(template, gamma_phi=gamma_phi))
    seeds, deltas, disc = [], [], []
    for i, ti in enumerate(t):
        seed = derive_seed(base_seed, i)
        ens = run_ensemble(params, float(ti), m, seed, settings)
        seeds.append(seed)
        deltas.append(rms_variance(ens))
        disc.append(ens.n_discarded)
    deltas = np.array(deltas)
    fit = fit_power_law(t, deltas)
    c_sql, c_hl = _anchors(t[0], deltas[0])
    return ScalingReport(
        "delta_omega", gamma_m, gamma_phi, t, deltas, -fit.exponent, fit.stderr, c_sql, c_hl, m, seeds, disc
    )


# ---------------------------------------------------------------- Fisher information


@dataclass
class FisherResult:
    fisher: float
    score_mean: float
    score_sem: float
    n_excluded: int
    scores: np.ndarray


def fisher_information(
    params: PhysicalParams,
    total_time: float,
    m: int,
    fd_step: float,
    base_seed: int,
    settings: RunSettings = RunSettings(),
) -> FisherResult:
    """Mean squared score at the true Rabi frequency.

    The score of each trajectory is the central difference
    ``(L(W+h) - L(W-h)) / 2h`` at ``W = params.omega_rabi_true``.
    """
    if not fd_step > 0:
        raise ValueError("fd_step must be > 0")
    if m < 100:
        raise ValueError("Fisher information needs M >= 100")
    w = params.omega_rabi_true
    if fd_step >= w:
        raise ValueError("fd_step must be smaller than the Rabi frequency")
    cand = np.array([w - fd_step, w + fd_step])
    cfg = TrajectoryConfig(dt=settings.dt, tau=settings.tau, total_time=total_time, seed=base_seed)

    def one(k: int) -> float:
        rec = simulate_trajectory(params, cfg.with_index(k))
        try:
            lo, hi = log_likelihood_curve(rec, cand, params)
        except FloatingPointError:
            return math.nan
        return (hi - lo) / (2.0 * fd_step)

    scores = np.array(_map_indices(one, m, settings.workers), dtype=np.float64)
    good = scores[np.isfinite(scores)]
    n_bad = m - good.size
    if n_bad > 0.1 * m:
        raise EnsembleError(f"{n_bad} of {m} scores non-finite")
    return FisherResult(
        fisher=float(np.mean(good**2)),
        score_mean=float(good.mean()),
        score_sem=float(good.std(ddof=1) / math.sqrt(good.size)),
        n_excluded=n_bad,
        scores=scores,
    )


def fisher_scaling(
    gamma_m: float,
    times: Sequence[float],
    m: int,
    fd_step: float,
    base_seed: int,
    gamma_phi: float = 0.0,
    template: PhysicalParams = PhysicalParams(),
    settings: RunSettings = RunSettings(),
) -> ScalingReport:
    t = _check_times(times)
    params = strength_to_params(gamma_m, replace(template, gamma_phi=gamma_phi))
    seeds, fis, results = [], [], []
    for i, ti in enumerate(t):
        seed = derive_seed(base_seed, i)
        r = fisher_information(params, float(ti), m, fd_step, seed, settings)
        seeds.append(seed)
        fis.append(r.fisher)
        results.append(r)
    fis = np.array(fis)
    fit = fit_power_law(t, fis)
    c_sql, c_hl = _anchors(t[0], 1.0 / math.sqrt(fis[0]))
    return ScalingReport(
        "fisher", gamma_m, gamma_phi, t, fis, fit.exponent, fit.stderr, c_sql, c_hl, m, seeds,
        [r.n_excluded for r in results], {"results": results},
    )


@dataclass
class CRBComparison:
    times: np.ndarray
    delta_omega: np.ndarray
    fisher: np.ndarray
    ratio: np.ndarray  # delta_omega * sqrt(F)
    exponent_gap: float  # p - n/2
    exponent_gap_stderr: float


def crb_consistency(report_delta: ScalingReport, report_fisher: ScalingReport) -> CRBComparison:
    """Compare the RMS spread with the Cramer-Rao bound at the shared times."""
    if report_delta.kind != "delta_omega" or report_fisher.kind != "fisher":
        raise ValueError("expected a delta_omega report and a fisher report")
    common, i_d, i_f = np.intersect1d(report_delta.times, report_fisher.times, return_indices=True)
    if common.size == 0:
        raise ValueError("the two reports share no measurement time")
    d = report_delta.values[i_d]
    f = report_fisher.values[i_f]
    gap = report_delta.exponent - 0.5 * report_fisher.exponent
    gap_err = math.hypot(report_delta.exponent_stderr, 0.5 * report_fisher.exponent_stderr)
    return CRBComparison(common, d, f, d * np.sqrt(f), gap, gap_err)
