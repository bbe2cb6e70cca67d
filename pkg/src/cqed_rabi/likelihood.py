"""Log-likelihood of a current record and its maximum over a frequency grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cqed_rabi import _kernels
from cqed_rabi.physics import PhysicalParams, measurement_rates
from cqed_rabi.qubit import _warn_phi2_once
from cqed_rabi.trajectory import CurrentRecord
from cqed_rabi.units import OMEGA_R


class LikelihoodError(FloatingPointError):
    def __init__(self, bin_index: int):
        self.bin_index = bin_index
        super().__init__(f"log-likelihood became non-finite at bin {bin_index}")


@dataclass(frozen=True)
class SearchGrid:
    """Uniform grid of candidate Rabi frequencies (internal units).

    The default is [0.9, 1.1] OMEGA_R in steps of 1e-3 OMEGA_R.
    """

    lo: float = 0.9 * OMEGA_R
    hi: float = 1.1 * OMEGA_R
    step: float = 1e-3 * OMEGA_R

    def omegas(self) -> np.ndarray:
        if not (self.step > 0 and self.hi > self.lo):
            raise ValueError(f"degenerate search grid {self}")
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        if n <= 3:
            raise ValueError(f"search grid needs more than 3 points, got {n}")
        return self.lo + self.step * np.arange(n)


@dataclass
class LikelihoodCurve:
    omegas: np.ndarray
    logls: np.ndarray
    record_ref: tuple[int, int, str]


@dataclass(frozen=True)
class EstimationResult:
    omega_ml: float | None
    status: str  # "ok" | "discarded"
    peak_logl: float
    curvature: float

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _filter_inputs(record: CurrentRecord, params: PhysicalParams):
    rates = measurement_rates(params)
    if rates.gamma_ba != 0.0:
        _warn_phi2_once()
    damp = math.exp(-0.5 * params.gamma_phi * record.tau)
    return rates, math.sqrt(rates.gamma_ci), damp


def log_likelihood_curve(
    record: CurrentRecord, omegas: np.ndarray, params: PhysicalParams
) -> np.ndarray:
    """``L(omega)`` for every candidate in ``omegas``.

    The filter is replayed from the record's initial state with the same
    rates as the generator. The Omega-independent normalisation
    ``-(N/2) ln(2 pi / tau)`` is left out.
    """
    omegas = np.asarray(omegas, dtype=np.float64)
    if np.any(omegas <= 0):
        raise ValueError("candidate frequencies must be positive")
    rates, s, damp = _filter_inputs(record, params)
    b = rates.drive_detuning(params)
    rots = np.array([_kernels.rotation_matrix(w, b, record.tau) for w in omegas]).reshape(-1, 3, 3)
    x0, y0, z0 = record.rho0.bloch()
    out = np.empty(omegas.size)
    err = _kernels.loglik_grid(
        record.currents, record.tau, s, damp, rates.gamma_ba, rots, x0, y0, z0, out
    )
    if err >= 0:
        raise LikelihoodError(int(err))
    return out


def log_likelihood(record: CurrentRecord, omega: float, params: PhysicalParams) -> float:
    return float(log_likelihood_curve(record, np.array([omega]), params)[0])


def refine_peak(omegas: np.ndarray, logls: np.ndarray) -> EstimationResult:
    """Three-point parabolic refinement of the grid maximum.

    A maximum on either end of the grid is reported as ``discarded``.
    """
    omegas = np.asarray(omegas, dtype=np.float64)
    logls = np.asarray(logls, dtype=np.float64)
    if omegas.size <= 3 or omegas.shape != logls.shape:
        raise ValueError("need more than 3 grid points with matching values")
    if np.any(np.diff(omegas) <= 0):
        raise ValueError("grid must be strictly increasing")
    k = int(np.argmax(logls))
    if k == 0 or k == omegas.size - 1:
        return EstimationResult(None, "discarded", float(logls[k]), float("nan"))
    y0, y1, y2 = logls[k - 1], logls[k], logls[k + 1]
    x0, x1, x2 = omegas[k - 1], omegas[k], omegas[k + 1]
    # vertex of the parabola through three (possibly unevenly spaced) points
    d0, d2 = x0 - x1, x2 - x1
    s0, s2 = (y0 - y1) / d0, (y2 - y1) / d2
    curv = 2.0 * (s2 - s0) / (d2 - d0)
    slope = s0 - 0.5 * curv * d0
    if curv < 0:
        shift = -slope / curv
        peak = y1 - 0.5 * slope * slope / curv
    else:
        shift, peak = 0.0, y1
    return EstimationResult(float(x1 + shift), "ok", float(peak), float(curv))


def mle_estimate(
    record: CurrentRecord,
    params: PhysicalParams,
    search: SearchGrid | None = None,
) -> tuple[EstimationResult, LikelihoodCurve]:
    omegas = (search or SearchGrid()).omegas()
    logls = log_likelihood_curve(record, omegas, params)
    curve = LikelihoodCurve(
        omegas, logls, (record.seed, record.trajectory_index, record.params_fingerprint)
    )
    return refine_peak(omegas, logls), curve
