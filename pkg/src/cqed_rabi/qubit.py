"""Conditional qubit state: single unitary and Bayesian measurement steps.

Basis convention: ``sigma_z |1> = +|1>``, so ``<sigma_z> = rho11 - rho22`` and a
qubit in |1> produces a mean current of ``-sqrt(gamma_ci)``.

These are the reference (scalar, readable) implementations. The trajectory
and likelihood loops use the equivalent Bloch-vector kernels in
``cqed_rabi._kernels``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from cqed_rabi.physics import MeasurementRates


@dataclass(frozen=True)
class DensityMatrix:
    rho11: float
    rho22: float
    rho12: complex

    @classmethod
    def ground(cls) -> "DensityMatrix":
        """The state |1><1|."""
        return cls(1.0, 0.0, 0j)

    @classmethod
    def excited(cls) -> "DensityMatrix":
        return cls(0.0, 1.0, 0j)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "DensityMatrix":
        return cls(0.5 * (1 + z), 0.5 * (1 - z), complex(0.5 * x, -0.5 * y))

    def bloch(self) -> tuple[float, float, float]:
        return 2.0 * self.rho12.real, -2.0 * self.rho12.imag, self.rho11 - self.rho22

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.rho11, self.rho12], [self.rho12.conjugate(), self.rho22]], dtype=complex
        )

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "DensityMatrix":
        return cls(float(m[0, 0].real), float(m[1, 1].real), complex(m[0, 1]))

    @property
    def sigma_z(self) -> float:
        return self.rho11 - self.rho22

    @property
    def purity_gap(self) -> float:
        """``rho11*rho22 - |rho12|^2``; zero for pure states, >= 0 if positive."""
        return self.rho11 * self.rho22 - abs(self.rho12) ** 2

    def check(self, atol: float = 1e-10) -> None:
        if abs(self.rho11 + self.rho22 - 1.0) > atol:
            raise ValueError(f"trace {self.rho11 + self.rho22} != 1")
        if not (-atol <= self.rho11 <= 1 + atol and -atol <= self.rho22 <= 1 + atol):
            raise ValueError(f"populations out of [0, 1]: {self.rho11}, {self.rho22}")
        if self.purity_gap < -atol:
            raise ValueError(f"state not positive: |rho12|^2 exceeds rho11*rho22 by {-self.purity_gap}")


@dataclass(frozen=True)
class StepOutcomeModel:
    """Gaussian outcome model of one coarse-grained current over ``tau``."""

    i_bar_1: float
    i_bar_2: float
    variance: float
    tau: float

    @classmethod
    def build(cls, tau: float, gamma_ci: float) -> "StepOutcomeModel":
        s = math.sqrt(gamma_ci)
        return cls(-s, s, 1.0 / tau, tau)


def unitary_matrix(omega: float, b_stark: float, tau: float) -> np.ndarray:
    """``exp(-i H tau)`` for ``H = (omega/2) sigma_x + (b/2) sigma_z`` in closed form."""
    w = math.hypot(omega, b_stark)
    if w == 0.0:
        return np.eye(2, dtype=complex)
    c = math.cos(0.5 * w * tau)
    s = math.sin(0.5 * w * tau)
    nx, nz = omega / w, b_stark / w
    return np.array(
        [[c - 1j * s * nz, -1j * s * nx], [-1j * s * nx, c + 1j * s * nz]], dtype=complex
    )


def unitary_step(rho: DensityMatrix, omega: float, b_stark: float, tau: float) -> DensityMatrix:
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    u = unitary_matrix(omega, b_stark, tau)
    m = u @ rho.matrix() @ u.conj().T
    out = DensityMatrix.from_matrix(m)
    # hermiticity holds exactly only up to rounding; keep the trace exact
    t = out.rho11 + out.rho22
    return DensityMatrix(out.rho11 / t, out.rho22 / t, out.rho12)


def outcome_likelihoods(i_m: float, tau: float, gamma_ci: float) -> tuple[float, float]:
    """Gaussian densities of current ``i_m`` for the qubit in |1> and |2>."""
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if gamma_ci < 0:
        raise ValueError(f"gamma_ci must be >= 0, got {gamma_ci}")
    model = StepOutcomeModel.build(tau, gamma_ci)
    v = model.variance
    norm = 1.0 / math.sqrt(2.0 * math.pi * v)
    p1 = norm * math.exp(-((i_m - model.i_bar_1) ** 2) / (2.0 * v))
    p2 = norm * math.exp(-((i_m - model.i_bar_2) ** 2) / (2.0 * v))
    return p1, p2


_warned_phi2 = False


def _warn_phi2_once():
    global _warned_phi2
    if not _warned_phi2:
        warnings.warn(
            "gamma_ba != 0: applying the stochastic phase exp(i*gamma_ba*I*tau) literally; "
            "its dimensional convention is unverified",
            RuntimeWarning,
            stacklevel=3,
        )
        _warned_phi2 = True


def bayesian_update(
    rho: DensityMatrix,
    i_m: float,
    tau: float,
    rates: MeasurementRates,
    gamma_phi: float,
) -> tuple[DensityMatrix, float]:
    """Quantum Bayesian update of ``rho`` given the current ``i_m`` over ``tau``.

    Returns the updated state and the probability density of ``i_m``,
    ``N = rho11*P1 + rho22*P2``.

    The ac-Stark phase is left to ``unitary_step``; here only the purity
    factor ``exp(-gamma_phi*tau/2)`` and the no-information phase act on the
    coherence.
    """
    if not math.isfinite(i_m):
        raise ValueError(f"current must be finite, got {i_m}")
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    model = StepOutcomeModel.build(tau, rates.gamma_ci)
    # log P1, log P2 without the shared normalisation; weights taken relative
    # to the larger one so that extreme currents cannot underflow the posterior
    l1 = -((i_m - model.i_bar_1) ** 2) / (2.0 * model.variance)
    l2 = -((i_m - model.i_bar_2) ** 2) / (2.0 * model.variance)
    top = max(l1, l2)
    w1 = rho.rho11 * math.exp(l1 - top)
    w2 = rho.rho22 * math.exp(l2 - top)
    norm_rel = w1 + w2
    d = math.exp(-0.5 * gamma_phi * tau)
    rho12 = rho.rho12 * (math.exp(0.5 * (l1 + l2) - top) / norm_rel) * d
    if rates.gamma_ba != 0.0:
        _warn_phi2_once()
        rho12 *= complex(math.cos(rates.gamma_ba * i_m * tau), math.sin(rates.gamma_ba * i_m * tau))
    prob = norm_rel * math.exp(top) / math.sqrt(2.0 * math.pi * model.variance)
    return DensityMatrix(w1 / norm_rel, w2 / norm_rel, rho12), prob
