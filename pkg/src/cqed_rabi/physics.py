"""Steady-state cavity fields and measurement rates of dispersive readout.

Only the bad-cavity, weak-response regime is modelled: the cavity fields are
always their steady-state values, there is no cavity ODE.
"""

from __future__ import annotations

import cmath
import hashlib
import math
import struct
from dataclasses import dataclass, fields, replace

from cqed_rabi.units import OMEGA_R


@dataclass(frozen=True)
class PhysicalParams:
    """Experiment-independent physical constants, in internal units.

    Attributes
    ----------
    chi : float
        Dispersive coupling strength.
    kappa : float
        Cavity leak rate, must be positive.
    eps_m : float
        Measurement drive amplitude.
    delta_r : float
        Detuning between measurement drive and cavity.
    phi_lo : float
        Local-oscillator phase of the homodyne detection, radians.
    gamma_phi : float
        Extra dephasing of external origin (photon loss, amplifier noise).
    omega_rabi_true : float
        Rabi frequency used to generate records.
    omega_q : float
        Bare qubit frequency. Removed by the frame of the resonant drive and
        kept only for completeness.
    stark_in_drive : bool
        If False (default) the Rabi drive is resonant with the ac-Stark
        shifted qubit, so the shift B does not appear in the rotating-frame
        Hamiltonian. If True the drive sits at the bare qubit frequency and
        B enters as a detuning ``(B/2) sigma_z``.
    """

    chi: float = 0.5 * OMEGA_R
    kappa: float = 10.0 * OMEGA_R
    eps_m: float = 0.0
    delta_r: float = 0.0
    phi_lo: float = 0.0
    gamma_phi: float = 0.0
    omega_rabi_true: float = OMEGA_R
    omega_q: float = 0.0
    stark_in_drive: bool = False

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not self.gamma_phi >= 0:
            raise ValueError(f"gamma_phi must be >= 0, got {self.gamma_phi}")
        if not self.omega_rabi_true > 0:
            raise ValueError(f"omega_rabi_true must be > 0, got {self.omega_rabi_true}")
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v}")

    def fingerprint(self) -> str:
        """Stable hash of the exact parameter values."""
        h = hashlib.sha256()
        for f in fields(self):
            v = getattr(self, f.name)
            h.update(f.name.encode())
            if isinstance(v, bool):
                h.update(b"\x01" if v else b"\x00")
            else:
                h.update(struct.pack("<d", float(v)))
        return h.hexdigest()[:16]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class MeasurementRates:
    alpha1: complex
    alpha2: complex
    beta: complex
    theta_beta: float
    gamma_ci: float
    gamma_ba: float
    gamma_d: float
    gamma_m: float
    b_stark: float

    def drive_detuning(self, params: PhysicalParams) -> float:
        """The sigma_z coefficient (times 2) of the rotating-frame Hamiltonian."""
        return self.b_stark if params.stark_in_drive else 0.0


def steady_cavity_fields(params: PhysicalParams) -> tuple[complex, complex]:
    """Steady-state cavity fields for the qubit in |1> and |2>."""
    half_k = 0.5 * params.kappa
    a1 = -params.eps_m / complex(params.delta_r + params.chi, -half_k)
    a2 = -params.eps_m / complex(params.delta_r - params.chi, -half_k)
    return a1, a2


def measurement_rates(params: PhysicalParams) -> MeasurementRates:
    a1, a2 = steady_cavity_fields(params)
    beta = a2 - a1
    # phase of an exact zero is taken as 0
    theta = cmath.phase(beta) if beta != 0 else 0.0
    k_b2 = params.kappa * abs(beta) ** 2
    gamma_ci = k_b2 * math.cos(params.phi_lo - theta) ** 2
    gamma_ba = k_b2 * math.sin(params.phi_lo - theta) ** 2
    gamma_d = 4.0 * params.chi * (a1.conjugate() * a2).imag
    b_stark = 2.0 * params.chi * (a1 * a2.conjugate()).real
    return MeasurementRates(
        alpha1=a1,
        alpha2=a2,
        beta=beta,
        theta_beta=theta,
        gamma_ci=gamma_ci,
        gamma_ba=gamma_ba,
        gamma_d=gamma_d,
        gamma_m=gamma_ci + gamma_ba,
        b_stark=b_stark,
    )


def strength_to_params(gamma_m_target: float, template: PhysicalParams) -> PhysicalParams:
    """Rescale the drive amplitude so that ``measurement_rates(...).gamma_m``
    equals ``gamma_m_target``. Gamma_m is quadratic in eps_m at fixed chi,
    kappa and delta_r.
    """
    if gamma_m_target < 0 or not math.isfinite(gamma_m_target):
        raise ValueError(f"gamma_m_target must be finite and >= 0, got {gamma_m_target}")
    if template.chi == 0:
        raise ValueError("chi = 0: the qubit states are indistinguishable, no Gamma_m is reachable")
    if gamma_m_target == 0:
        return replace(template, eps_m=0.0)
    # rate per unit drive power
    unit = measurement_rates(replace(template, eps_m=1.0)).gamma_m
    return replace(template, eps_m=math.sqrt(gamma_m_target / unit))


def default_params(gamma_m: float, gamma_phi: float = 0.0, **overrides) -> PhysicalParams:
    """Template parameters (kappa = 10 OMEGA_R, chi = 0.5 OMEGA_R, delta_r = 0,
    phi_lo = 0) driven to measurement rate ``gamma_m`` (internal units)."""
    template = PhysicalParams(gamma_phi=gamma_phi, **overrides)
    return strength_to_params(gamma_m, template)
