"""Generation of coarse-grained measurement current records.

A trajectory is advanced at the fine step ``dt``: a current is drawn from the
pre-step state, the Bayesian measurement update is applied with that
current, then the Rabi rotation at the true frequency. Fine currents are
averaged into bins of width ``tau``. Only the bins are kept; the
``(seed, trajectory_index)`` pair regenerates the fine record exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from cqed_rabi import _kernels
from cqed_rabi.physics import PhysicalParams, measurement_rates
from cqed_rabi.qubit import DensityMatrix, _warn_phi2_once
from cqed_rabi.rng import derive_stream

# normals drawn per chunk; fixed so that records never depend on memory layout
_CHUNK_STEPS = 1 << 20


class TrajectoryError(RuntimeError):
    """The conditional state left the set of valid density matrices."""

    def __init__(self, step: int, detail: str = ""):
        self.step = step
        super().__init__(f"invalid qubit state at fine step {step}{': ' + detail if detail else ''}")


def _integer_ratio(num: float, den: float, what: str) -> int:
    q = num / den
    n = int(round(q))
    if n < 1 or abs(q - n) > 1e-9 * max(1.0, q):
        raise ValueError(f"{what}: {num!r} is not an integer multiple of {den!r}")
    return n


@dataclass(frozen=True)
class TrajectoryConfig:
    """Time discretisation and provenance of one trajectory (times in tau_R)."""

    dt: float = 1e-5
    tau: float = 1e-3
    total_time: float = 100.0
    seed: int = 0
    trajectory_index: int = 0
    rho0: DensityMatrix = field(default_factory=DensityMatrix.ground)

    def __post_init__(self):
        if not (self.dt > 0 and self.tau > 0 and self.total_time > 0):
            raise ValueError("dt, tau and total_time must be positive")
        _integer_ratio(self.tau, self.dt, "tau")
        _integer_ratio(self.total_time, self.tau, "total_time")
        self.rho0.check()

    @property
    def steps_per_bin(self) -> int:
        return _integer_ratio(self.tau, self.dt, "tau")

    @property
    def n_bins(self) -> int:
        return _integer_ratio(self.total_time, self.tau, "total_time")

    def with_index(self, k: int) -> "TrajectoryConfig":
        return replace(self, trajectory_index=k)


@dataclass
class CurrentRecord:
    """Coarse-grained currents of one trajectory.

    ``states`` (optional) holds the Bloch vector after each bin, shape (N, 3).
    """

    currents: np.ndarray
    tau: float
    dt: float
    seed: int
    trajectory_index: int
    params_fingerprint: str
    rho0: DensityMatrix = field(default_factory=DensityMatrix.ground)
    states: np.ndarray | None = None

    def __post_init__(self):
        self.currents = np.ascontiguousarray(self.currents, dtype=np.float64)
        if self.currents.ndim != 1 or self.currents.size == 0:
            raise ValueError("currents must be a non-empty 1-d array")
        if not np.all(np.isfinite(self.currents)):
            raise ValueError("record contains non-finite currents")

    @property
    def n_bins(self) -> int:
        return self.currents.size

    @property
    def total_time(self) -> float:
        return self.n_bins * self.tau

    def coarsen(self, factor: int) -> "CurrentRecord":
        """Merge groups of ``factor`` adjacent bins into one bin of width
        ``factor * tau``. Trailing bins that do not fill a group are dropped."""
        if factor < 1:
            raise ValueError("factor must be >= 1")
        n = (self.n_bins // factor) * factor
        merged = self.currents[:n].reshape(-1, factor).mean(axis=1)
        states = None if self.states is None else self.states[factor - 1 : n : factor]
        return replace(self, currents=merged, tau=self.tau * factor, states=states)


def sample_current(sigma_z_mean: float, gamma_ci: float, dt: float, noise: float) -> float:
    """Instantaneous homodyne current over a step ``dt`` given a standard-normal draw."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return -math.sqrt(gamma_ci) * sigma_z_mean + noise / math.sqrt(dt)


def simulate_trajectory(
    params: PhysicalParams,
    cfg: TrajectoryConfig,
    *,
    noise_substeps: int = 1,
    store_states: bool = False,
) -> CurrentRecord:
    """Generate one current record, deterministic in ``(params, cfg)``.

    ``noise_substeps = k`` makes each step of ``dt`` consume ``k`` normals from
    the stream and use their normalised sum, i.e. the Wiener path of a run at
    ``dt / k``. Comparing a run at ``(dt, k)`` with one at ``(dt / k, 1)``
    therefore isolates the time-discretisation error.
    """
    if noise_substeps < 1:
        raise ValueError("noise_substeps must be >= 1")
    rates = measurement_rates(params)
    if rates.gamma_ba != 0.0:
        _warn_phi2_once()
    s = math.sqrt(rates.gamma_ci)
    damp = math.exp(-0.5 * params.gamma_phi * cfg.dt)
    rot = _kernels.rotation_matrix(params.omega_rabi_true, rates.drive_detuning(params), cfg.dt)

    nsub = cfg.steps_per_bin
    n_bins = cfg.n_bins
    currents = np.empty(n_bins)
    states = np.empty((n_bins if store_states else 0, 3))
    state = np.array(cfg.rho0.bloch(), dtype=np.float64)
    rng = derive_stream(cfg.seed, cfg.trajectory_index)
    k = noise_substeps
    bins_per_chunk = max(1, _CHUNK_STEPS // (nsub * k))
    norm = 1.0 / math.sqrt(k)

    for b0 in range(0, n_bins, bins_per_chunk):
        nb = min(bins_per_chunk, n_bins - b0)
        raw = rng.standard_normal(nb * nsub * k)
        noise = raw if k == 1 else raw.reshape(-1, k).sum(axis=1) * norm
        err = _kernels.generate_bins(
            noise, nsub, cfg.dt, s, damp, rates.gamma_ba, rot, state, currents, states, b0, store_states
        )
        if err >= 0:
            raise TrajectoryError(int(err))

    return CurrentRecord(
        currents=currents,
        tau=cfg.tau,
        dt=cfg.dt,
        seed=cfg.seed,
        trajectory_index=cfg.trajectory_index,
        params_fingerprint=params.fingerprint(),
        rho0=cfg.rho0,
        states=states if store_states else None,
    )
