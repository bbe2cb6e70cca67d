"""Rabi-frequency estimation from continuous dispersive readout of a qubit.

Units: time in Rabi periods (tau_R = 1), angular rates in rad / tau_R, so the
true Rabi frequency is ``OMEGA_R = 2*pi``. Config files and the CLI quote rates
as multiples of ``OMEGA_R``.
"""

from cqed_rabi.units import OMEGA_R, TAU_R
from cqed_rabi.physics import (
    MeasurementRates,
    PhysicalParams,
    default_params,
    measurement_rates,
    steady_cavity_fields,
    strength_to_params,
)
from cqed_rabi.qubit import (
    DensityMatrix,
    bayesian_update,
    outcome_likelihoods,
    unitary_step,
)
from cqed_rabi.rng import derive_stream
from cqed_rabi.trajectory import (
    CurrentRecord,
    TrajectoryConfig,
    sample_current,
    simulate_trajectory,
)
from cqed_rabi.likelihood import (
    EstimationResult,
    LikelihoodCurve,
    SearchGrid,
    log_likelihood,
    log_likelihood_curve,
    mle_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "OMEGA_R",
    "TAU_R",
    "PhysicalParams",
    "MeasurementRates",
    "default_params",
    "steady_cavity_fields",
    "measurement_rates",
    "strength_to_params",
    "DensityMatrix",
    "unitary_step",
    "outcome_likelihoods",
    "bayesian_update",
    "derive_stream",
    "TrajectoryConfig",
    "CurrentRecord",
    "sample_current",
    "simulate_trajectory",
    "SearchGrid",
    "LikelihoodCurve",
    "EstimationResult",
    "log_likelihood",
    "log_likelihood_curve",
    "mle_estimate",
]
