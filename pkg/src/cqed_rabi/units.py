import math

#: Rabi period; the unit of time.
TAU_R = 1.0
#: True Rabi angular frequency in rad / tau_R.
OMEGA_R = 2.0 * math.pi / TAU_R


def rate(x_in_omega_r: float) -> float:
    """Convert a rate quoted in multiples of OMEGA_R to internal units."""
    return x_in_omega_r * OMEGA_R


def in_omega_r(x: float) -> float:
    return x / OMEGA_R
