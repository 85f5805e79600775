"""Physical constants and the Yb:YVO4 reference parameter set.

All frequencies are angular (rad/s) with hbar = 1 inside the models. Values
quoted in Hz are converted here, once.
"""

from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi

HBAR = 1.054571817e-34  # J s
MU0 = 1.25663706212e-6  # N A^-2
MU_B = 9.2740100783e-24  # J/T


def hz(value_hz: float) -> float:
    """Convert an ordinary frequency in Hz to rad/s."""
    return TWO_PI * value_hz


# 171Yb:YVO4 reference values (Hz or seconds as noted)
YB_GAMMA1_HZ = 596.0  # optical decay
YB_GAMMA2_HZ = 2.95  # ground spin relaxation
YB_GAMMA4_HZ = 3.6  # ground spin pure dephasing
YB_GAMMA5_HZ = 4.5e3  # excited spin dephasing
YB_G_PAR = 2.51
YB_G_PERP = 1.7
YB_CAVITY_G_HZ = 23e6
YB_CAVITY_KAPPA_HZ = 30.7e9
YB_T2O_BULK = 91e-6  # s
YB_T2O_CAVITY = 39e-6  # s
YB_T2S_GROUND = 31e-3  # s
YB_T1O = 267e-6  # s
YB_HYPERFINE_HZ = 675e6  # ground hyperfine splitting of 171Yb
YB_CEFF_WEIGHT = 0.7

YB_FIELD_TESLA = 0.5  # magnetic field for the optical single-qubit pulse estimate


def pure_dephasing_from_t2(t2: float, gamma1: float) -> float:
    """Optical pure dephasing gamma* = 1/T2 - gamma1/2 (rad/s)."""
    value = 1.0 / t2 - 0.5 * gamma1
    if value < 0:
        raise ValueError("T2 exceeds the 2*T1 limit; pure dephasing would be negative")
    return value


DEFAULT_CONSTANTS_HZ = {
    "gamma1": YB_GAMMA1_HZ,
    "gamma2": YB_GAMMA2_HZ,
    "gamma4": YB_GAMMA4_HZ,
    "gamma5": YB_GAMMA5_HZ,
    "g_par": YB_G_PAR,
    "g_perp": YB_G_PERP,
    "g": YB_CAVITY_G_HZ,
    "kappa": YB_CAVITY_KAPPA_HZ,
    "T2o_bulk": YB_T2O_BULK,
    "T2o_cavity": YB_T2O_CAVITY,
    "T2s_ground": YB_T2S_GROUND,
    "T1o": YB_T1O,
    "hyperfine": YB_HYPERFINE_HZ,
    "w": YB_CEFF_WEIGHT,
}
