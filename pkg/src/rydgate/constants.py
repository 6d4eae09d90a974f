"""Physical constants and unit conversions.

Internal frequency unit is angular rad/us.  Quantities quoted as
"X/2pi = Y MHz" enter as 2*pi*Y rad/us; plain rates in s^-1 (e.g. Doppler
shifts k*v) convert with PER_S_TO_RAD_PER_US.
"""

import math

TWO_PI = 2.0 * math.pi

KB = 1.380649e-23            # J/K
ATOMIC_MASS_KG = 1.66053906660e-27
RB87_MASS_KG = 86.909180527 * ATOMIC_MASS_KG

LAMBDA_RED_M = 780e-9        # ground -> intermediate
LAMBDA_BLUE_M = 480e-9       # intermediate -> Rydberg


def mhz(value):
    """X/2pi in MHz -> angular rad/us."""
    return TWO_PI * value


def ghz(value):
    """X/2pi in GHz -> angular rad/us."""
    return TWO_PI * 1e3 * value


def khz(value):
    """X/2pi in kHz -> angular rad/us."""
    return TWO_PI * 1e-3 * value


def per_second(value):
    """Plain angular rate in s^-1 -> rad/us."""
    return 1e-6 * value


def to_mhz(omega):
    """Angular rad/us -> X/2pi in MHz."""
    return omega / TWO_PI
