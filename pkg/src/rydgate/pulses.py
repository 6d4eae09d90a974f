"""Drive envelopes and the two-photon detuning waveform.

All amplitudes are angular rad/us, times in us.  Config files quote
coefficients as X/2pi in MHz; the conversion happens once at config load.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import TWO_PI


class PulseDomainError(ValueError):
    """Evaluation time outside [0, T_g]."""


def _check_domain(t, gate_time):
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > gate_time + 1e-12):
        raise PulseDomainError(f"t={t} outside pulse domain [0, {gate_time}]")
    return t


@dataclass(frozen=True)
class RedPulse:
    """780 nm Gaussian envelope, optionally tail-corrected to vanish at 0 and T_g."""

    omega_max: float          # peak, rad/us
    width: float              # us
    gate_time: float          # us
    corrected: bool = False

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("red pulse width must be positive")
        if self.gate_time <= 0:
            raise ValueError("gate time must be positive")


@dataclass(frozen=True)
class BluePulse:
    """480 nm envelope: constant, or Gaussian plus constant offset."""

    mode: str                 # "constant" | "gaussian_offset"
    gate_time: float
    omega_const: float = 0.0  # constant-mode value, rad/us
    omega_gauss: float = 0.0  # Gaussian amplitude, rad/us
    width: float = 1.0        # us
    offset: float = 0.0       # additive offset K, rad/us

    def __post_init__(self):
        if self.mode not in ("constant", "gaussian_offset"):
            raise ValueError(f"unknown blue pulse mode {self.mode!r}")
        if self.mode == "gaussian_offset" and self.width <= 0:
            raise ValueError("blue pulse width must be positive")


@dataclass(frozen=True)
class DetuningWaveform:
    """Bare two-photon detuning: constant, or d0 + d1*cos(2*pi*t/Tg) + d2*sin(pi*t/Tg)."""

    mode: str                 # "constant" | "modulated"
    gate_time: float
    value: float = 0.0        # constant-mode value, rad/us
    d0: float = 0.0
    d1: float = 0.0
    d2: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "modulated"):
            raise ValueError(f"unknown detuning mode {self.mode!r}")


def eval_red(t, pulse):
    """Red envelope at time t (scalar or array)."""
    t = _check_domain(t, pulse.gate_time)
    g = np.exp(-((t - pulse.gate_time / 2) ** 2) / (2.0 * pulse.width**2))
    if pulse.corrected:
        g0 = np.exp(-((pulse.gate_time / 2) ** 2) / (2.0 * pulse.width**2))
        g = (g - g0) / (1.0 - g0)
    out = pulse.omega_max * g
    return float(out) if np.isscalar(t) or out.ndim == 0 else out


def eval_blue(t, pulse):
    """Blue envelope at time t."""
    t = _check_domain(t, pulse.gate_time)
    if pulse.mode == "constant":
        out = np.full_like(np.asarray(t, dtype=float), pulse.omega_const)
    else:
        out = (
            pulse.omega_gauss
            * np.exp(-((t - pulse.gate_time / 2) ** 2) / (2.0 * pulse.width**2))
            + pulse.offset
        )
    return float(out) if out.ndim == 0 else out


def eval_detuning(t, waveform):
    """Bare two-photon detuning at time t."""
    t = _check_domain(t, waveform.gate_time)
    if waveform.mode == "constant":
        out = np.full_like(np.asarray(t, dtype=float), waveform.value)
    else:
        tg = waveform.gate_time
        out = (
            waveform.d0
            + waveform.d1 * np.cos(TWO_PI * t / tg)
            + waveform.d2 * np.sin(np.pi * t / tg)
        )
    return float(out) if out.ndim == 0 else out


def effective_params(omega_r, omega_b, delta_big, delta):
    """Adiabatic-elimination effective couplings and detuning.

    Returns (omega_n, omega_m, delta_e) with
    omega_n = omega_b*omega_r/(2*delta_big), omega_m = omega_r**2/(2*delta_big),
    delta_e = (omega_r**2 - omega_b**2)/(4*delta_big) + delta.
    """
    if delta_big == 0:
        raise ZeroDivisionError("intermediate detuning must be nonzero")
    omega_n = omega_b * omega_r / (2.0 * delta_big)
    omega_m = omega_r**2 / (2.0 * delta_big)
    delta_e = (omega_r**2 - omega_b**2) / (4.0 * delta_big) + delta
    return omega_n, omega_m, delta_e


@dataclass(frozen=True)
class PulseSet:
    """All drive waveforms plus the intermediate detuning for one gate."""

    red: RedPulse
    blue: BluePulse
    detuning: DetuningWaveform
    delta_big: float          # intermediate detuning, rad/us
    gate_time: float = field(default=0.0)

    def __post_init__(self):
        tg = self.red.gate_time
        if self.blue.gate_time != tg or self.detuning.gate_time != tg:
            raise ValueError("red/blue/detuning gate times disagree")
        object.__setattr__(self, "gate_time", tg)

    def max_drive(self, n_grid=512):
        t = np.linspace(0.0, self.gate_time, n_grid)
        return max(
            float(np.abs(eval_red(t, self.red)).max()),
            float(np.abs(eval_blue(t, self.blue)).max()),
        )

    def check_adiabatic(self, warn=True):
        """True when |Delta| exceeds 10x the peak drive; warns otherwise."""
        ok = abs(self.delta_big) > 10.0 * self.max_drive()
        if not ok and warn:
            warnings.warn(
                "intermediate detuning does not dominate the drives "
                f"(|Delta|={abs(self.delta_big):.3g} rad/us, "
                f"10*max drive={10 * self.max_drive():.3g} rad/us); "
                "adiabatic-elimination estimates are unreliable",
                stacklevel=2,
            )
        return ok
