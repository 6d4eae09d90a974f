"""Decay/dephasing rates, interaction geometry, and Lindblad operator builders."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import basis
from .constants import TWO_PI


@dataclass(frozen=True)
class DecayRates:
    """Spontaneous-decay rates in rad/us."""

    gamma_e: float   # intermediate |e>
    gamma_d: float   # Rydberg |d>
    gamma_p: float   # pair-state component |p>
    gamma_f: float   # pair-state component |f>

    def __post_init__(self):
        for name in ("gamma_e", "gamma_d", "gamma_p", "gamma_f"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def scaled(self, factor):
        return DecayRates(
            self.gamma_e * factor,
            self.gamma_d * factor,
            self.gamma_p * factor,
            self.gamma_f * factor,
        )


ZERO_DECAYS = DecayRates(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class DephasingRates:
    """Laser phase-noise dephasing rates in rad/us."""

    gamma_re: float = 0.0    # Rydberg-intermediate (coupling laser)
    gamma_eg0: float = 0.0   # |e> - |0> leg
    gamma_eg1: float = 0.0   # |e> - |1> leg (target only)

    def __post_init__(self):
        for name in ("gamma_re", "gamma_eg0", "gamma_eg1"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def symmetric(self):
        """True when target 0/1 legs dephase identically."""
        return self.gamma_eg0 == self.gamma_eg1

    def any(self):
        return (self.gamma_re, self.gamma_eg0, self.gamma_eg1) != (0.0, 0.0, 0.0)


NO_DEPHASING = DephasingRates()


@dataclass(frozen=True)
class InteractionSpec:
    """Dipole-dipole exchange |d_c d_t> <-> |pf> with B = C3*(1-3cos^2(theta))/r0^3."""

    c3_ghz_um3: float = 23.276   # C3/2pi in GHz*um^3
    r0_um: float = 9.0
    theta_deg: float = 90.0

    @property
    def b0(self):
        """Exchange strength in rad/us."""
        angular = 1.0 - 3.0 * math.cos(math.radians(self.theta_deg)) ** 2
        return TWO_PI * 1e3 * self.c3_ghz_um3 * angular / self.r0_um**3

    def with_b0(self, b0):
        """Spec with r0 adjusted to produce the requested B (theta fixed)."""
        angular = 1.0 - 3.0 * math.cos(math.radians(self.theta_deg)) ** 2
        if b0 <= 0 or angular <= 0:
            raise ValueError("with_b0 requires positive target B and angular factor")
        r0 = (TWO_PI * 1e3 * self.c3_ghz_um3 * angular / b0) ** (1.0 / 3.0)
        return InteractionSpec(self.c3_ghz_um3, r0, self.theta_deg)


@dataclass(frozen=True)
class PhysicalModel:
    """Static physics of one run: rates, interaction, jump-operator convention."""

    decays: DecayRates
    dephasing: DephasingRates = NO_DEPHASING
    interaction: InteractionSpec = field(default_factory=InteractionSpec)
    per_channel_jumps: bool = False
    jump_normalization: str = "half"   # "half" (out-rate = rate) | "as_written"
    control_eg_dephasing: bool = False  # also dephase the control 0-e leg
    b0_override: float = None   # rad/us; bypasses interaction geometry when set

    @property
    def b0(self):
        return self.interaction.b0 if self.b0_override is None else self.b0_override

    def with_b0(self, b0):
        return PhysicalModel(
            self.decays, self.dephasing, self.interaction, self.per_channel_jumps,
            self.jump_normalization, self.control_eg_dephasing, b0,
        )

    def with_decays(self, decays):
        return PhysicalModel(
            decays, self.dephasing, self.interaction, self.per_channel_jumps,
            self.jump_normalization, self.control_eg_dephasing, self.b0_override,
        )

    def with_dephasing(self, dephasing):
        return PhysicalModel(
            self.decays, dephasing, self.interaction, self.per_channel_jumps,
            self.jump_normalization, self.control_eg_dephasing, self.b0_override,
        )


# ---------------------------------------------------------------------------
# single-atom Lindblad operators (5x5); embedding into the pair space is the
# caller's job via basis.embed_single
#
# Branch normalization: each excited level decays into both qubit grounds.
# With "half" normalization the branch amplitudes are sqrt(rate/2) so the
# total out-rate of the level equals the quoted rate (rate = 1/lifetime);
# "as_written" uses sqrt(rate) per branch, doubling the out-rate.  Published
# fidelity and decay-error numbers correspond to "half".

def _branch_amplitude(rate, normalization):
    if normalization == "half":
        return math.sqrt(rate / 2.0)
    if normalization == "as_written":
        return math.sqrt(rate)
    raise ValueError(f"unknown jump normalization {normalization!r}")


def _summed_jump(gamma_ryd, gamma_aux, gamma_e, normalization):
    """One collective jump operator: branches into |0> and |1> summed coherently."""
    op = np.zeros((5, 5), dtype=complex)
    for rate, src in ((gamma_ryd, basis.D), (gamma_aux, basis.AUX), (gamma_e, basis.E)):
        for dst in (basis.G0, basis.G1):
            op[dst, src] += _branch_amplitude(rate, normalization)
    return op


def _per_channel_jumps(gamma_ryd, gamma_aux, gamma_e, normalization):
    """Conventional decomposition: one operator per (ground, excited) pair."""
    ops = []
    for rate, src in ((gamma_ryd, basis.D), (gamma_aux, basis.AUX), (gamma_e, basis.E)):
        for dst in (basis.G0, basis.G1):
            op = np.zeros((5, 5), dtype=complex)
            op[dst, src] = _branch_amplitude(rate, normalization)
            ops.append(op)
    return ops


def atom_jump_operators(atom, decays, per_channel=False, normalization="half"):
    """List of 5x5 jump operators for one atom ('control' or 'target')."""
    gamma_aux = decays.gamma_p if atom == "control" else decays.gamma_f
    if per_channel:
        return _per_channel_jumps(decays.gamma_d, gamma_aux, decays.gamma_e, normalization)
    return [_summed_jump(decays.gamma_d, gamma_aux, decays.gamma_e, normalization)]


def atom_dephasing_operator(atom, dephasing, control_eg=False):
    """Diagonal dephasing operator for one atom; None when all rates vanish.

    The Raman-leg rates gamma_eg0/gamma_eg1 are target-qubit quantities (the
    target's phase-locked Raman pair); the control atom dephases only through
    the shared coupling laser unless control_eg is set.
    """
    a = math.sqrt(dephasing.gamma_re / 2.0)
    diag = np.zeros(5, dtype=complex)
    diag[basis.D] += a
    diag[basis.E] += -a
    if atom == "target" or control_eg:
        b = math.sqrt(dephasing.gamma_eg0 / 2.0)
        diag[basis.E] += b
        diag[basis.G0] += -b
    if atom == "target":
        c = math.sqrt(dephasing.gamma_eg1 / 2.0)
        diag[basis.E] += c
        diag[basis.G1] += -c
    if not np.any(diag):
        return None
    return np.diag(diag)


def atom_lindblad_operators(atom, decays, dephasing, per_channel=False,
                            normalization="half", control_eg=False):
    """All single-atom Lindblad operators (jumps plus optional dephasing)."""
    ops = atom_jump_operators(atom, decays, per_channel, normalization)
    deph = atom_dephasing_operator(atom, dephasing, control_eg)
    if deph is not None:
        ops.append(deph)
    return ops


def pair_lindblad_operators(model):
    """All 25x25 Lindblad operators for the pair system."""
    ops = []
    for atom in ("control", "target"):
        for op in atom_lindblad_operators(
            atom, model.decays, model.dephasing, model.per_channel_jumps,
            model.jump_normalization, model.control_eg_dephasing,
        ):
            ops.append(basis.embed_single(atom, op))
    return ops
