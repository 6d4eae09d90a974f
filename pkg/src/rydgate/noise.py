"""Stochastic samplers for the six experimental error channels,
the Monte-Carlo averaging engine, and the interaction-strength scan.

All sampling is driven by numpy Generators seeded from SeedSequences, so a
campaign is bit-reproducible from (config, seed) regardless of execution
order.  One channel is perturbed per campaign row; the no-noise baseline is
computed with identical integrator settings so systematic solver bias cancels
in the reported infidelity difference.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import (
    KB,
    LAMBDA_BLUE_M,
    LAMBDA_RED_M,
    RB87_MASS_KG,
    TWO_PI,
)
from .dynamics import NO_MODIFIERS, DriveModifiers, Propagation
from .gate import simulate_gate
from .model import DephasingRates

CHANNELS = ("position", "doppler", "beam", "intensity", "phase", "detuning")


class UnknownChannelError(ValueError):
    pass


@dataclass(frozen=True)
class ThermalConfig:
    """Trap thermal state: temperature, trap frequencies, atomic mass."""

    temperature_uk: float = 30.0
    trap_freq_khz: tuple = (147.0, 117.0, 35.0)   # (x, y, z), nu/2pi
    mass_kg: float = RB87_MASS_KG

    def sigmas_nm(self):
        """Thermal position spread per axis: sqrt(kB*T/(m*omega^2)) in nm."""
        if self.temperature_uk == 0:
            return np.zeros(3)
        kt = KB * self.temperature_uk * 1e-6
        omegas = TWO_PI * np.asarray(self.trap_freq_khz) * 1e3   # rad/s
        return np.sqrt(kt / (self.mass_kg * omegas**2)) * 1e9

    def v_rms_m_per_s(self):
        """1D rms speed sqrt(kB*T/m)."""
        return math.sqrt(KB * self.temperature_uk * 1e-6 / self.mass_kg)


@dataclass(frozen=True)
class BeamGeometry:
    """Excitation beam geometry: wavelengths, propagation, waists."""

    lambda_r_m: float = LAMBDA_RED_M
    lambda_b_m: float = LAMBDA_BLUE_M
    propagation: str = "counter"            # "counter" | "co"
    waist_r_um: tuple = (7.8, 7.8)          # (w_x, w_y)
    waist_b_um: tuple = (8.3, 8.3)

    def __post_init__(self):
        if self.propagation not in ("counter", "co"):
            raise ValueError(f"propagation must be 'counter' or 'co', got {self.propagation!r}")

    @property
    def k_r(self):
        """Red wavevector magnitude, 1/m."""
        return TWO_PI / self.lambda_r_m

    @property
    def k_b(self):
        return TWO_PI / self.lambda_b_m

    def rayleigh_r_um(self):
        """Rayleigh lengths (L_x, L_y) of the red beam in um: pi*w^2/lambda."""
        w = np.asarray(self.waist_r_um)
        return np.pi * w**2 / (self.lambda_r_m * 1e6)

    def rayleigh_b_um(self):
        w = np.asarray(self.waist_b_um)
        return np.pi * w**2 / (self.lambda_b_m * 1e6)


@dataclass(frozen=True)
class FluctuationAmplitudes:
    """Maximal amplitudes of the technical fluctuations (all angular rad/us)."""

    delta_omega_r: float = 0.0      # intensity, uniform half-width per laser
    delta_omega_b: float = 0.0
    gamma_re_max: float = 0.0       # dephasing draws are uniform on [0, max]
    gamma_eg0_max: float = 0.0
    gamma_eg1_max: float = 0.0
    delta_detuning: float = 0.0     # two-photon detuning, uniform half-width


@dataclass(frozen=True)
class NoiseConfig:
    thermal: ThermalConfig = field(default_factory=ThermalConfig)
    beams: BeamGeometry = field(default_factory=BeamGeometry)
    amplitudes: FluctuationAmplitudes = field(default_factory=FluctuationAmplitudes)
    samples: int = 500
    seed: int = 1
    position_sampling: str = "relative_single"  # | "independent_atoms"
    interatomic_axis: int = 0                   # 0=x, 1=y, 2=z
    doppler_sampling: str = "per_atom"          # | "common"
    intensity_sampling: str = "per_leg"  # | "per_laser" | "common"
    gamma_eg_common: bool = True                # one draw for both Raman legs

    def __post_init__(self):
        if self.position_sampling not in ("relative_single", "independent_atoms"):
            raise ValueError(f"unknown position_sampling {self.position_sampling!r}")


@dataclass(frozen=True)
class NoiseSample:
    """One stochastic draw of every fluctuating quantity for one trajectory."""

    positions_nm: np.ndarray        # (2, 3): control/target offsets
    relative_offset_nm: np.ndarray  # (3,) target-minus-control separation change
    doppler_blue: float = 0.0       # rad/us (control atom)
    doppler_red: float = 0.0
    doppler_blue_target: float = None
    doppler_red_target: float = None
    intensity_red: float = 0.0      # rad/us (control atom)
    intensity_blue: float = 0.0
    intensity_red_target: float = None
    intensity_blue_target: float = None
    intensity_red_target_leg1: float = None
    dephasing: DephasingRates = DephasingRates()
    detuning_offset: float = 0.0    # rad/us
    b: float = None                 # perturbed interaction, rad/us
    beam_scales: tuple = (1.0, 1.0, 1.0, 1.0)   # (s_rc, s_bc, s_rt, s_bt)

    def modifiers(self):
        s_rc, s_bc, s_rt, s_bt = self.beam_scales
        return DriveModifiers(
            doppler_blue=self.doppler_blue,
            doppler_red=self.doppler_red,
            doppler_blue_target=self.doppler_blue_target,
            doppler_red_target=self.doppler_red_target,
            intensity_red=self.intensity_red,
            intensity_blue=self.intensity_blue,
            intensity_red_target=self.intensity_red_target,
            intensity_blue_target=self.intensity_blue_target,
            intensity_red_target_leg1=self.intensity_red_target_leg1,
            scale_red_control=s_rc,
            scale_blue_control=s_bc,
            scale_red_target=s_rt,
            scale_blue_target=s_bt,
            detuning_offset=self.detuning_offset,
        )


# ---------------------------------------------------------------------------
# elementary samplers

def sample_positions(thermal, rng, n_atoms=2):
    """Independent Gaussian position offsets per axis per atom, in nm."""
    sig = thermal.sigmas_nm()
    if thermal.temperature_uk == 0:
        return np.zeros((n_atoms, 3))
    return rng.standard_normal((n_atoms, 3)) * sig[None, :]


def perturbed_interaction(relative_offset_nm, spec, axis=2, warn_fraction=0.5):
    """Linearized interaction under a relative-separation change.

    B = B0 - 3*C3*dr/r0^4 with dr the separation change projected on the
    interatomic axis.  Issues a warning when |dB| exceeds warn_fraction*B0.
    """
    import warnings

    b0 = spec.b0
    dr_um = np.asarray(relative_offset_nm)[axis] * 1e-3
    angular = 1.0 - 3.0 * math.cos(math.radians(spec.theta_deg)) ** 2
    db = -3.0 * TWO_PI * 1e3 * spec.c3_ghz_um3 * angular * dr_um / spec.r0_um**4
    if abs(db) > warn_fraction * abs(b0):
        warnings.warn(
            f"position offset gives |dB|/B0 = {abs(db / b0):.2f}; the linearized "
            "interaction model is outside its validity range",
            stacklevel=2,
        )
    return b0 + db


def sample_doppler(thermal, beams, rng):
    """Doppler detunings (Delta_b, Delta_r) in rad/us for one realization.

    A single longitudinal velocity is drawn; counter-propagation makes the
    two shifts anticorrelated in sign, co-propagation correlated.  Marginal
    standard deviations are k_{b,r} * v_rms (angular, s^-1).
    """
    if thermal.temperature_uk == 0:
        return 0.0, 0.0
    v = rng.standard_normal() * thermal.v_rms_m_per_s()
    d_b = beams.k_b * v * 1e-6          # rad/us
    d_r = beams.k_r * v * 1e-6
    if beams.propagation == "counter":
        d_r = -d_r
    return d_b, d_r


def beam_scale(position_nm, beams):
    """Gaussian-beam amplitude scales (s_r, s_b) at an offset from beam center.

    position is (x, y, z) with z along the propagation axis; at the origin the
    scales are exactly (1, 1).
    """
    x, y, z = np.asarray(position_nm) * 1e-3   # um
    out = []
    for waists, rayleighs in ((beams.waist_r_um, beams.rayleigh_r_um()),
                              (beams.waist_b_um, beams.rayleigh_b_um())):
        wx, wy = waists
        lx, ly = rayleighs
        gx = 1.0 + z**2 / lx**2
        gy = 1.0 + z**2 / ly**2
        amp = math.exp(-x**2 / (wx**2 * gx) - y**2 / (wy**2 * gy))
        out.append(amp / (gx * gy) ** 0.25)
    return tuple(out)


def draw_sample(channel, cfg, interaction, rng):
    """NoiseSample with only the requested channel active."""
    if channel not in CHANNELS:
        raise UnknownChannelError(
            f"unknown noise channel {channel!r}; valid: {CHANNELS}")
    positions = np.zeros((2, 3))
    relative = np.zeros(3)
    sample = dict(positions_nm=positions, relative_offset_nm=relative)
    amp = cfg.amplitudes
    if channel == "position":
        if cfg.position_sampling == "relative_single":
            relative = sample_positions(cfg.thermal, rng, n_atoms=1)[0]
            positions = np.vstack([np.zeros(3), relative])
        else:
            positions = sample_positions(cfg.thermal, rng)
            relative = positions[1] - positions[0]
        sample.update(
            positions_nm=positions, relative_offset_nm=relative,
            b=perturbed_interaction(relative, interaction, cfg.interatomic_axis),
        )
    elif channel == "doppler":
        d_b, d_r = sample_doppler(cfg.thermal, cfg.beams, rng)
        sample.update(doppler_blue=d_b, doppler_red=d_r)
        if cfg.doppler_sampling == "per_atom":
            d_bt, d_rt = sample_doppler(cfg.thermal, cfg.beams, rng)
            sample.update(doppler_blue_target=d_bt, doppler_red_target=d_rt)
    elif channel == "beam":
        positions = sample_positions(cfg.thermal, rng)
        s_rc, s_bc = beam_scale(positions[0], cfg.beams)
        s_rt, s_bt = beam_scale(positions[1], cfg.beams)
        sample.update(positions_nm=positions,
                      relative_offset_nm=positions[1] - positions[0],
                      beam_scales=(s_rc, s_bc, s_rt, s_bt))
    elif channel == "intensity":
        sample.update(
            intensity_red=rng.uniform(-amp.delta_omega_r, amp.delta_omega_r),
            intensity_blue=rng.uniform(-amp.delta_omega_b, amp.delta_omega_b),
        )
        if cfg.intensity_sampling in ("per_laser", "per_leg"):
            # the two 780 nm beams are separate lasers; the 480 nm is shared
            sample.update(intensity_red_target=rng.uniform(
                -amp.delta_omega_r, amp.delta_omega_r))
        if cfg.intensity_sampling == "per_leg":
            # carrier and EOM sideband of the target Raman pair drawn separately
            sample.update(intensity_red_target_leg1=rng.uniform(
                -amp.delta_omega_r, amp.delta_omega_r))
    elif channel == "phase":
        g_re = rng.uniform(0.0, amp.gamma_re_max)
        g_eg0 = rng.uniform(0.0, amp.gamma_eg0_max)
        if cfg.gamma_eg_common and amp.gamma_eg0_max == amp.gamma_eg1_max:
            g_eg1 = g_eg0
        else:
            g_eg1 = rng.uniform(0.0, amp.gamma_eg1_max)
        sample.update(dephasing=DephasingRates(g_re, g_eg0, g_eg1))
    elif channel == "detuning":
        sample.update(
            detuning_offset=rng.uniform(-amp.delta_detuning, amp.delta_detuning))
    return NoiseSample(**sample)


# ---------------------------------------------------------------------------
# campaign engine

@dataclass
class BudgetRow:
    channel: str
    amplitude_spec: str
    samples: int
    mean_infidelity: float
    std_error: float
    baseline_fidelity: float
    mean_fidelity: float
    temperature_uk: float = None
    fidelities: np.ndarray = None   # per-sample gate fidelities


def _amplitude_spec(channel, cfg):
    amp = cfg.amplitudes
    mhz = 1.0 / TWO_PI
    if channel == "intensity":
        return (f"dOmega_r/2pi={amp.delta_omega_r * mhz:g} MHz, "
                f"dOmega_b/2pi={amp.delta_omega_b * mhz:g} MHz")
    if channel == "phase":
        return (f"gamma_max/2pi=({amp.gamma_re_max * mhz * 1e3:g}, "
                f"{amp.gamma_eg0_max * mhz * 1e3:g}, "
                f"{amp.gamma_eg1_max * mhz * 1e3:g}) kHz")
    if channel == "detuning":
        return f"dDelta/2pi={amp.delta_detuning * mhz * 1e3:g} kHz"
    if channel == "doppler":
        return (f"T={cfg.thermal.temperature_uk:g} uK, "
                f"{cfg.beams.propagation}-propagating")
    if channel == "beam":
        return (f"T={cfg.thermal.temperature_uk:g} uK, "
                f"w_r={cfg.beams.waist_r_um[0]:g} um, w_b={cfg.beams.waist_b_um[0]:g} um")
    return f"T={cfg.thermal.temperature_uk:g} uK"


def run_campaign(channel, noise_cfg, pulses, model, propagation=None,
                 metric="uhlmann", progress=None):
    """Monte-Carlo error-budget row for one channel.

    Draws noise_cfg.samples realizations with only ``channel`` perturbed,
    scores each against the no-noise baseline computed with identical solver
    settings, and returns a BudgetRow with the mean infidelity and its
    standard error.
    """
    from .gate import gate_fidelity_value

    if channel not in CHANNELS:
        raise UnknownChannelError(
            f"unknown noise channel {channel!r}; valid: {CHANNELS}")
    propagation = propagation or Propagation(method="magnus", sample_points=0)
    n = noise_cfg.samples
    if n < 1:
        raise ValueError("campaign needs at least one sample")

    baseline = gate_fidelity_value(pulses, model, propagation, metric=metric)

    # draw all samples up front (single stream -> order-independent solving)
    root = np.random.SeedSequence(
        [noise_cfg.seed, CHANNELS.index(channel),
         int(noise_cfg.thermal.temperature_uk * 1000)])
    streams = [np.random.Generator(np.random.PCG64(s)) for s in root.spawn(n)]
    samples = [draw_sample(channel, noise_cfg, model.interaction, rng)
               for rng in streams]

    fids = np.empty(n)
    for j, sample in enumerate(samples):
        run_model = model
        if sample.b is not None:
            run_model = run_model.with_b0(sample.b)
        if sample.dephasing.any():
            run_model = run_model.with_dephasing(sample.dephasing)
        fids[j] = gate_fidelity_value(
            pulses, run_model, propagation, sample.modifiers(), metric=metric)
        if progress is not None and (j + 1) % progress == 0:
            print(f"  {channel}: {j + 1}/{n}", flush=True)

    mean_inf = baseline - fids.mean()
    std_err = fids.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    return BudgetRow(
        channel=channel,
        amplitude_spec=_amplitude_spec(channel, noise_cfg),
        samples=n,
        mean_infidelity=float(mean_inf),
        std_error=float(std_err),
        baseline_fidelity=float(baseline),
        mean_fidelity=float(fids.mean()),
        temperature_uk=noise_cfg.thermal.temperature_uk,
        fidelities=fids,
    )


def scan_b0(b0_values, pulses, model, propagation=None, metric="uhlmann"):
    """Infidelity versus interaction strength at fixed pulses.

    Returns an array of (b0_rad_us, infidelity) rows.  The scan is run with
    whatever decay/dephasing the model carries; the shipped preset zeroes the
    decays so the curve isolates the coherent blockade error.
    """
    from .gate import gate_fidelity_value

    propagation = propagation or Propagation(method="magnus", sample_points=0)
    rows = np.empty((len(b0_values), 2))
    for i, b0 in enumerate(b0_values):
        f = gate_fidelity_value(pulses, model.with_b0(float(b0)), propagation,
                                metric=metric)
        rows[i] = (b0, 1.0 - f)
    return rows
