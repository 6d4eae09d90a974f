"""Time-dependent two-atom Hamiltonian, Lindblad RHS, and master-equation evolution.

The reference operator constructors here are plain numpy and define the model;
the compiled integrators in _engine must agree with them (enforced by tests).
"""

from dataclasses import dataclass, field

import numpy as np

from . import basis, model as model_mod
from .pulses import eval_blue, eval_detuning, eval_red

DEFAULT_SAMPLE_POINTS = 1000


class NumericalError(RuntimeError):
    """Integrator failure (step-size underflow / divergence)."""


@dataclass(frozen=True)
class DriveModifiers:
    """Multiplicative/additive drive perturbations for one trajectory.

    Beam scales multiply the envelopes (per atom), intensity offsets add to
    them, Doppler detunings phase-modulate them, and detuning_offset adds to
    the bare two-photon detuning.
    """

    doppler_blue: float = 0.0      # rad/us, control atom
    doppler_red: float = 0.0       # rad/us, control atom
    doppler_blue_target: float = None   # defaults to the control values
    doppler_red_target: float = None
    intensity_red: float = 0.0     # additive, rad/us (control atom)
    intensity_blue: float = 0.0    # additive, rad/us (control atom)
    intensity_red_target: float = None    # defaults to the control values
    intensity_blue_target: float = None
    intensity_red_target_leg1: float = None  # |1>-<e| sideband; defaults to leg 0
    scale_red_control: float = 1.0
    scale_blue_control: float = 1.0
    scale_red_target: float = 1.0
    scale_blue_target: float = 1.0
    detuning_offset: float = 0.0   # rad/us

    @property
    def doppler_target(self):
        db = self.doppler_blue if self.doppler_blue_target is None else self.doppler_blue_target
        dr = self.doppler_red if self.doppler_red_target is None else self.doppler_red_target
        return db, dr

    @property
    def intensity_target(self):
        ir = self.intensity_red if self.intensity_red_target is None else self.intensity_red_target
        ib = self.intensity_blue if self.intensity_blue_target is None else self.intensity_blue_target
        return ir, ib

    @property
    def intensity_target_legs(self):
        ir0, _ = self.intensity_target
        ir1 = ir0 if self.intensity_red_target_leg1 is None else self.intensity_red_target_leg1
        return ir0, ir1

    @property
    def target_swap_symmetric(self):
        ir0, ir1 = self.intensity_target_legs
        return ir0 == ir1

    @property
    def trivial(self):
        return self == DriveModifiers()


NO_MODIFIERS = DriveModifiers()


@dataclass(frozen=True)
class Propagation:
    """Integrator selection and controls.

    method 'adaptive_rk' is an embedded Runge-Kutta of order 8(5,3) with
    tolerance rtol/atol; 'fixed_rk4' is classic RK4 with step dt; 'magnus'
    is a 4th-order commutator-corrected exponential propagator with exact
    dissipator sub-steps of width ~slice_width (fast path for campaigns).
    """

    method: str = "adaptive_rk"
    rtol: float = 1e-9
    atol: float = 1e-12
    dt: float = 1e-5            # us, fixed_rk4
    slice_width: float = 3.2e-4  # us, magnus target slice
    sample_points: int = DEFAULT_SAMPLE_POINTS

    def __post_init__(self):
        if self.method not in ("adaptive_rk", "fixed_rk4", "magnus"):
            raise ValueError(f"unknown propagation method {self.method!r}")

    def refined(self):
        """Settings with the step control tightened for the convergence gate."""
        if self.method == "fixed_rk4":
            return Propagation("fixed_rk4", self.rtol, self.atol, self.dt / 2,
                               self.slice_width, self.sample_points)
        if self.method == "magnus":
            return Propagation("magnus", self.rtol, self.atol, self.dt,
                               self.slice_width / 2, self.sample_points)
        return Propagation("adaptive_rk", self.rtol / 10, self.atol / 10, self.dt,
                           self.slice_width, self.sample_points)


def drive_amplitudes(t, pulses, modifiers=NO_MODIFIERS):
    """Complex red/blue coupling amplitudes per atom at time t.

    Returns (red_control, blue_control, red_target, blue_target); each is the
    full coupling (envelope scaled/offset, Doppler phase applied), i.e. the
    Hamiltonian matrix element is amplitude/2.
    """
    m = modifiers
    omega_r = eval_red(t, pulses.red)
    omega_b = eval_blue(t, pulses.blue)
    db_t, dr_t = m.doppler_target
    ir_t0, ir_t1 = m.intensity_target_legs
    _, ib_t = m.intensity_target
    ph_rt = np.exp(1j * dr_t * t)
    red_c = (m.scale_red_control * omega_r + m.intensity_red) * np.exp(1j * m.doppler_red * t)
    red_t0 = (m.scale_red_target * omega_r + ir_t0) * ph_rt
    red_t1 = (m.scale_red_target * omega_r + ir_t1) * ph_rt
    blue_c = (m.scale_blue_control * omega_b + m.intensity_blue) * np.exp(1j * m.doppler_blue * t)
    blue_t = (m.scale_blue_target * omega_b + ib_t) * np.exp(1j * db_t * t)
    return red_c, blue_c, red_t0, red_t1, blue_t


def control_hamiltonian(t, pulses, modifiers=NO_MODIFIERS):
    """5x5 control-atom Hamiltonian: only |0_c> couples to |e_c>."""
    red_c, blue_c, _, _, _ = drive_amplitudes(t, pulses, modifiers)
    delta = eval_detuning(t, pulses.detuning) + modifiers.detuning_offset
    h = np.zeros((5, 5), dtype=complex)
    h[basis.E, basis.E] = -pulses.delta_big
    h[basis.D, basis.D] = -delta
    h[basis.G0, basis.E] = red_c / 2.0
    h[basis.E, basis.D] = blue_c / 2.0
    return h + h.conj().T - np.diag(np.diag(h).real)


def target_hamiltonian(t, pulses, modifiers=NO_MODIFIERS):
    """5x5 target-atom Hamiltonian: both grounds couple to |e_t>."""
    _, _, red_t0, red_t1, blue_t = drive_amplitudes(t, pulses, modifiers)
    delta = eval_detuning(t, pulses.detuning) + modifiers.detuning_offset
    h = np.zeros((5, 5), dtype=complex)
    h[basis.E, basis.E] = -pulses.delta_big
    h[basis.D, basis.D] = -delta
    h[basis.G0, basis.E] = red_t0 / 2.0
    h[basis.G1, basis.E] = red_t1 / 2.0
    h[basis.E, basis.D] = blue_t / 2.0
    return h + h.conj().T - np.diag(np.diag(h).real)


def exchange_hamiltonian(b0):
    """25x25 dipole-dipole exchange B*(|d_c d_t><pf| + h.c.)."""
    h = basis.projector("dd", "pf") + basis.projector("pf", "dd")
    return b0 * h


def hamiltonian(t, pulses, interaction, doppler=(0.0, 0.0), beam_scale=(1.0, 1.0)):
    """Total 25x25 pair Hamiltonian at time t.

    doppler is (Delta_b, Delta_r) in rad/us; beam_scale is (s_r, s_b) applied
    to both atoms.  Campaign code uses per-atom scales via DriveModifiers.
    """
    s_r, s_b = beam_scale
    if not (0.0 < s_r <= 1.0 and 0.0 < s_b <= 1.0):
        raise ValueError(f"beam scales must lie in (0, 1], got {beam_scale}")
    mods = DriveModifiers(
        doppler_blue=doppler[0], doppler_red=doppler[1],
        scale_red_control=s_r, scale_blue_control=s_b,
        scale_red_target=s_r, scale_blue_target=s_b,
    )
    b0 = interaction.b0 if hasattr(interaction, "b0") else float(interaction)
    return pair_hamiltonian(t, pulses, b0, mods)


def pair_hamiltonian(t, pulses, b0, modifiers=NO_MODIFIERS):
    hc = control_hamiltonian(t, pulses, modifiers)
    ht = target_hamiltonian(t, pulses, modifiers)
    return (
        basis.embed_single("control", hc)
        + basis.embed_single("target", ht)
        + exchange_hamiltonian(b0)
    )


def lindblad_rhs(rho, h, decays, dephasing=model_mod.NO_DEPHASING, per_channel=False,
                 normalization="half"):
    """d(rho)/dt for the pair system with the given Hamiltonian snapshot."""
    phys = model_mod.PhysicalModel(decays, dephasing, per_channel_jumps=per_channel,
                                   jump_normalization=normalization)
    lops = model_mod.pair_lindblad_operators(phys)
    out = -1j * (h @ rho - rho @ h)
    for lop in lops:
        ldag = lop.conj().T
        out += lop @ rho @ ldag - 0.5 * (ldag @ lop @ rho + rho @ ldag @ lop)
    return out


# ---------------------------------------------------------------------------
# evolution driver

@dataclass
class EvolveResult:
    """Final state plus (optionally) population samples on a uniform grid."""

    times: np.ndarray            # (n_samples+1,)
    rho_final: np.ndarray        # (25, 25) or (5, 5) in target-sector runs
    populations: np.ndarray      # (n_samples+1, dim) real, or empty
    trace: np.ndarray            # (n_samples+1,) real
    purity: np.ndarray           # (n_samples+1,) real
    rhos: np.ndarray = None      # (n_samples+1, dim, dim) when recorded


def evolve(rho0, pulses, model, propagation=None, modifiers=NO_MODIFIERS,
           record=True):
    """Integrate the pair master equation over [0, T_g].

    rho0 may be a pair label ('10'), a flat index, or a 25x25 density matrix.
    """
    from . import _engine  # deferred: numba compilation on first use

    propagation = propagation or Propagation()
    if isinstance(rho0, str):
        rho0 = basis.basis_state(rho0)
    elif isinstance(rho0, (int, np.integer)):
        idx = int(rho0)
        rho0 = np.zeros((25, 25), dtype=complex)
        rho0[idx, idx] = 1.0
    rho0 = basis.validate_density_matrix(np.asarray(rho0, dtype=complex), "initial state")
    return _engine.run_pair(rho0, pulses, model, propagation, modifiers, record)


def evolve_target_sector(target_level, pulses, model, propagation=None,
                         modifiers=NO_MODIFIERS, record=True):
    """Evolve an input with the control atom in |1_c> (exactly inert): 5x5 problem."""
    from . import _engine

    propagation = propagation or Propagation()
    rho0 = np.zeros((5, 5), dtype=complex)
    rho0[target_level, target_level] = 1.0
    return _engine.run_target(rho0, pulses, model, propagation, modifiers, record)


def propagator_oracle(rho0, pulses, model, n_slices, modifiers=NO_MODIFIERS):
    """Piecewise-constant-in-time exact exponential propagation (test oracle).

    Freezes the full Liouvillian at each slice midpoint and applies its exact
    exponential (Taylor to machine precision).  Independent of the fast paths:
    the generator is assembled from the reference operators above.
    """
    from . import _engine

    if isinstance(rho0, str):
        rho0 = basis.basis_state(rho0)
    rho0 = np.asarray(rho0, dtype=complex)
    return _engine.run_oracle(rho0, pulses, model, int(n_slices), modifiers)
