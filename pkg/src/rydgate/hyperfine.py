"""Realistic multi-hyperfine-intermediate-state model, adiabatically reduced.

The intermediate manifold |5P_3/2, f_e=1..3> is eliminated, leaving a
3(+aux)-level atom: {|0>, |1>, |d>, aux} with effective two-photon couplings,
ac-Stark-shifted detunings, and dressed decay rates that follow the drive
envelopes in time.  The pair system is 16-dimensional and carries the same
|d_c d_t> <-> |pf> exchange as the main model.

The reduced master equation is stiff-free (no intermediate detuning on the
diagonal), so a scipy adaptive integrator is plenty.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .constants import ghz
from .fidelity import FidelityReport
from .pulses import eval_blue, eval_detuning, eval_red

# reduced per-atom levels
R_G0, R_G1, R_D, R_AUX = 0, 1, 2, 3
RDIM = 4
PAIR_RDIM = 16

#: reduced computational targets under CNOT, pair index = 4*control + target
_INPUT_INDEX = {"00": 0, "01": 1, "10": 4 + 0, "11": 4 + 1}
_TARGET_INDEX = {"00": 0, "01": 1, "10": 4 + 1, "11": 4 + 0}


@dataclass(frozen=True)
class HyperfineTable:
    """Dipole coefficients and detunings of the intermediate hyperfine states.

    A missing (dipole-forbidden) coefficient is stored as exactly zero.
    """

    alpha_r: tuple = (math.sqrt(5.0 / 24.0), math.sqrt(1.0 / 8.0), 0.0)
    alpha_0: tuple = (math.sqrt(1.0 / 120.0), math.sqrt(1.0 / 8.0), math.sqrt(1.0 / 5.0))
    delta_fe: tuple = (ghz(4.0), ghz(3.843), ghz(3.576))   # rad/us

    def __post_init__(self):
        if not (len(self.alpha_r) == len(self.alpha_0) == len(self.delta_fe)):
            raise ValueError("hyperfine table rows must have equal length")
        if any(d == 0 for d in self.delta_fe):
            raise ValueError("hyperfine detunings must be nonzero")


@dataclass(frozen=True)
class ReducedModel:
    """Effective couplings/detunings/rates at one instant."""

    omega_n: float
    omega_n0: float
    omega_m: float
    delta_e: float
    delta_e0: float
    delta_r: float
    gamma_d_prime: float
    gamma_d_dprime: float


def reduced_couplings(omega_r, omega_b, table, delta, delta_prime):
    """Effective couplings and detunings from the hyperfine sums.

    Term-wise evaluation keeps the single-state degeneration bit-identical to
    the simple-model effective parameters.
    """
    omega_n = 0.0
    omega_n0 = 0.0
    omega_m = 0.0
    stark_r = 0.0
    stark_0 = 0.0
    stark_rb = 0.0   # (a_r*W_r)^2 - W_b^2 sums
    stark_0b = 0.0
    for a_r, a_0, d_fe in zip(table.alpha_r, table.alpha_0, table.delta_fe):
        w_r = a_r * omega_r
        w_0 = a_0 * omega_r
        omega_n += w_r * omega_b / (2.0 * d_fe)
        omega_n0 += w_0 * omega_b / (2.0 * d_fe)
        omega_m += w_r * w_0 / (2.0 * d_fe)
        stark_rb += (w_r**2 - omega_b**2) / (4.0 * d_fe)
        stark_0b += (w_0**2 - omega_b**2) / (4.0 * d_fe)
        stark_r += w_r**2 / (4.0 * d_fe)
        stark_0 += w_0**2 / (4.0 * d_fe)
    delta_e = stark_rb + delta
    delta_e0 = stark_0b + delta - delta_prime
    delta_r = (stark_r - stark_0) + delta_prime
    return omega_n, omega_n0, omega_m, delta_e, delta_e0, delta_r


def dressed_decays(omega_r, omega_b, table, gamma_e, gamma_d):
    """Rydberg decay rates dressed by the eliminated intermediate states."""
    g1 = gamma_d
    g2 = gamma_d
    for a_r, a_0, d_fe in zip(table.alpha_r, table.alpha_0, table.delta_fe):
        g1 += ((a_r * omega_r) ** 2 + omega_b**2) / (4.0 * d_fe**2) * gamma_e
        g2 += ((a_0 * omega_r) ** 2 + omega_b**2) / (4.0 * d_fe**2) * gamma_e
    return g1, g2


def snapshot(t, pulses, table, delta_prime_mode, delta_prime, gamma_e, gamma_d):
    """ReducedModel at time t for the configured delta' mode."""
    omega_r = eval_red(t, pulses.red)
    omega_b = eval_blue(t, pulses.blue)
    delta = eval_detuning(t, pulses.detuning)
    dp = _delta_prime_value(delta_prime_mode, delta_prime, omega_r, table)
    on, on0, om, de, de0, dr = reduced_couplings(omega_r, omega_b, table, delta, dp)
    g1, g2 = dressed_decays(omega_r, omega_b, table, gamma_e, gamma_d)
    return ReducedModel(on, on0, om, de, de0, dr, g1, g2)


def _delta_prime_value(mode, fixed_value, omega_r, table):
    if mode == "zero":
        return 0.0
    if mode == "fixed":
        return fixed_value
    if mode == "dynamic":
        # exactly cancels the differential Raman Stark shift: delta_R == 0
        s = 0.0
        for a_r, a_0, d_fe in zip(table.alpha_r, table.alpha_0, table.delta_fe):
            s += ((a_r * omega_r) ** 2 - (a_0 * omega_r) ** 2) / (4.0 * d_fe)
        return -s
    raise ValueError(f"unknown delta_prime mode {mode!r}")


# ---------------------------------------------------------------------------
# reduced-pair master equation

def _pair_idx(c, t):
    return RDIM * c + t


def _embed_c(op):
    return np.kron(op, np.eye(RDIM, dtype=complex))


def _embed_t(op):
    return np.kron(np.eye(RDIM, dtype=complex), op)


def _reduced_hamiltonians(rm, b0):
    """(H_pair,) for one snapshot of the reduced couplings."""
    hc = np.zeros((RDIM, RDIM), dtype=complex)
    hc[R_D, R_D] = -rm.delta_e
    hc[R_G0, R_D] = rm.omega_n / 2.0
    hc[R_D, R_G0] = rm.omega_n / 2.0

    ht = np.zeros((RDIM, RDIM), dtype=complex)
    ht[R_D, R_D] = -rm.delta_e
    ht[R_G1, R_G1] = -rm.delta_r
    ht[R_G0, R_D] = rm.omega_n / 2.0
    ht[R_D, R_G0] = rm.omega_n / 2.0
    ht[R_G1, R_D] = rm.omega_n0 / 2.0
    ht[R_D, R_G1] = rm.omega_n0 / 2.0
    ht[R_G0, R_G1] = rm.omega_m / 2.0
    ht[R_G1, R_G0] = rm.omega_m / 2.0

    h = _embed_c(hc) + _embed_t(ht)
    dd = _pair_idx(R_D, R_D)
    pf = _pair_idx(R_AUX, R_AUX)
    h[dd, pf] += b0
    h[pf, dd] += b0
    return h


def _branch(rate, normalization):
    if normalization == "half":
        return math.sqrt(rate / 2.0)
    return math.sqrt(rate)


def _reduced_jumps(g_dp, g_dpp, gamma_p, gamma_f, normalization):
    """Pair jump operators of the reduced model (time-dependent rates)."""
    l1 = np.zeros((RDIM, RDIM), dtype=complex)
    a = _branch(g_dp, normalization)
    l1[R_G0, R_D] = a
    l1[R_G1, R_D] = a
    b = _branch(gamma_p, normalization)
    l1[R_G0, R_AUX] += b
    l1[R_G1, R_AUX] += b

    l2 = np.zeros((RDIM, RDIM), dtype=complex)
    l2[R_G0, R_D] = _branch(g_dp, normalization)
    l2[R_G1, R_D] = _branch(g_dpp, normalization)
    c = _branch(gamma_f, normalization)
    l2[R_G0, R_AUX] += c
    l2[R_G1, R_AUX] += c
    return _embed_c(l1), _embed_t(l2)


@dataclass
class ReducedGateResult:
    report: FidelityReport
    finals: dict
    times: np.ndarray
    populations: dict       # input label -> (n_t, 16)
    delta_prime_mode: str
    gate_time: float
    max_abs_delta_r: float  # pointwise |delta_R| over the run (dynamic mode gives 0)


def evolve_reduced(pulses, model, table=None, delta_prime_mode="zero",
                   delta_prime=0.0, rtol=1e-9, atol=1e-12, sample_points=400):
    """Integrate the reduced master equation for all four computational inputs."""
    table = table or HyperfineTable()
    b0 = model.b0
    gamma_e = model.decays.gamma_e
    gamma_d = model.decays.gamma_d
    norm = model.jump_normalization

    def rhs(t, y):
        rm = snapshot(t, pulses, table, delta_prime_mode, delta_prime,
                      gamma_e, gamma_d)
        h = _reduced_hamiltonians(rm, b0)
        l1, l2 = _reduced_jumps(rm.gamma_d_prime, rm.gamma_d_dprime,
                                model.decays.gamma_p, model.decays.gamma_f, norm)
        rho = y.reshape(PAIR_RDIM, PAIR_RDIM)
        out = -1j * (h @ rho - rho @ h)
        for lop in (l1, l2):
            ld = lop.conj().T
            out += lop @ rho @ ld - 0.5 * (ld @ lop @ rho + rho @ ld @ lop)
        return out.reshape(-1)

    times = np.linspace(0.0, pulses.gate_time, sample_points + 1)
    finals = {}
    pops = {}
    for label, idx in _INPUT_INDEX.items():
        rho0 = np.zeros((PAIR_RDIM, PAIR_RDIM), dtype=complex)
        rho0[idx, idx] = 1.0
        sol = solve_ivp(rhs, (0.0, pulses.gate_time), rho0.reshape(-1),
                        method="DOP853", rtol=rtol, atol=atol, t_eval=times)
        if not sol.success:
            raise RuntimeError(f"reduced-model integration failed: {sol.message}")
        rhos = sol.y.T.reshape(len(times), PAIR_RDIM, PAIR_RDIM)
        finals[label] = rhos[-1]
        pops[label] = np.real(np.einsum("tii->ti", rhos))

    overlaps = {}
    for label in _INPUT_INDEX:
        k = _TARGET_INDEX[label]
        overlaps[label] = float(np.clip(finals[label][k, k].real, 0.0, 1.0))
    vals = np.array(list(overlaps.values()))
    report = FidelityReport(
        fidelity=float(vals.mean()),
        fidelity_uhlmann=float(np.sqrt(vals).mean()),
        per_input=overlaps,
    )
    tt = np.linspace(0.0, pulses.gate_time, 801)
    dr = [abs(snapshot(t, pulses, table, delta_prime_mode, delta_prime,
                       gamma_e, gamma_d).delta_r) for t in tt]
    return ReducedGateResult(
        report=report, finals=finals, times=times, populations=pops,
        delta_prime_mode=delta_prime_mode, gate_time=pulses.gate_time,
        max_abs_delta_r=float(max(dr)),
    )
