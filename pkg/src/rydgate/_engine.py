"""Compiled integrators for the pair (25-dim) and target-sector (5-dim) systems.

Three propagators over the same generator:

* ``adaptive_rk`` - Dormand-Prince 8(5,3) with scipy-compatible step control,
* ``fixed_rk4``   - classic RK4 at fixed step,
* ``magnus``      - 4th-order two-point Magnus slice exponentials (eigh-based)
  with the constant dissipator applied exactly per slice through its
  factorized single-atom exponential (Strang arrangement).

The slice width for ``magnus`` is tuned away from stroboscopic resonances of
the intermediate detuning (slice counts with Delta*h = 0 mod 2pi sample the
fast frame coherently and inflate the splitting error by orders of magnitude).

State is stored as flat complex vec(rho), row-major.
"""

import math

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dc
from scipy.linalg import expm as _expm

from . import basis, model as model_mod
from .dynamics import EvolveResult, NumericalError

# --- DOP853 tableau (scipy layout) -----------------------------------------
_N_STAGES = _dc.N_STAGES          # 12
DP_A = np.ascontiguousarray(_dc.A[:_N_STAGES, :_N_STAGES])
DP_B = np.ascontiguousarray(_dc.B)
DP_C = np.ascontiguousarray(_dc.C[:_N_STAGES])
DP_E3 = np.ascontiguousarray(_dc.E3)
DP_E5 = np.ascontiguousarray(_dc.E5)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0       # error estimator order 7

SQRT3_6 = math.sqrt(3.0) / 6.0
SQRT3_12 = math.sqrt(3.0) / 12.0

# parameter-vector slots
(P_OR_MAX, P_WR, P_TG, P_OB_CONST, P_OBM, P_WB, P_K, P_DCONST, P_D0, P_D1,
 P_D2, P_DELTA, P_RED_CORR, P_BLUE_MODE, P_DELTA_MODE, P_DOPP_B, P_DOPP_R,
 P_INT_R, P_INT_B, P_S_RC, P_S_BC, P_S_RT, P_S_BT, P_DOFF, P_B0,
 P_DOPP_B_T, P_DOPP_R_T, P_INT_R_T, P_INT_B_T, P_INT_R_T1) = range(30)
P_LEN = 30


# ---------------------------------------------------------------------------
# compiled generator pieces

@njit(cache=True)
def _envelopes(t, p):
    tg = p[P_TG]
    g = np.exp(-((t - tg / 2.0) ** 2) / (2.0 * p[P_WR] ** 2))
    if p[P_RED_CORR] > 0.5:
        g0 = np.exp(-((tg / 2.0) ** 2) / (2.0 * p[P_WR] ** 2))
        g = (g - g0) / (1.0 - g0)
    omega_r = p[P_OR_MAX] * g
    if p[P_BLUE_MODE] > 0.5:
        omega_b = p[P_OBM] * np.exp(-((t - tg / 2.0) ** 2) / (2.0 * p[P_WB] ** 2)) + p[P_K]
    else:
        omega_b = p[P_OB_CONST]
    if p[P_DELTA_MODE] > 0.5:
        delta = p[P_D0] + p[P_D1] * np.cos(2.0 * np.pi * t / tg) + p[P_D2] * np.sin(np.pi * t / tg)
    else:
        delta = p[P_DCONST]
    return omega_r, omega_b, delta + p[P_DOFF]


@njit(cache=True)
def _amplitudes(t, p):
    omega_r, omega_b, delta = _envelopes(t, p)
    red_c = (p[P_S_RC] * omega_r + p[P_INT_R]) * np.exp(1j * p[P_DOPP_R] * t)
    ph_rt = np.exp(1j * p[P_DOPP_R_T] * t)
    red_t0 = (p[P_S_RT] * omega_r + p[P_INT_R_T]) * ph_rt
    red_t1 = (p[P_S_RT] * omega_r + p[P_INT_R_T1]) * ph_rt
    blue_c = (p[P_S_BC] * omega_b + p[P_INT_B]) * np.exp(1j * p[P_DOPP_B] * t)
    blue_t = (p[P_S_BT] * omega_b + p[P_INT_B_T]) * np.exp(1j * p[P_DOPP_B_T] * t)
    return red_c, blue_c, red_t0, red_t1, blue_t, delta


@njit(cache=True)
def _fill_pair_h(t, p, h):
    red_c, blue_c, red_t0, red_t1, blue_t, delta = _amplitudes(t, p)
    big = p[P_DELTA]
    h[:, :] = 0.0
    for m in range(5):
        h[2 * 5 + m, 2 * 5 + m] += -big       # control |e>
        h[3 * 5 + m, 3 * 5 + m] += -delta     # control |d>
        h[m * 5 + 2, m * 5 + 2] += -big       # target |e>
        h[m * 5 + 3, m * 5 + 3] += -delta     # target |d>
        a = red_c / 2.0
        h[0 * 5 + m, 2 * 5 + m] += a
        h[2 * 5 + m, 0 * 5 + m] += np.conj(a)
        a = blue_c / 2.0
        h[2 * 5 + m, 3 * 5 + m] += a
        h[3 * 5 + m, 2 * 5 + m] += np.conj(a)
        a = red_t0 / 2.0
        h[m * 5 + 0, m * 5 + 2] += a
        h[m * 5 + 2, m * 5 + 0] += np.conj(a)
        a = red_t1 / 2.0
        h[m * 5 + 1, m * 5 + 2] += a
        h[m * 5 + 2, m * 5 + 1] += np.conj(a)
        a = blue_t / 2.0
        h[m * 5 + 2, m * 5 + 3] += a
        h[m * 5 + 3, m * 5 + 2] += np.conj(a)
    h[3 * 5 + 3, 4 * 5 + 4] += p[P_B0]
    h[4 * 5 + 4, 3 * 5 + 3] += p[P_B0]


@njit(cache=True)
def _fill_target_h(t, p, h):
    _, _, red_t0, red_t1, blue_t, delta = _amplitudes(t, p)
    h[:, :] = 0.0
    h[2, 2] = -p[P_DELTA]
    h[3, 3] = -delta
    a = red_t0 / 2.0
    h[0, 2] = a
    h[2, 0] = np.conj(a)
    a = red_t1 / 2.0
    h[1, 2] = a
    h[2, 1] = np.conj(a)
    a = blue_t / 2.0
    h[2, 3] = a
    h[3, 2] = np.conj(a)


@njit(cache=True)
def _rhs(t, y, p, dim, gmat, lops, deph_mask, has_deph, out, hbuf):
    """Lindblad RHS on flat state y; out and hbuf are scratch."""
    if dim == 25:
        _fill_pair_h(t, p, hbuf)
    else:
        _fill_target_h(t, p, hbuf)
    rho = y.reshape(dim, dim)
    a = -1j * hbuf - gmat
    dr = a @ rho + rho @ a.conj().T
    for j in range(lops.shape[0]):
        lr = lops[j] @ rho
        dr += lr @ lops[j].conj().T
    if has_deph:
        dr += deph_mask * rho
    out[:] = dr.reshape(dim * dim)


@njit(cache=True)
def _rms(x, n):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i].real ** 2 + x[i].imag ** 2
    return math.sqrt(s / n)


@njit(cache=True)
def _dop853_solve(y0, p, dim, gmat, lops, deph_mask, has_deph,
                  t_grid, rtol, atol):
    """Adaptive 8(5,3) integration recording the state at every grid time.

    Returns (states (n_grid, m), status, nfev); status 1 = step underflow.
    """
    m = dim * dim
    n_grid = t_grid.shape[0]
    states = np.empty((n_grid, m), dtype=np.complex128)
    states[0] = y0
    y = y0.copy()
    t = t_grid[0]
    t_end = t_grid[n_grid - 1]

    k_stages = np.empty((_N_STAGES + 1, m), dtype=np.complex128)
    f = np.empty(m, dtype=np.complex128)
    hbuf = np.empty((dim, dim), dtype=np.complex128)
    ytmp = np.empty(m, dtype=np.complex128)
    err5 = np.empty(m, dtype=np.complex128)
    err3 = np.empty(m, dtype=np.complex128)

    nfev = 0
    _rhs(t, y, p, dim, gmat, lops, deph_mask, has_deph, f, hbuf)
    nfev += 1

    # initial step (scipy select_initial_step)
    d0 = 0.0
    d1 = 0.0
    for i in range(m):
        sc = atol + abs(y[i]) * rtol
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(f[i]) / sc) ** 2
    d0 = math.sqrt(d0 / m)
    d1 = math.sqrt(d1 / m)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_end - t)
    for i in range(m):
        ytmp[i] = y[i] + h0 * f[i]
    _rhs(t + h0, ytmp, p, dim, gmat, lops, deph_mask, has_deph, err5, hbuf)
    nfev += 1
    d2 = 0.0
    for i in range(m):
        sc = atol + abs(y[i]) * rtol
        d2 += (abs(err5[i] - f[i]) / sc) ** 2
    d2 = math.sqrt(d2 / m) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    h_abs = min(100.0 * h0, h1, t_end - t)

    grid_idx = 1
    min_step_floor = 1e-13
    while grid_idx < n_grid:
        t_target = t_grid[grid_idx]
        step_rejected = False
        while t < t_target - 1e-15 * max(1.0, abs(t_target)):
            if h_abs < min_step_floor:
                return states, 1, nfev
            h = h_abs
            hit = False
            if t + h >= t_target:
                h = t_target - t
                hit = True
            # rk_step
            for i in range(m):
                k_stages[0, i] = f[i]
            for s in range(1, _N_STAGES):
                for i in range(m):
                    acc = 0.0 + 0.0j
                    for q in range(s):
                        aq = DP_A[s, q]
                        if aq != 0.0:
                            acc += k_stages[q, i] * aq
                    ytmp[i] = y[i] + h * acc
                _rhs(t + DP_C[s] * h, ytmp, p, dim, gmat, lops, deph_mask,
                     has_deph, k_stages[s], hbuf)
                nfev += 1
            for i in range(m):
                acc = 0.0 + 0.0j
                for q in range(_N_STAGES):
                    bq = DP_B[q]
                    if bq != 0.0:
                        acc += k_stages[q, i] * bq
                ytmp[i] = y[i] + h * acc
            _rhs(t + h, ytmp, p, dim, gmat, lops, deph_mask, has_deph,
                 k_stages[_N_STAGES], hbuf)
            nfev += 1
            # error estimate (scipy DOP853 combination)
            e5n = 0.0
            e3n = 0.0
            for i in range(m):
                acc5 = 0.0 + 0.0j
                acc3 = 0.0 + 0.0j
                for q in range(_N_STAGES + 1):
                    if DP_E5[q] != 0.0:
                        acc5 += k_stages[q, i] * DP_E5[q]
                    if DP_E3[q] != 0.0:
                        acc3 += k_stages[q, i] * DP_E3[q]
                sc = atol + max(abs(y[i]), abs(ytmp[i])) * rtol
                e5n += (abs(acc5) / sc) ** 2
                e3n += (abs(acc3) / sc) ** 2
            if e5n == 0.0 and e3n == 0.0:
                error_norm = 0.0
            else:
                denom = e5n + 0.01 * e3n
                error_norm = abs(h) * e5n / math.sqrt(denom * m)
            if error_norm < 1.0:
                if error_norm == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * error_norm ** ERROR_EXPONENT)
                if step_rejected:
                    factor = min(1.0, factor)
                t = t_target if hit else t + h
                for i in range(m):
                    y[i] = ytmp[i]
                    f[i] = k_stages[_N_STAGES, i]
                h_abs = h * factor if hit else h_abs * factor
                step_rejected = False
            else:
                h_abs = h * max(MIN_FACTOR, SAFETY * error_norm ** ERROR_EXPONENT)
                step_rejected = True
        states[grid_idx] = y
        grid_idx += 1
    return states, 0, nfev


@njit(cache=True)
def _rk4_solve(y0, p, dim, gmat, lops, deph_mask, has_deph, t_grid, dt):
    """Classic fixed-step RK4 aligned to the sampling grid."""
    m = dim * dim
    n_grid = t_grid.shape[0]
    states = np.empty((n_grid, m), dtype=np.complex128)
    states[0] = y0
    y = y0.copy()
    hbuf = np.empty((dim, dim), dtype=np.complex128)
    k1 = np.empty(m, dtype=np.complex128)
    k2 = np.empty(m, dtype=np.complex128)
    k3 = np.empty(m, dtype=np.complex128)
    k4 = np.empty(m, dtype=np.complex128)
    ytmp = np.empty(m, dtype=np.complex128)
    for g in range(1, n_grid):
        t0 = t_grid[g - 1]
        t1 = t_grid[g]
        span = t1 - t0
        nsub = max(1, int(round(span / dt)))
        h = span / nsub
        for _ in range(nsub):
            _rhs(t0, y, p, dim, gmat, lops, deph_mask, has_deph, k1, hbuf)
            for i in range(m):
                ytmp[i] = y[i] + 0.5 * h * k1[i]
            _rhs(t0 + 0.5 * h, ytmp, p, dim, gmat, lops, deph_mask, has_deph, k2, hbuf)
            for i in range(m):
                ytmp[i] = y[i] + 0.5 * h * k2[i]
            _rhs(t0 + 0.5 * h, ytmp, p, dim, gmat, lops, deph_mask, has_deph, k3, hbuf)
            for i in range(m):
                ytmp[i] = y[i] + h * k3[i]
            _rhs(t0 + h, ytmp, p, dim, gmat, lops, deph_mask, has_deph, k4, hbuf)
            for i in range(m):
                y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            t0 += h
        states[g] = y
    return states, 0, 0


@njit(cache=True)
def _diss_step_pair(rho, ec, et):
    """Apply exp(D*h) = exp(D_c*h) (x) exp(D_t*h) to a 25x25 pair state."""
    t4 = rho.reshape(5, 5, 5, 5)
    x = t4.transpose(0, 2, 1, 3).copy().reshape(25, 25)
    x = ec @ x @ et.T
    return x.reshape(5, 5, 5, 5).transpose(0, 2, 1, 3).copy().reshape(25, 25)


@njit(cache=True)
def _magnus_solve(y0, p, dim, ec, et, ech, eth, t_grid, k_per_interval):
    """Magnus-4 slice propagation with exact dissipator sub-steps (Strang)."""
    m = dim * dim
    n_grid = t_grid.shape[0]
    states = np.empty((n_grid, m), dtype=np.complex128)
    states[0] = y0
    rho = y0.copy().reshape(dim, dim)
    h1 = np.empty((dim, dim), dtype=np.complex128)
    h2 = np.empty((dim, dim), dtype=np.complex128)
    c1 = 0.5 - SQRT3_6
    c2 = 0.5 + SQRT3_6
    for g in range(1, n_grid):
        t0 = t_grid[g - 1]
        span = t_grid[g] - t0
        h = span / k_per_interval
        # half dissipator step
        if dim == 25:
            rho = _diss_step_pair(rho, ech, eth)
        else:
            rho = (eth @ rho.reshape(m)).reshape(dim, dim).copy()
        for k in range(k_per_interval):
            ts = t0 + k * h
            if dim == 25:
                _fill_pair_h(ts + c1 * h, p, h1)
                _fill_pair_h(ts + c2 * h, p, h2)
            else:
                _fill_target_h(ts + c1 * h, p, h1)
                _fill_target_h(ts + c2 * h, p, h2)
            comm = h2 @ h1 - h1 @ h2
            heff = 0.5 * (h1 + h2) + (1j * SQRT3_12 * h) * comm
            w, u = np.linalg.eigh(heff)
            prop = (u * np.exp(-1j * w * h)) @ u.conj().T
            rho = prop @ rho @ prop.conj().T
            if k < k_per_interval - 1:
                if dim == 25:
                    rho = _diss_step_pair(rho, ec, et)
                else:
                    rho = (et @ rho.reshape(m)).reshape(dim, dim).copy()
        if dim == 25:
            rho = _diss_step_pair(rho, ech, eth)
        else:
            rho = (eth @ rho.reshape(m)).reshape(dim, dim).copy()
        states[g] = rho.reshape(m)
    return states, 0, 0


@njit(cache=True)
def _oracle_apply(rows, cols, vals, nnz_static, dyn_src, src_tab, y, h, scratch):
    """y <- exp(L*h) y by Taylor on the frozen COO generator (machine precision)."""
    m = y.shape[0]
    term = scratch
    for i in range(m):
        term[i] = y[i]
    k = 1
    while True:
        nxt = np.zeros(m, dtype=np.complex128)
        for e in range(rows.shape[0]):
            v = vals[e]
            if e >= nnz_static:
                v = v * src_tab[dyn_src[e - nnz_static]]
            nxt[rows[e]] += v * term[cols[e]]
        mx = 0.0
        for i in range(m):
            nxt[i] *= h / k
            a = abs(nxt[i])
            if a > mx:
                mx = a
            y[i] += nxt[i]
            term[i] = nxt[i]
        k += 1
        if mx < 1e-18 or k > 60:
            break
    return y


@njit(cache=True)
def _oracle_chunk(rows, cols, vals, nnz_static, dyn_src, y, h, src_chunk):
    scratch = np.empty(y.shape[0], dtype=np.complex128)
    for s in range(src_chunk.shape[0]):
        y = _oracle_apply(rows, cols, vals, nnz_static, dyn_src, src_chunk[s], y, h, scratch)
    return y


# ---------------------------------------------------------------------------
# python-side plan building and drivers

def pack_params(pulses, b0, modifiers):
    p = np.zeros(P_LEN, dtype=float)
    red, blue, det = pulses.red, pulses.blue, pulses.detuning
    p[P_OR_MAX] = red.omega_max
    p[P_WR] = red.width
    p[P_TG] = pulses.gate_time
    p[P_OB_CONST] = blue.omega_const
    p[P_OBM] = blue.omega_gauss
    p[P_WB] = blue.width
    p[P_K] = blue.offset
    p[P_DCONST] = det.value
    p[P_D0], p[P_D1], p[P_D2] = det.d0, det.d1, det.d2
    p[P_DELTA] = pulses.delta_big
    p[P_RED_CORR] = 1.0 if red.corrected else 0.0
    p[P_BLUE_MODE] = 1.0 if blue.mode == "gaussian_offset" else 0.0
    p[P_DELTA_MODE] = 1.0 if det.mode == "modulated" else 0.0
    m = modifiers
    p[P_DOPP_B], p[P_DOPP_R] = m.doppler_blue, m.doppler_red
    p[P_DOPP_B_T], p[P_DOPP_R_T] = m.doppler_target
    p[P_INT_R], p[P_INT_B] = m.intensity_red, m.intensity_blue
    (p[P_INT_R_T], p[P_INT_R_T1]), p[P_INT_B_T] = m.intensity_target_legs, m.intensity_target[1]
    p[P_S_RC], p[P_S_BC] = m.scale_red_control, m.scale_blue_control
    p[P_S_RT], p[P_S_BT] = m.scale_red_target, m.scale_blue_target
    p[P_DOFF] = m.detuning_offset
    p[P_B0] = b0
    return p


def _lindblad_arrays(atoms, model, dim):
    """(G, stacked jump ops, dephasing sandwich mask, has_deph) for the engine."""
    lops_dense = []
    deph_diags = []
    for atom in atoms:
        jumps = model_mod.atom_jump_operators(
            atom, model.decays, model.per_channel_jumps, model.jump_normalization)
        deph = model_mod.atom_dephasing_operator(
            atom, model.dephasing, model.control_eg_dephasing)
        if dim == 25:
            jumps = [basis.embed_single(atom, op) for op in jumps]
            if deph is not None:
                deph = basis.embed_single(atom, deph)
        lops_dense.extend(jumps)
        if deph is not None:
            deph_diags.append(np.diag(deph))
    gmat = np.zeros((dim, dim), dtype=complex)
    for lop in lops_dense:
        gmat += 0.5 * (lop.conj().T @ lop)
    mask = np.zeros((dim, dim), dtype=complex)
    for d in deph_diags:
        gmat += 0.5 * np.diag(np.abs(d) ** 2)
        mask += np.outer(d, d.conj())
    has_deph = bool(deph_diags)
    lops_arr = (np.stack(lops_dense) if lops_dense
                else np.zeros((0, dim, dim), dtype=complex))
    return np.ascontiguousarray(gmat), np.ascontiguousarray(lops_arr), \
        np.ascontiguousarray(mask), has_deph


def _atom_dissipator_super(atom, model):
    """Single-atom vec-superoperator of all Lindblad terms (25x25)."""
    ops = model_mod.atom_lindblad_operators(
        atom, model.decays, model.dephasing, model.per_channel_jumps,
        model.jump_normalization, model.control_eg_dephasing,
    )
    eye = np.eye(5, dtype=complex)
    out = np.zeros((25, 25), dtype=complex)
    for lop in ops:
        g = 0.5 * (lop.conj().T @ lop)
        out += np.kron(lop, lop.conj()) - np.kron(g, eye) - np.kron(eye, g.T)
    return out


def _phase_distance(x):
    r = math.fmod(x, 2.0 * math.pi)
    if r < 0:
        r += 2.0 * math.pi
    return min(r, 2.0 * math.pi - r)


def pick_slice_count(span, delta_big, target_h):
    """Slices per span avoiding Delta*h (and 2*Delta*h) near 0 mod 2pi."""
    base = max(1, math.ceil(span / target_h))
    best_n, best_score = base, -1.0
    for n in range(base, base + 24):
        h = span / n
        score = min(_phase_distance(delta_big * h),
                    0.5 * _phase_distance(2.0 * delta_big * h))
        if score > best_score + 1e-12:
            best_n, best_score = n, score
        if best_score > 1.2:
            break
    return best_n


def _time_grid(gate_time, sample_points, record):
    if record and sample_points > 0:
        return np.linspace(0.0, gate_time, sample_points + 1)
    return np.array([0.0, gate_time])


def _run(y0, dim, atoms, pulses, model, propagation, modifiers, record):
    p = pack_params(pulses, model.b0, modifiers)
    gmat, lops, mask, has_deph = _lindblad_arrays(atoms, model, dim)
    t_grid = _time_grid(pulses.gate_time, propagation.sample_points, record)
    if propagation.method == "adaptive_rk":
        states, status, _ = _dop853_solve(
            y0.reshape(-1).astype(complex), p, dim, gmat, lops, mask, has_deph,
            t_grid, propagation.rtol, propagation.atol)
    elif propagation.method == "fixed_rk4":
        states, status, _ = _rk4_solve(
            y0.reshape(-1).astype(complex), p, dim, gmat, lops, mask, has_deph,
            t_grid, propagation.dt)
    else:
        interval = t_grid[1] - t_grid[0]
        k = pick_slice_count(interval, pulses.delta_big, propagation.slice_width)
        ds = [_atom_dissipator_super(a, model) for a in atoms]
        h = interval / k
        if dim == 25:
            ec, et = _expm(ds[0] * h), _expm(ds[1] * h)
            ech, eth = _expm(ds[0] * h / 2), _expm(ds[1] * h / 2)
        else:
            et = _expm(ds[0] * h)
            eth = _expm(ds[0] * h / 2)
            ec, ech = et, eth
        states, status, _ = _magnus_solve(
            y0.reshape(-1).astype(complex), p, dim,
            np.ascontiguousarray(ec), np.ascontiguousarray(et),
            np.ascontiguousarray(ech), np.ascontiguousarray(eth), t_grid, k)
    if status != 0:
        scale = max(abs(pulses.delta_big) * 2.0, 1.0)
        raise NumericalError(
            "adaptive step size underflow; the generator's largest frequency "
            f"scale is ~{scale:.3g} rad/us (intermediate detuning)"
        )
    rhos = states.reshape(len(t_grid), dim, dim)
    pops = np.real(np.einsum("tii->ti", rhos))
    trace = pops.sum(axis=1)
    pur = np.real(np.einsum("tij,tji->t", rhos, rhos))
    return EvolveResult(times=t_grid, rho_final=rhos[-1].copy(),
                        populations=pops, trace=trace, purity=pur,
                        rhos=rhos if record else None)


def run_pair(rho0, pulses, model, propagation, modifiers, record):
    return _run(rho0, 25, ("control", "target"), pulses, model, propagation,
                modifiers, record)


def run_target(rho0, pulses, model, propagation, modifiers, record):
    return _run(rho0, 5, ("target",), pulses, model, propagation, modifiers, record)


# ---------------------------------------------------------------------------
# oracle: frozen-slice exact exponentials on the sparse reference Liouvillian

def _super_commutator(hmat):
    import scipy.sparse as sp

    dim = hmat.shape[0]
    eye = sp.identity(dim, format="csr", dtype=complex)
    hs = sp.csr_matrix(hmat)
    return (-1j * (sp.kron(hs, eye) - sp.kron(eye, hs.T))).tocoo()


def _oracle_parts(dim, atoms, pulses, model):
    """Static COO + per-source COO patterns, assembled from reference operators."""
    import scipy.sparse as sp

    from . import dynamics

    eye = sp.identity(dim, format="csr", dtype=complex)
    static = sp.coo_matrix((dim * dim, dim * dim), dtype=complex)
    # static Hamiltonian pieces: intermediate detuning diagonal + exchange
    e_proj = basis.single_atom_op([(basis.E, basis.E, 1.0)])
    h_static = np.zeros((dim, dim), dtype=complex)
    if dim == 25:
        h_static += -pulses.delta_big * (
            basis.embed_single("control", e_proj) + basis.embed_single("target", e_proj)
        )
        h_static += dynamics.exchange_hamiltonian(model.b0)
    else:
        h_static += -pulses.delta_big * e_proj
    static = static + _super_commutator(h_static)
    # dissipator (constant)
    for atom in atoms:
        for lop in model_mod.atom_lindblad_operators(
            atom, model.decays, model.dephasing, model.per_channel_jumps,
            model.jump_normalization, model.control_eg_dephasing,
        ):
            if dim == 25:
                lop = basis.embed_single(atom, lop)
            ls = sp.csr_matrix(lop)
            g = sp.csr_matrix(0.5 * (lop.conj().T @ lop))
            static = static + sp.kron(ls, ls.conj()) - sp.kron(g, eye) - sp.kron(eye, g.T)
    # dynamic sources: one coupling pattern per source (value and conjugate
    # separately), plus the real detuning diagonal
    d_proj = basis.single_atom_op([(basis.D, basis.D, 1.0)])
    couplings = []
    if dim == 25:
        mk = basis.embed_single
        couplings.append(mk("control", basis.single_atom_op([(basis.G0, basis.E, 0.5)])))
        couplings.append(mk("control", basis.single_atom_op([(basis.E, basis.D, 0.5)])))
        couplings.append(mk("target", basis.single_atom_op([(basis.G0, basis.E, 0.5)])))
        couplings.append(mk("target", basis.single_atom_op([(basis.G1, basis.E, 0.5)])))
        couplings.append(mk("target", basis.single_atom_op([(basis.E, basis.D, 0.5)])))
        delta_diag = -(mk("control", d_proj) + mk("target", d_proj))
    else:
        couplings.append(basis.single_atom_op([(basis.G0, basis.E, 0.5)]))
        couplings.append(basis.single_atom_op([(basis.G1, basis.E, 0.5)]))
        couplings.append(basis.single_atom_op([(basis.E, basis.D, 0.5)]))
        delta_diag = -d_proj
    parts = []
    for x in couplings:
        parts.append(_super_commutator(x))              # coefficient amp
        parts.append(_super_commutator(x.conj().T))     # coefficient conj(amp)
    parts.append(_super_commutator(delta_diag))         # coefficient delta(t)
    return static.tocoo(), parts


def _oracle_sources(dim, t_mid, pulses, modifiers):
    """Source table (n_t, n_src) from the reference pulse evaluators."""
    from .dynamics import drive_amplitudes
    from .pulses import eval_detuning

    red_c, blue_c, red_t0, red_t1, blue_t = drive_amplitudes(t_mid, pulses, modifiers)
    delta = eval_detuning(t_mid, pulses.detuning) + modifiers.detuning_offset
    cols = []
    if dim == 25:
        for amp in (red_c, blue_c, red_t0, red_t1, blue_t):
            cols.append(amp)
            cols.append(np.conj(amp))
    else:
        for amp in (red_t0, red_t1, blue_t):
            cols.append(amp)
            cols.append(np.conj(amp))
    cols.append(delta + 0j)
    return np.column_stack([np.broadcast_to(c, t_mid.shape) for c in cols])


def run_oracle(rho0, pulses, model, n_slices, modifiers, chunk=20000):
    """Exact exponential propagation over n_slices frozen midpoint generators."""
    dim = rho0.shape[0]
    atoms = ("control", "target") if dim == 25 else ("target",)
    static, parts = _oracle_parts(dim, atoms, pulses, model)
    rows = [static.row]
    cols = [static.col]
    vals = [static.data]
    srcs = []
    for sid, part in enumerate(parts):
        rows.append(part.row)
        cols.append(part.col)
        vals.append(part.data)
        srcs.append(np.full(len(part.data), sid, dtype=np.int64))
    rows = np.concatenate(rows).astype(np.int64)
    cols = np.concatenate(cols).astype(np.int64)
    vals = np.concatenate(vals).astype(np.complex128)
    dyn_src = np.concatenate(srcs).astype(np.int64) if srcs else np.zeros(0, np.int64)
    nnz_static = len(static.data)

    h = pulses.gate_time / n_slices
    y = rho0.reshape(-1).astype(complex)
    done = 0
    while done < n_slices:
        n = min(chunk, n_slices - done)
        t_mid = (done + np.arange(n) + 0.5) * h
        src_tab = _oracle_sources(dim, t_mid, pulses, modifiers)
        y = _oracle_chunk(rows, cols, vals, nnz_static, dyn_src, y, h,
                          np.ascontiguousarray(src_tab))
        done += n
    return y.reshape(dim, dim)
