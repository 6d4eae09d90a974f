"""Two-atom Hilbert space, basis indexing, and elementary operators.

Each atom has 5 levels ordered (|0>, |1>, |e>, |d>, aux) where aux is the
second Rydberg pair-state component: |p> on the control atom, |f> on the
target.  Pair states are flattened control-major, so
flat index = 5*control_level + target_level.
"""

import numpy as np

DIM_ATOM = 5
DIM_PAIR = 25

# level positions within one atom
G0, G1, E, D, AUX = 0, 1, 2, 3, 4

CONTROL_LEVELS = ("0", "1", "e", "d", "p")
TARGET_LEVELS = ("0", "1", "e", "d", "f")

#: flat pair labels, control letter then target letter ("00", "0e", ... "pf")
PAIR_LABELS = tuple(c + t for c in CONTROL_LEVELS for t in TARGET_LEVELS)

#: computational-basis input labels in spec order
COMPUTATIONAL_INPUTS = ("00", "01", "10", "11")


class BasisError(ValueError):
    """Unknown level or pair-state label."""


def level_index(atom, label):
    """Index of a single-atom level label; atom is 'control' or 'target'."""
    levels = CONTROL_LEVELS if atom == "control" else TARGET_LEVELS
    try:
        return levels.index(label)
    except ValueError:
        raise BasisError(
            f"unknown {atom} level label {label!r}; valid: {levels}"
        ) from None


def pair_index(control_level, target_level):
    """Flat index of the pair state (control-major)."""
    return DIM_ATOM * control_level + target_level


def unflatten(index):
    """Inverse of pair_index."""
    return divmod(index, DIM_ATOM)


def pair_label_index(label):
    """Flat index of a two-character pair label like '0d' or 'pf'."""
    if len(label) != 2:
        raise BasisError(f"pair label must be two characters, got {label!r}")
    return pair_index(level_index("control", label[0]), level_index("target", label[1]))


def projector(bra, ket):
    """25x25 matrix |bra><ket| from pair labels."""
    out = np.zeros((DIM_PAIR, DIM_PAIR), dtype=complex)
    out[pair_label_index(bra), pair_label_index(ket)] = 1.0
    return out


def embed_single(atom, op):
    """Embed a 5x5 single-atom operator into the 25-dim pair space."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (DIM_ATOM, DIM_ATOM):
        raise ValueError(f"expected a {DIM_ATOM}x{DIM_ATOM} operator, got {op.shape}")
    eye = np.eye(DIM_ATOM, dtype=complex)
    if atom == "control":
        return np.kron(op, eye)
    if atom == "target":
        return np.kron(eye, op)
    raise ValueError(f"atom must be 'control' or 'target', got {atom!r}")


def single_atom_op(entries):
    """5x5 matrix from (row, col, value) triples."""
    out = np.zeros((DIM_ATOM, DIM_ATOM), dtype=complex)
    for r, c, v in entries:
        out[r, c] += v
    return out


def basis_state(label):
    """Pure density matrix |label><label| for a pair label."""
    rho = np.zeros((DIM_PAIR, DIM_PAIR), dtype=complex)
    i = pair_label_index(label)
    rho[i, i] = 1.0
    return rho


# ---------------------------------------------------------------------------
# density-matrix validation helpers (tolerances from the data contract)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
MIN_EIGVAL_TOL = -1e-7


def hermiticity_defect(rho):
    return float(np.abs(rho - rho.conj().T).max())


def trace_defect(rho):
    return float(abs(np.trace(rho).real - 1.0))


def min_eigenvalue(rho):
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())


def purity(rho):
    return float(np.trace(rho @ rho).real)


def validate_density_matrix(rho, context=""):
    """Raise if rho violates the Hermiticity/trace/positivity contract."""
    where = f" ({context})" if context else ""
    h = hermiticity_defect(rho)
    if h > HERMITICITY_TOL:
        raise ValueError(f"density matrix not Hermitian{where}: defect {h:.2e}")
    t = trace_defect(rho)
    if t > 1e-6:
        raise ValueError(f"density matrix trace off by {t:.2e}{where}")
    return rho
