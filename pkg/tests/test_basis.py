import numpy as np
import pytest

from rydgate import basis
from rydgate.dynamics import exchange_hamiltonian
from rydgate.constants import mhz


def test_index_round_trip():
    for i in range(5):
        for j in range(5):
            assert basis.unflatten(basis.pair_index(i, j)) == (i, j)


def test_pair_labels_unique_and_complete():
    assert len(basis.PAIR_LABELS) == 25
    assert len(set(basis.PAIR_LABELS)) == 25
    assert basis.pair_label_index("dd") == 18
    assert basis.pair_label_index("pf") == 24


def test_projector_diagonal_unit():
    p = basis.projector("00", "00")
    expect = np.zeros((25, 25))
    expect[0, 0] = 1.0
    assert np.array_equal(p, expect)


def test_projector_sum_is_identity():
    total = sum(basis.projector(lab, lab) for lab in basis.PAIR_LABELS)
    assert np.array_equal(total, np.eye(25))


def test_exchange_from_projectors():
    b0 = mhz(32.0)
    h = b0 * (basis.projector("dd", "pf") + basis.projector("pf", "dd"))
    assert np.allclose(h, exchange_hamiltonian(b0))
    # the only nonzero entries are the dd<->pf pair
    nz = np.argwhere(h != 0)
    assert sorted(map(tuple, nz)) == [(18, 24), (24, 18)]


def test_unknown_label_rejected():
    with pytest.raises(basis.BasisError, match="q"):
        basis.projector("q0", "00")
    with pytest.raises(basis.BasisError):
        basis.pair_label_index("0x")


def test_embed_identity():
    assert np.array_equal(basis.embed_single("control", np.eye(5)), np.eye(25))
    assert np.array_equal(basis.embed_single("target", np.eye(5)), np.eye(25))


def test_embed_trace_scaling():
    rng = np.random.default_rng(3)
    op = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    emb = basis.embed_single("target", op)
    assert np.isclose(np.trace(emb), 5 * np.trace(op))


def test_embed_preserves_hermiticity_and_spectrum():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    h5 = a + a.conj().T
    h25 = basis.embed_single("control", h5)
    assert basis.hermiticity_defect(h25) < 1e-12
    w5 = np.linalg.eigvalsh(h5)
    w25 = np.linalg.eigvalsh(h25)
    assert np.allclose(np.sort(np.repeat(w5, 5)), w25)


def test_embed_shape_check():
    with pytest.raises(ValueError):
        basis.embed_single("control", np.eye(4))
    with pytest.raises(ValueError):
        basis.embed_single("both", np.eye(5))


def test_density_matrix_validators():
    rho = basis.basis_state("00")
    assert basis.trace_defect(rho) == 0.0
    assert basis.purity(rho) == 1.0
    basis.validate_density_matrix(rho)
    bad = rho.copy()
    bad[0, 1] = 0.5
    with pytest.raises(ValueError, match="Hermitian"):
        basis.validate_density_matrix(bad)
    with pytest.raises(ValueError, match="trace"):
        basis.validate_density_matrix(0.5 * rho)
