import numpy as np
import pytest

from ionmagnet.spins import PAULI, READOUT, apply_single, label, popcount, rotate_from_basis, rotate_to_basis, spin_values


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_readout_diagonalizes_its_pauli(axis):
    u = READOUT[axis]
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(u @ PAULI[axis] @ u.conj().T, np.diag([-1.0, 1.0]), atol=1e-15)


def test_pauli_algebra():
    x, y, z = PAULI["x"], PAULI["y"], PAULI["z"]
    np.testing.assert_allclose(x @ y, 1j * z, atol=1e-15)


def test_ion_one_is_most_significant_bit():
    s = spin_values(3, [0b100, 0b001])
    assert s.tolist() == [[1, -1, -1], [-1, -1, 1]]
    assert label(0b100, 3) == "↑↓↓"
    assert popcount(3).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]


def test_apply_single_matches_kron():
    rng = np.random.default_rng(3)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    op = rng.normal(size=(2, 2))
    full = np.kron(np.kron(np.eye(2), op), np.eye(2))
    np.testing.assert_allclose(apply_single(psi, op, 1, 3), full @ psi, atol=1e-13)


def test_rotation_round_trip():
    rng = np.random.default_rng(4)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    for axis in "xyz":
        np.testing.assert_allclose(rotate_from_basis(rotate_to_basis(psi, axis, 4), axis, 4), psi, atol=1e-13)
