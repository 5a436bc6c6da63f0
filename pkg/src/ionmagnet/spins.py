"""Single-spin conventions shared by the Hamiltonian, propagator and readout.

Per-spin computational basis is ordered ``(|down>, |up>)`` so that index 0 is the
optically pumped ``|down>`` state and ``sigma_z = diag(-1, +1)``.  Multi-spin
vectors are Kronecker products with ion 1 as the most significant bit, which is
the "binary order" of the measured histograms.

A readout basis ``axis`` is represented by a 2x2 unitary whose rows are the
bras ``<-axis|`` and ``<+axis|``; applying it to every spin turns amplitudes into
amplitudes over labels where bit value 1 means the +1 eigenstate of
``sigma_axis``.  The phase of each eigenvector is fixed so that its first
component is real and positive.
"""

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

_S = 1.0 / np.sqrt(2.0)
READOUT = {
    "x": np.array([[_S, -_S], [_S, _S]], dtype=complex),
    "y": np.array([[_S, -1.0j * _S], [_S, 1.0j * _S]], dtype=complex),
    "z": np.eye(2, dtype=complex),
}

MAX_QUANTUM_SPINS = 14
MAX_CLASSICAL_SPINS = 24


def spin_values(n, indices=None):
    """±1 spin array of shape (len(indices), n); column k is ion k+1 (MSB)."""
    if indices is None:
        indices = np.arange(2**n, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (indices[:, None] >> shifts) & 1
    return (2 * bits - 1).astype(np.int8)


def popcount(n):
    idx = np.arange(2**n, dtype=np.int64)
    counts = np.zeros(2**n, dtype=np.int64)
    for k in range(n):
        counts += (idx >> k) & 1
    return counts


def label(index, n, up="↑", down="↓"):
    bits = format(int(index), f"0{n}b")
    return "".join(up if b == "1" else down for b in bits)


def apply_single(psi, op, site, n):
    """Apply a 2x2 operator to spin ``site`` (0-based, ion 1 = site 0)."""
    t = psi.reshape((2**site, 2, 2 ** (n - site - 1)))
    return np.einsum("ab,ibj->iaj", op, t).reshape(-1)


def apply_all(psi, op, n):
    """Apply the same 2x2 operator to every spin."""
    for site in range(n):
        psi = apply_single(psi, op, site, n)
    return psi


def rotate_to_basis(psi, axis, n):
    """Amplitudes over the eigenbasis labels of ``axis`` (see module docstring)."""
    return apply_all(np.asarray(psi, dtype=complex), READOUT[axis], n)


def rotate_from_basis(phi, axis, n):
    return apply_all(np.asarray(phi, dtype=complex), READOUT[axis].conj().T, n)
