"""Exact diagnostics of the transverse-field Ising model.

``H = sum_{i<j} J_ij sy_i sy_j + B sum_i sx_i``.  At ``B = 0`` the Hamiltonian is
diagonal in the product eigenbasis of sigma_y, so the classical ground manifold
is found by enumerating all ``2**N`` sign patterns.  Configurations are written
as bit strings, ion 1 first, with ``1`` meaning the +1 eigenstate of sigma_y.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import TooManySpins
from .spins import MAX_CLASSICAL_SPINS, MAX_QUANTUM_SPINS, spin_values

DEGENERACY_RTOL = 1e-9
MAX_GAP_SPINS = 12
_CHUNK = 1 << 18


@dataclass(frozen=True)
class GroundManifold:
    energy: float
    configs: tuple

    @property
    def degeneracy(self):
        return len(self.configs)

    @property
    def n_spins(self):
        return len(self.configs[0]) if self.configs else 0

    @property
    def indices(self):
        return np.array([int(c, 2) for c in self.configs], dtype=np.int64)

    def to_dict(self):
        return {"energy": self.energy, "configs": list(self.configs), "degeneracy": self.degeneracy}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["energy"]), tuple(d["configs"]))


@dataclass(frozen=True)
class GapSample:
    t: float
    b_field: float
    energies: np.ndarray = field(repr=False)
    gap: float


@dataclass(frozen=True)
class GapProfile:
    samples: tuple
    sector: int

    @property
    def min_gap(self):
        return min(s.gap for s in self.samples)


def _check_n(n, cap):
    if n > cap:
        raise TooManySpins(f"{n} spins exceeds the limit of {cap}")


def classical_energies(cm, indices=None):
    """``E(s) = sum_{i<j} J_ij s_i s_j`` for the given configuration indices (all by default)."""
    n = cm.n_ions
    _check_n(n, MAX_CLASSICAL_SPINS)
    if indices is None:
        indices = np.arange(2**n, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    out = np.empty(len(indices))
    for lo in range(0, len(indices), _CHUNK):
        s = spin_values(n, indices[lo:lo + _CHUNK]).astype(float)
        out[lo:lo + _CHUNK] = 0.5 * np.einsum("ki,ij,kj->k", s, cm.j, s)
    return out


def classical_ground_manifold(cm, rtol=DEGENERACY_RTOL):
    """All minimizers of the classical Ising energy, within ``rtol`` of the energy width."""
    n = cm.n_ions
    _check_n(n, MAX_CLASSICAL_SPINS)
    e_min, e_max = np.inf, -np.inf
    chunks = []
    total = 2**n
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        e = classical_energies(cm, idx)
        e_min, e_max = min(e_min, e.min()), max(e_max, e.max())
        chunks.append((idx, e))
    cut = e_min + rtol * (e_max - e_min)
    ground = np.concatenate([idx[e <= cut] for idx, e in chunks])
    configs = tuple(format(int(k), f"0{n}b") for k in np.sort(ground))
    return GroundManifold(float(e_min), configs)


def _flip_tables(n):
    idx = np.arange(2**n, dtype=np.int64)
    bits = [(idx >> (n - 1 - k)) & 1 for k in range(n)]
    return idx, bits


def ising_part(cm):
    """Sparse sum_{i<j} J_ij sy_i sy_j in the computational basis (real)."""
    n = cm.n_ions
    idx, bits = _flip_tables(n)
    rows, cols, data = [], [], []
    for i in range(n):
        for j in range(i + 1, n):
            if cm.j[i, j] == 0:
                continue
            mask = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
            # sy|0> = -i|1>, sy|1> = i|0>: equal bits give -1, unequal +1
            phase = np.where(bits[i] == bits[j], -1.0, 1.0)
            rows.append(idx ^ mask)
            cols.append(idx)
            data.append(cm.j[i, j] * phase)
    dim = 2**n
    if not rows:
        return sp.csr_matrix((dim, dim))
    return sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))


def field_part(n):
    """Sparse sum_i sx_i."""
    idx, _ = _flip_tables(n)
    rows = np.concatenate([idx ^ (1 << (n - 1 - k)) for k in range(n)])
    cols = np.tile(idx, n)
    dim = 2**n
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(dim, dim))


def dense_hamiltonian(cm, b_field, sparse=False):
    """Full ``2**N x 2**N`` transverse-field Ising Hamiltonian.

    The matrix is real symmetric in this basis convention.  ``sparse=True``
    returns CSR instead of a dense array, which is the only sensible choice
    near the 14-spin limit.
    """
    _check_n(cm.n_ions, MAX_QUANTUM_SPINS)
    h = ising_part(cm) + b_field * field_part(cm.n_ions)
    return h.tocsr() if sparse else h.toarray()


def flip_sector_basis(n, parity):
    """Isometry onto the eigenspace of prod_i sx_i with eigenvalue ``parity``.

    Columns are ``(|k> + parity |~k>) / sqrt(2)`` for ``k`` with ion 1 down.
    """
    half = 2 ** (n - 1)
    k = np.arange(half, dtype=np.int64)
    comp = (2**n - 1) ^ k
    rows = np.concatenate([k, comp])
    cols = np.concatenate([np.arange(half), np.arange(half)])
    vals = np.concatenate([np.ones(half), parity * np.ones(half)]) / np.sqrt(2.0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(2**n, half))


def initial_sector(n):
    """Flip parity of the all-(-x) product state: (-1)**N."""
    return -1 if n % 2 else 1


def sector_spectrum(cm, b_field, parity, k=None):
    """Eigenpairs of H restricted to a global-flip sector."""
    n = cm.n_ions
    if n == 1:
        # one spin: the sector is the single sx eigenvector
        e = np.array([b_field * parity], dtype=float)
        return e, np.ones((1, 1))
    q = flip_sector_basis(n, parity)
    h = (q.T @ dense_hamiltonian(cm, b_field, sparse=True) @ q).toarray()
    w, v = np.linalg.eigh(h)
    if k is not None:
        w, v = w[:k], v[:, :k]
    return w, v


def gap_profile(cm, schedule, n_samples=21, k=4, coupling_tol=1e-8):
    """Sector-resolved low spectrum along the ramp.

    The gap at each sample is measured from the sector ground state to the
    lowest level whose sum_i sx_i matrix element with it exceeds
    ``coupling_tol``; levels the ramp cannot reach do not count.
    """
    n = cm.n_ions
    _check_n(n, MAX_GAP_SPINS)
    parity = initial_sector(n)
    times = np.linspace(0.0, schedule.duration, n_samples)
    samples = []
    if n == 1:
        for t in times:
            b = float(schedule.field(t))
            samples.append(GapSample(float(t), b, np.array([-b, b]), 2 * b))
        return GapProfile(tuple(samples), parity)
    q = flip_sector_basis(n, parity)
    hj = (q.T @ ising_part(cm) @ q).toarray()
    hx = (q.T @ field_part(n) @ q).toarray()
    for t in times:
        b = float(schedule.field(t))
        w, v = np.linalg.eigh(hj + b * hx)
        couple = np.abs(v.T @ (hx @ v[:, 0]))
        couple[0] = 0.0
        reach = np.flatnonzero(couple > coupling_tol)
        gap = float(w[reach[0]] - w[0]) if len(reach) else float("inf")
        samples.append(GapSample(float(t), b, w[:k].copy(), max(gap, 0.0)))
    return GapProfile(tuple(samples), parity)
