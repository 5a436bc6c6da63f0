import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import subspace_angles

from ionmagnet.couplings import CouplingMatrix
from ionmagnet.exceptions import TooManySpins
from ionmagnet.ising import (
    GroundManifold,
    classical_energies,
    classical_ground_manifold,
    dense_hamiltonian,
    flip_sector_basis,
    gap_profile,
    initial_sector,
    sector_spectrum,
)
from ionmagnet.presets import diagram
from ionmagnet.schedule import RampSchedule
from ionmagnet.spins import PAULI, READOUT

from conftest import random_couplings

KHZ = 2e3 * np.pi


def kron_hamiltonian(j, b):
    """Reference Hamiltonian from explicit Kronecker products."""
    n = len(j)
    eye = np.eye(2)

    def op(site_ops):
        return reduce(np.kron, [site_ops.get(k, eye) for k in range(n)])

    h = np.zeros((2**n, 2**n), dtype=complex)
    for a, c in itertools.combinations(range(n), 2):
        h += j[a, c] * op({a: PAULI["y"], c: PAULI["y"]})
    for a in range(n):
        h += b * op({a: PAULI["x"]})
    return h


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_dense_matches_kron(n):
    cm = random_couplings(n, n)
    h = dense_hamiltonian(cm, 0.7)
    np.testing.assert_allclose(h, kron_hamiltonian(cm.j, 0.7), atol=1e-13)
    assert np.array_equal(h, h.T.conj())
    assert np.isrealobj(h)


def test_single_spin_field():
    h = dense_hamiltonian(CouplingMatrix(1, np.zeros((1, 1))), 2.5)
    np.testing.assert_allclose(h, 2.5 * PAULI["x"].real)
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [-2.5, 2.5])


def test_zero_field_spectrum_is_classical():
    cm = random_couplings(6, 11)
    w = np.linalg.eigvalsh(dense_hamiltonian(cm, 0.0))
    np.testing.assert_allclose(w, np.sort(classical_energies(cm)), atol=1e-10)


def test_brute_force_enumeration():
    cm = random_couplings(5, 5)
    best, arg = np.inf, []
    for bits in itertools.product([0, 1], repeat=5):
        s = 2 * np.array(bits) - 1
        e = sum(cm.j[i, k] * s[i] * s[k] for i in range(5) for k in range(i + 1, 5))
        if e < best - 1e-12:
            best, arg = e, ["".join(map(str, bits))]
        elif abs(e - best) < 1e-12:
            arg.append("".join(map(str, bits)))
    m = classical_ground_manifold(cm)
    assert m.energy == pytest.approx(best, abs=1e-12)
    assert list(m.configs) == sorted(arg)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 9), seed=st.integers(0, 10**6))
def test_manifold_flip_closure_and_permutation(n, seed):
    cm = random_couplings(n, seed)
    m = classical_ground_manifold(cm)
    full = 2**n - 1
    assert set(m.indices) == {full ^ int(k) for k in m.indices}
    perm = np.random.default_rng(seed).permutation(n)
    mp = classical_ground_manifold(cm.permuted(perm))
    # config bit k of the permuted problem is ion perm[k] of the original
    mapped = sorted("".join(c[p] for p in perm) for c in m.configs)
    assert list(mp.configs) == mapped


def test_limits():
    with pytest.raises(TooManySpins):
        classical_ground_manifold(CouplingMatrix(25, np.zeros((25, 25))))
    with pytest.raises(TooManySpins):
        dense_hamiltonian(CouplingMatrix(15, np.zeros((15, 15))), 1.0)


def _manifold_span(m, n):
    # y-basis product states written in the computational basis
    vy = READOUT["y"].conj().T  # columns: |-y>, |+y>
    cols = []
    for c in m.configs:
        cols.append(reduce(np.kron, [vy[:, int(b)] for b in c]))
    return np.column_stack(cols)


@pytest.mark.parametrize("name", ["fm4", "neel4", "hex7_case1", "hex7_case2", "hex7_case3", "frustrated10"])
def test_quantum_classical_ground_equivalence(name):
    cm = diagram(name, 1.0)
    m = classical_ground_manifold(cm)
    h = dense_hamiltonian(cm, 0.0, sparse=True)
    # H is real; y-basis eigenvectors are complex, compare spans over C
    w, v = np.linalg.eigh(h.toarray())
    ground = v[:, w <= w[0] + 1e-9 * (w[-1] - w[0])]
    assert ground.shape[1] == m.degeneracy
    angles = subspace_angles(ground.astype(complex), _manifold_span(m, cm.n_ions))
    assert angles.max() < 1e-8


def test_flip_sector_basis_is_isometry():
    q = flip_sector_basis(4, -1).toarray()
    np.testing.assert_allclose(q.T @ q, np.eye(8), atol=1e-15)
    flip = reduce(np.kron, [PAULI["x"].real] * 4)
    np.testing.assert_allclose(flip @ q, -q, atol=1e-15)


def test_sector_spectra_union():
    cm = random_couplings(5, 8)
    w_all = np.linalg.eigvalsh(dense_hamiltonian(cm, 0.4))
    w_s = np.concatenate([sector_spectrum(cm, 0.4, p)[0] for p in (1, -1)])
    np.testing.assert_allclose(np.sort(w_s), w_all, atol=1e-10)


def test_gap_single_spin_is_two_b():
    sched = RampSchedule.from_end_fraction(3.0, 1.0, 0.1)
    prof = gap_profile(CouplingMatrix(1, np.zeros((1, 1))), sched, 11)
    for s in prof.samples:
        assert s.gap == pytest.approx(2 * s.b_field)


def test_gap_positive_for_fm4():
    sched = RampSchedule.from_end_fraction(29 * KHZ, 300e-6, 0.0075)
    prof = gap_profile(diagram("fm4", 2.0), sched, 41)
    assert prof.sector == initial_sector(4) == 1
    assert prof.min_gap > 0
    for s in prof.samples:
        assert np.all(np.diff(s.energies) >= 0)


def test_case1_terminal_sector_degeneracy():
    cm = diagram("hex7_case1", 1.0)
    w, _ = sector_spectrum(cm, 0.0, initial_sector(7))
    deg = np.sum(w <= w[0] + 1e-9 * (w[-1] - w[0]))
    assert deg == classical_ground_manifold(cm).degeneracy // 2


def test_gap_ignores_uncoupled_levels():
    # with J = 0 the field term commutes with H, so no excited level is reachable
    sched = RampSchedule.from_end_fraction(1.0, 1.0, 0.5)
    prof = gap_profile(CouplingMatrix(2, np.zeros((2, 2))), sched, 5)
    for s in prof.samples:
        assert np.isinf(s.gap)
        assert s.energies[1] - s.energies[0] == pytest.approx(4 * s.b_field)


def test_manifold_round_trip():
    m = classical_ground_manifold(diagram("hex7_case1", 1.0))
    assert GroundManifold.from_dict(m.to_dict()) == m
