import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionmagnet.crystal import (
    AMU,
    IonCrystal,
    TrapParams,
    dimensionless_potential,
    equilibrium_positions,
    in_plane_hessian,
    transverse_stiffness,
    verify_stability,
)
from ionmagnet.exceptions import CoincidentIons, ValidationError
from ionmagnet.presets import TRAP_IONS, trap_preset

from conftest import isotropic


def test_trap_validation_and_units():
    with pytest.raises(ValidationError, match="omega_y"):
        TrapParams(1.0, -1.0, 2.0)
    t = TrapParams.from_khz(500, 600, 1500, mass_amu=171)
    assert t.omega_ref == pytest.approx(2 * np.pi * 500e3)
    assert t.a_y == pytest.approx(1.44)
    assert t.a_z == pytest.approx(9.0)
    assert t.ion_mass == pytest.approx(171 * AMU)
    # ytterbium at 500 kHz: a few microns
    assert 3e-6 < t.length_scale < 6e-6


def test_planar_condition_error_names_it():
    with pytest.raises(ValidationError, match="planar-crystal condition"):
        equilibrium_positions(TrapParams(2.0, 2.0, 1.0), 3)


def test_single_ion():
    e, g = dimensionless_potential(np.zeros((1, 2)), isotropic())
    assert e == 0.0 and np.all(g == 0)
    c = equilibrium_positions(isotropic(), 1)
    assert c.positions.tolist() == [[0.0, 0.0]]


def test_two_ion_analytic_minimum():
    x = 2 ** (-2 / 3)
    _, g = dimensionless_potential(np.array([[-x, 0.0], [x, 0.0]]), isotropic())
    assert np.abs(g).max() < 1e-14
    c = equilibrium_positions(isotropic(), 2, restarts=4)
    assert c.distances()[0, 1] == pytest.approx(2 ** (1 / 3), abs=1e-10)
    assert c.gradient_norm < 1e-10


def test_coincident_ions():
    with pytest.raises(CoincidentIons):
        dimensionless_potential(np.zeros((2, 2)), isotropic())


def _fd_gradient(u, trap, h=1e-6):
    g = np.zeros_like(u)
    for idx in np.ndindex(u.shape):
        up, dn = u.copy(), u.copy()
        up[idx] += h
        dn[idx] -= h
        g[idx] = (dimensionless_potential(up, trap)[0] - dimensionless_potential(dn, trap)[0]) / (2 * h)
    return g


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 2**31 - 1), ay=st.floats(1.0, 3.0))
def test_gradient_matches_finite_differences(n, seed, ay):
    trap = TrapParams(1.0, float(np.sqrt(ay)), 5.0)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-2, 2, size=(n, 2))
    if np.min(np.linalg.norm(u[:, None] - u[None], axis=-1) + 10 * np.eye(n)) < 0.3:
        u += 0.3 * np.arange(n)[:, None]
    _, g = dimensionless_potential(u, trap)
    fd = _fd_gradient(u, trap)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(g), 1.0)


def test_hessian_matches_gradient_differences():
    trap = TrapParams(1.0, 1.3, 4.0)
    u = np.random.default_rng(0).uniform(-2, 2, size=(5, 2))
    h = in_plane_hessian(u, trap)
    fd = np.zeros_like(h)
    for k in range(10):
        d = np.zeros(10)
        d[k] = 1e-6
        gp = dimensionless_potential((u.ravel() + d).reshape(5, 2), trap)[1].ravel()
        gm = dimensionless_potential((u.ravel() - d).reshape(5, 2), trap)[1].ravel()
        fd[:, k] = (gp - gm) / 2e-6
    np.testing.assert_allclose(h, fd, atol=1e-6)


def test_hexagon_geometry(hexagon):
    trap, c, _ = hexagon
    r = np.linalg.norm(c.positions - c.positions.mean(axis=0), axis=1)
    order = np.argsort(r)
    assert r[order[0]] < 1e-6
    ring = r[order[1:]]
    assert ring.max() - ring.min() < 1e-6
    assert c.gradient_norm < 1e-10
    assert np.linalg.eigvalsh(in_plane_hessian(c.positions, trap)).min() >= -1e-9
    assert verify_stability(c, trap).planar_stable


@pytest.mark.parametrize("name", ["rhombus4", "crystal10", "crystal12"])
def test_preset_geometry_classes(name, preset_spectra):
    trap, c, _ = preset_spectra[name]
    r = np.sort(np.linalg.norm(c.positions - c.positions.mean(axis=0), axis=1))
    if name == "rhombus4":
        d = np.sort(c.distances()[np.triu_indices(4, 1)])
        # 60-degree rhombus: four sides and the short diagonal equal
        assert d[4] - d[0] < 0.02 * d[0]
        assert d[5] == pytest.approx(np.sqrt(3) * d[0], rel=0.02)
    elif name == "crystal10":
        assert r[1] - r[0] < 1e-6 and r[2] - r[1] > 0.5  # 2 inner ions
    else:
        assert r[2] - r[0] < 1e-6 and r[3] - r[2] > 0.5  # 3 inner ions


def test_determinism_and_idempotence(hexagon):
    trap, c, _ = hexagon
    again = equilibrium_positions(trap, 7)
    assert np.array_equal(again.positions, c.positions)
    polished = equilibrium_positions(trap, 7, initial=c.positions)
    np.testing.assert_allclose(polished.positions, c.positions, atol=1e-10)


def test_rotation_invariance_of_energy(hexagon):
    trap, c, _ = hexagon
    e0 = dimensionless_potential(c.positions, trap)[0]
    for theta in np.random.default_rng(1).uniform(0, 2 * np.pi, 5):
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        assert abs(dimensionless_potential(c.positions @ rot.T, trap)[0] - e0) < 1e-12


def test_stability_closed_form_and_instability():
    c = equilibrium_positions(isotropic(25.0), 2, restarts=2)
    assert verify_stability(c, isotropic(25.0)).min_transverse == pytest.approx(24.0, abs=1e-10)
    # tiny transverse confinement: the plane buckles
    weak = TrapParams(1.0, 1.0, 1e-3)
    rep = verify_stability(c, weak)
    assert not rep.planar_stable


def test_transverse_stiffness_row_sums():
    u = np.random.default_rng(2).uniform(-2, 2, size=(6, 2))
    k = transverse_stiffness(u, isotropic(9.0))
    np.testing.assert_allclose(k.sum(axis=1), 9.0, atol=1e-12)


def test_crystal_round_trip(hexagon):
    _, c, _ = hexagon
    back = IonCrystal.from_dict(c.to_dict())
    assert np.array_equal(back.positions, c.positions)
    assert back.potential_energy == c.potential_energy


def test_trap_round_trip():
    for name in TRAP_IONS:
        t = trap_preset(name)
        assert TrapParams.from_dict(t.to_dict()) == t
