"""Equilibrium geometry of a planar ion crystal in an anisotropic harmonic trap.

Everything here runs in dimensionless units.  Lengths are measured in
``ell = (q**2 / (4 pi eps0 M omega_ref**2))**(1/3)`` with ``omega_ref`` the
weaker in-plane frequency, so the potential energy is

    sum_i (a_x x_i**2 + a_y y_i**2) / 2 + sum_{i<j} 1 / |u_i - u_j|

with ``a_x = (omega_x / omega_ref)**2`` and likewise for ``a_y``.  Energies are in
units of ``M omega_ref**2 ell**2``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.optimize import minimize

from .exceptions import CoincidentIons, NoConvergence, ValidationError

AMU = constants.physical_constants["atomic mass constant"][0]
ELEMENTARY_CHARGE = constants.e

GRAD_TOL = 1e-10
MAX_ITERS = 100_000
DEFAULT_RESTARTS = 32
COINCIDENCE = 1e-9


@dataclass(frozen=True)
class TrapParams:
    """Secular trap frequencies (rad/s) and the ion species.

    ``ion_charge`` is in coulombs; use :meth:`from_khz` to enter frequencies as
    frequency/2pi in kHz, mass in amu and charge in units of e.
    """

    omega_x: float
    omega_y: float
    omega_z: float
    ion_mass: float = 171 * AMU
    ion_charge: float = ELEMENTARY_CHARGE

    def __post_init__(self):
        for name in ("omega_x", "omega_y", "omega_z", "ion_mass", "ion_charge"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValidationError(f"must be finite and > 0, got {value!r}", name)

    @classmethod
    def from_khz(cls, fx_khz, fy_khz, fz_khz, mass_amu=171.0, charge_e=1.0):
        two_pi_k = 2e3 * np.pi
        return cls(
            omega_x=fx_khz * two_pi_k,
            omega_y=fy_khz * two_pi_k,
            omega_z=fz_khz * two_pi_k,
            ion_mass=mass_amu * AMU,
            ion_charge=charge_e * ELEMENTARY_CHARGE,
        )

    @property
    def omega_ref(self):
        return min(self.omega_x, self.omega_y)

    @property
    def a_x(self):
        return (self.omega_x / self.omega_ref) ** 2

    @property
    def a_y(self):
        return (self.omega_y / self.omega_ref) ** 2

    @property
    def a_z(self):
        return (self.omega_z / self.omega_ref) ** 2

    @property
    def is_planar(self):
        """True when the transverse axis is the stiffest, so ions lie in the x-y plane."""
        return self.omega_z > max(self.omega_x, self.omega_y)

    @property
    def isotropic(self):
        return self.omega_x == self.omega_y

    @property
    def length_scale(self):
        """Unit length ``ell`` in metres."""
        k = self.ion_charge**2 / (4 * np.pi * constants.epsilon_0)
        return (k / (self.ion_mass * self.omega_ref**2)) ** (1.0 / 3.0)

    def require_planar(self):
        if not self.is_planar:
            raise ValidationError(
                "planar-crystal condition violated: omega_z must exceed "
                f"max(omega_x, omega_y) (omega_z={self.omega_z:.6g}, "
                f"omega_x={self.omega_x:.6g}, omega_y={self.omega_y:.6g})",
                "omega_z",
            )

    def to_dict(self):
        return {
            "omega_x": self.omega_x,
            "omega_y": self.omega_y,
            "omega_z": self.omega_z,
            "ion_mass": self.ion_mass,
            "ion_charge": self.ion_charge,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: float(d[k]) for k in ("omega_x", "omega_y", "omega_z", "ion_mass", "ion_charge")})


@dataclass(frozen=True)
class IonCrystal:
    n_ions: int
    positions: np.ndarray = field(repr=False)
    potential_energy: float
    gradient_norm: float

    def positions_si(self, trap):
        """In-plane positions in metres."""
        return self.positions * trap.length_scale

    def distances(self):
        return _pair_distances(self.positions)

    def to_dict(self):
        return {
            "n_ions": self.n_ions,
            "positions": self.positions.tolist(),
            "potential_energy": self.potential_energy,
            "gradient_norm": self.gradient_norm,
        }

    @classmethod
    def from_dict(cls, d):
        pos = np.asarray(d["positions"], dtype=float).reshape(-1, 2)
        return cls(int(d["n_ions"]), pos, float(d["potential_energy"]), float(d["gradient_norm"]))


@dataclass(frozen=True)
class StabilityReport:
    min_in_plane: float
    min_transverse: float

    @property
    def planar_stable(self):
        return self.min_transverse > 0


def _pair_distances(u):
    diff = u[:, None, :] - u[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=-1))


def _check_coincident(u):
    n = len(u)
    if n < 2:
        return
    d = _pair_distances(u)[np.triu_indices(n, 1)]
    if d.min() < COINCIDENCE:
        raise CoincidentIons(f"two ions closer than {COINCIDENCE:g} (min distance {d.min():.3g})")


def dimensionless_potential(positions, trap):
    """Trap-plus-Coulomb energy and its analytic gradient.

    Parameters
    ----------
    positions : array_like, shape (N, 2)
        Dimensionless in-plane coordinates.
    trap : TrapParams

    Returns
    -------
    energy : float
    gradient : ndarray, shape (N, 2)
    """
    u = np.asarray(positions, dtype=float).reshape(-1, 2)
    _check_coincident(u)
    stiff = np.array([trap.a_x, trap.a_y])
    energy = 0.5 * np.sum(stiff * u**2)
    grad = stiff * u
    n = len(u)
    if n > 1:
        diff = u[:, None, :] - u[None, :, :]
        r = np.sqrt(np.sum(diff**2, axis=-1))
        np.fill_diagonal(r, np.inf)
        energy += 0.5 * np.sum(1.0 / r)
        grad -= np.sum(diff / r[..., None] ** 3, axis=1)
    return float(energy), grad


def in_plane_hessian(positions, trap):
    """(2N, 2N) Hessian of :func:`dimensionless_potential`, coordinates ordered x1, y1, x2, ..."""
    u = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(u)
    hess = np.zeros((n, 2, n, 2))
    stiff = np.diag([trap.a_x, trap.a_y])
    for i in range(n):
        hess[i, :, i, :] = stiff
    eye = np.eye(2)
    for i in range(n):
        for j in range(i + 1, n):
            d = u[i] - u[j]
            r = np.linalg.norm(d)
            block = (3.0 * np.outer(d, d) / r**2 - eye) / r**3
            hess[i, :, i, :] += block
            hess[j, :, j, :] += block
            hess[i, :, j, :] -= block
            hess[j, :, i, :] -= block
    return hess.reshape(2 * n, 2 * n)


def transverse_stiffness(positions, trap):
    """Dimensionless out-of-plane stiffness matrix of a planar configuration."""
    u = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(u)
    if n == 1:
        return np.array([[trap.a_z]])
    r = _pair_distances(u)
    np.fill_diagonal(r, np.inf)
    inv3 = 1.0 / r**3
    k = inv3.copy()
    k[np.diag_indices(n)] = trap.a_z - inv3.sum(axis=1)
    return k


def _relax(x0, trap, grad_tol, max_iters):
    """BFGS from a random start, then Newton polishing with the analytic Hessian."""
    n = len(x0) // 2

    def fun(x):
        e, g = dimensionless_potential(x.reshape(n, 2), trap)
        return e, g.ravel()

    res = minimize(fun, x0, jac=True, method="BFGS", options={"gtol": 1e-8, "maxiter": max_iters})
    x = res.x
    used = int(res.nit)
    _, g = fun(x)
    while np.linalg.norm(g) >= grad_tol and used < max_iters:
        h = in_plane_hessian(x.reshape(n, 2), trap)
        step = np.linalg.lstsq(h, g, rcond=1e-12)[0]
        x = x - step
        used += 1
        _, g = fun(x)
        if not np.all(np.isfinite(g)):
            break
    return x.reshape(n, 2), float(np.linalg.norm(g))


def _canonical(u, trap):
    u = u - u.mean(axis=0) if trap.isotropic else u.copy()
    if trap.isotropic and len(u) > 1:
        radii = np.linalg.norm(u, axis=1)
        far = int(np.argmax(radii))
        theta = np.arctan2(u[far, 1], u[far, 0])
        c, s = np.cos(-theta), np.sin(-theta)
        u = u @ np.array([[c, s], [-s, c]])
    keys = np.round(u, 8) + 0.0
    order = np.lexsort((keys[:, 1], keys[:, 0]))
    return u[order]


def equilibrium_positions(
    trap,
    n_ions,
    restarts=DEFAULT_RESTARTS,
    rng_seed=0,
    grad_tol=GRAD_TOL,
    max_iters=MAX_ITERS,
    initial=None,
):
    """Lowest-energy planar configuration over a multi-start search.

    Starts are drawn uniformly from a disc of radius ``2 sqrt(N)``, one
    independent stream per restart spawned from ``rng_seed``.  Passing
    ``initial`` replaces the random starts with a single given configuration.
    Ties in energy go to the lower restart index.  For an isotropic in-plane
    trap the result is rotated so the outermost ion sits on +x; ions are then
    sorted lexicographically by (x, y).
    """
    trap.require_planar()
    if n_ions < 1:
        raise ValidationError("n_ions must be >= 1", "n_ions")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1", "restarts")
    if n_ions == 1:
        return IonCrystal(1, np.zeros((1, 2)), 0.0, 0.0)

    if initial is not None:
        starts = [np.asarray(initial, dtype=float).reshape(n_ions, 2)]
    else:
        radius = 2.0 * np.sqrt(n_ions)
        starts = []
        for seq in np.random.SeedSequence(rng_seed).spawn(restarts):
            rng = np.random.default_rng(seq)
            r = radius * np.sqrt(rng.uniform(size=n_ions))
            phi = rng.uniform(0.0, 2 * np.pi, size=n_ions)
            starts.append(np.column_stack([r * np.cos(phi), r * np.sin(phi)]))

    best = None
    for start in starts:
        try:
            u, gnorm = _relax(start.ravel(), trap, grad_tol, max_iters)
        except CoincidentIons:
            continue
        if not gnorm < grad_tol:
            continue
        if np.linalg.eigvalsh(in_plane_hessian(u, trap)).min() < -1e-9:
            continue
        energy, _ = dimensionless_potential(u, trap)
        if best is None or energy < best[0] - 1e-12 * max(1.0, abs(best[0])):
            best = (energy, u)
    if best is None:
        raise NoConvergence(
            f"no restart reached gradient norm < {grad_tol:g} within {max_iters} iterations"
        )

    u = _canonical(best[1], trap)
    energy, grad = dimensionless_potential(u, trap)
    return IonCrystal(n_ions, u, energy, float(np.linalg.norm(grad)))


def verify_stability(crystal, trap):
    """Smallest in-plane and transverse stiffness eigenvalues (dimensionless)."""
    in_plane = np.linalg.eigvalsh(in_plane_hessian(crystal.positions, trap)).min()
    transverse = np.linalg.eigvalsh(transverse_stiffness(crystal.positions, trap)).min()
    return StabilityReport(float(in_plane), float(transverse))
