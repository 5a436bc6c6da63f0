"""State preparation and Schroedinger propagation along the field ramp.

The propagator works in the product eigenbasis of sigma_y, where the Ising
term is a diagonal phase and the transverse field is a product of identical
single-spin rotations.  A symmetric (Strang) split step, with the field taken
at the step midpoint, is composed into a fourth-order triple-jump scheme.
Every factor is exactly unitary and the scheme is time-symmetric, so stepping
with negative ``h`` undoes a forward run to rounding error.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, StepNotConverged, TooManySpins, ValidationError
from .ising import classical_energies
from .spins import MAX_QUANTUM_SPINS, READOUT, SIGMA_X, apply_single, popcount, rotate_from_basis, rotate_to_basis

NORM_TOL = 1e-9

_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1
# sigma_x seen from the sigma_y readout frame
_FIELD_Y = READOUT["y"] @ SIGMA_X @ READOUT["y"].conj().T


@dataclass(frozen=True)
class SpinState:
    """Normalized amplitudes over the ``2**N`` computational (sigma_z) basis states."""

    n_spins: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_spins,):
            raise DimensionMismatch(f"{amps.shape} amplitudes for {self.n_spins} spins")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL:g}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def to_dict(self):
        return {
            "n_spins": self.n_spins,
            "real": self.amplitudes.real.tolist(),
            "imag": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        amps = np.asarray(d["real"], dtype=float) + 1j * np.asarray(d["imag"], dtype=float)
        return cls(int(d["n_spins"]), amps)


@dataclass(frozen=True)
class StepControl:
    """``max_step`` (s) is the first step tried; ``None`` picks one from the Hamiltonian norm.

    The step is halved until halving changes no sampled population by
    ``tol`` or more; ``min_step`` (default ``max_step / 64``) is the floor.
    """

    max_step: float = None
    tol: float = 1e-6
    min_step: float = None


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple
    step: float

    @property
    def final(self):
        return self.states[-1]

    def __iter__(self):
        return iter(zip(self.times, self.states))

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class ReversalResult:
    forward_final: SpinState
    returned: SpinState
    return_probability: float


def _check_n(n):
    if not 1 <= n <= MAX_QUANTUM_SPINS:
        raise TooManySpins(f"{n} spins outside 1..{MAX_QUANTUM_SPINS}")


def initial_state(n_spins):
    """Every spin in the -1 eigenstate of sigma_x: the ground state of ``+B sum sx``."""
    _check_n(n_spins)
    signs = 1.0 - 2.0 * (popcount(n_spins) & 1)
    return SpinState(n_spins, signs / 2.0 ** (n_spins / 2.0))


def _field_rotation(theta):
    return np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * _FIELD_Y


class _SplitPropagator:
    def __init__(self, cm, schedule):
        self.n = cm.n_ions
        self.energies = classical_energies(cm)
        self.schedule = schedule

    def spectral_scale(self):
        spread = 0.5 * (self.energies.max() - self.energies.min())
        return spread + self.n * self.schedule.b0

    def _rotate(self, phi, theta):
        rot = _field_rotation(theta)
        for site in range(self.n):
            phi = apply_single(phi, rot, site, self.n)
        return phi

    def run(self, phi, t_from, t_to, h_max):
        """Advance y-frame amplitudes from ``t_from`` to ``t_to`` (either direction)."""
        span = t_to - t_from
        if span == 0:
            return phi
        steps = max(1, int(np.ceil(abs(span) / h_max - 1e-9)))
        h = span / steps
        e = self.energies
        edge = np.exp(-0.5j * _W1 * h * e)
        inner = np.exp(-0.5j * (_W1 + _W0) * h * e)
        full = np.exp(-1j * _W1 * h * e)
        offsets = np.array([0.5 * _W1, _W1 + 0.5 * _W0, _W1 + _W0 + 0.5 * _W1]) * h
        weights = np.array([_W1, _W0, _W1]) * h
        phi = phi * edge
        for s in range(steps):
            t0 = t_from + s * h
            b = self.schedule.field(t0 + offsets)
            phi = self._rotate(phi, b[0] * weights[0])
            phi = phi * inner
            phi = self._rotate(phi, b[1] * weights[1])
            phi = phi * inner
            phi = self._rotate(phi, b[2] * weights[2])
            phi = phi * (full if s < steps - 1 else edge)
        return phi

    def sweep(self, phi, times, h_max):
        out = [phi]
        for a, b in zip(times[:-1], times[1:]):
            phi = self.run(phi, a, b, h_max)
            out.append(phi)
        return out


def _sample_grid(schedule, sample_times):
    pts = [0.0, schedule.duration]
    if sample_times is not None:
        pts.extend(float(t) for t in sample_times)
    grid = np.unique(np.asarray(pts, dtype=float))
    if grid[0] < 0 or grid[-1] > schedule.duration * (1 + 1e-12):
        raise ValidationError("sample times must lie within [0, duration]", "sample_times")
    return grid


def _populations(phis, n):
    y = np.array([np.abs(p) ** 2 for p in phis])
    z = np.array([np.abs(rotate_from_basis(p, "y", n)) ** 2 for p in phis])
    return y, z


def evolve(state, cm, schedule, sample_times=None, step_control=None):
    """Solve ``i d psi/dt = H(t) psi`` along ``schedule`` and sample the state.

    The trajectory always includes ``t = 0`` and ``t = duration``.  The
    step is refined by halving until every sampled basis population (in both
    the sigma_z and sigma_y bases) moves by less than ``step_control.tol``.

    Raises
    ------
    StepNotConverged
        If the tolerance is still missed at ``step_control.min_step``.
    """
    n = state.n_spins
    _check_n(n)
    if cm.n_ions != n:
        raise DimensionMismatch(f"{cm.n_ions}-ion couplings for a {n}-spin state")
    ctrl = step_control or StepControl()
    prop = _SplitPropagator(cm, schedule)
    grid = _sample_grid(schedule, sample_times)

    h = ctrl.max_step or min(schedule.duration / 100.0, 0.5 / prop.spectral_scale())
    floor = ctrl.min_step or h / 64.0
    phi0 = rotate_to_basis(state.amplitudes, "y", n)

    coarse = prop.sweep(phi0, grid, h)
    pops = _populations(coarse, n)
    while True:
        h_fine = 0.5 * h
        fine = prop.sweep(phi0, grid, h_fine)
        fine_pops = _populations(fine, n)
        err = max(np.abs(fine_pops[0] - pops[0]).max(), np.abs(fine_pops[1] - pops[1]).max())
        if err < ctrl.tol:
            break
        if h_fine < floor:
            raise StepNotConverged(f"population change {err:.3g} >= {ctrl.tol:g} at step {h_fine:.3g} s")
        h, pops = h_fine, fine_pops
    states = tuple(SpinState(n, rotate_from_basis(p, "y", n)) for p in fine)
    return Trajectory(grid, states, h_fine)


def propagate_inverse(state, cm, schedule, step):
    """Apply the exact inverse of a forward :func:`evolve` run made with ``step``."""
    n = state.n_spins
    prop = _SplitPropagator(cm, schedule)
    phi = rotate_to_basis(state.amplitudes, "y", n)
    phi = prop.run(phi, schedule.duration, 0.0, step)
    return SpinState(n, rotate_from_basis(phi, "y", n))


def _return_probability(state):
    ref = initial_state(state.n_spins).amplitudes
    return float(np.abs(np.vdot(ref, state.amplitudes)) ** 2)


def time_reversal_protocol(cm, schedule, step_control=None, exact_inverse=False):
    """Ramp the field down, ramp it back up, and measure the return to S_x = -N/2.

    With ``exact_inverse=True`` the return leg is the exact inverse of the
    forward propagator instead of the physical mirrored ramp.
    """
    n = cm.n_ions
    psi0 = initial_state(n)
    fwd = evolve(psi0, cm, schedule, step_control=step_control)
    if exact_inverse:
        back = propagate_inverse(fwd.final, cm, schedule, fwd.step)
    else:
        back = evolve(fwd.final, cm, schedule.mirrored(), step_control=step_control).final
    return ReversalResult(fwd.final, back, _return_probability(back))


def ground_population(state, manifold):
    """Total sigma_y-basis population on the manifold configurations."""
    if manifold.n_spins != state.n_spins:
        raise DimensionMismatch(f"{manifold.n_spins}-spin manifold for a {state.n_spins}-spin state")
    phi = rotate_to_basis(state.amplitudes, "y", state.n_spins)
    return float(np.sum(np.abs(phi[manifold.indices]) ** 2))
