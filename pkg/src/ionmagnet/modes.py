"""Transverse (out-of-plane) normal modes of a planar crystal."""

from dataclasses import dataclass, field

import numpy as np

from .crystal import TrapParams, transverse_stiffness
from .exceptions import UnstableCrystal

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class ModeSpectrum:
    """Mode frequencies in rad/s (descending) and the orthogonal mode matrix.

    Column ``m`` of ``mode_matrix`` is the participation vector ``b[:, m]``.
    ``eigenvalues`` are the dimensionless stiffness eigenvalues, i.e.
    ``(frequencies / trap.omega_ref)**2``.
    """

    n_ions: int
    frequencies: np.ndarray = field(repr=False)
    mode_matrix: np.ndarray = field(repr=False)
    trap: TrapParams
    eigenvalues: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "n_ions": self.n_ions,
            "frequencies": self.frequencies.tolist(),
            "mode_matrix": self.mode_matrix.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "trap": self.trap.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            int(d["n_ions"]),
            np.asarray(d["frequencies"], dtype=float),
            np.asarray(d["mode_matrix"], dtype=float),
            TrapParams.from_dict(d["trap"]),
            np.asarray(d["eigenvalues"], dtype=float),
        )


@dataclass(frozen=True)
class ModeLine:
    index: int
    frequency_mhz: float
    weights: np.ndarray


def _fix_sign(v):
    k = int(np.argmax(np.abs(v) - 1e-12 * np.arange(len(v))))
    return v if v[k] > 0 else -v


def _canonical_subspace(vecs):
    """Deterministic orthonormal basis for the span of ``vecs``.

    Unit vectors e_1, e_2, ... are projected onto the subspace and
    Gram-Schmidt orthonormalized; the first ``k`` independent ones are kept.
    """
    n, k = vecs.shape
    proj = vecs @ vecs.T
    basis = []
    for i in range(n):
        v = proj[:, i].copy()
        for b in basis:
            v -= (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            basis.append(v / norm)
        if len(basis) == k:
            break
    out = np.column_stack([_fix_sign(b) for b in basis])
    keys = [tuple(-np.round(out[:, j], 8)) for j in range(k)]
    return out[:, sorted(range(k), key=keys.__getitem__)]


def transverse_modes(crystal, trap):
    """Eigen-decompose the transverse stiffness matrix of ``crystal``.

    Raises
    ------
    UnstableCrystal
        If any stiffness eigenvalue is not positive (the plane buckles).
    """
    k = transverse_stiffness(crystal.positions, trap)
    lam, vecs = np.linalg.eigh(k)
    if lam.min() <= 0:
        raise UnstableCrystal(f"transverse stiffness eigenvalue {lam.min():.6g} <= 0")
    order = np.argsort(-lam, kind="stable")
    lam, vecs = lam[order], vecs[:, order]

    # group near-degenerate eigenvalues and fix their basis
    start = 0
    n = len(lam)
    while start < n:
        stop = start + 1
        while stop < n and abs(lam[stop] - lam[start]) <= DEGENERACY_TOL * max(1.0, abs(lam[start])):
            stop += 1
        if stop - start > 1:
            vecs[:, start:stop] = _canonical_subspace(vecs[:, start:stop])
        else:
            vecs[:, start] = _fix_sign(vecs[:, start])
        start = stop

    freqs = trap.omega_ref * np.sqrt(lam)
    return ModeSpectrum(crystal.n_ions, freqs, vecs, trap, lam)


def mode_comb(spectrum):
    """Stick spectrum: one :class:`ModeLine` per mode, index 1 being the COM mode."""
    lines = []
    for m in range(spectrum.n_ions):
        b = spectrum.mode_matrix[:, m]
        lines.append(ModeLine(m + 1, spectrum.frequencies[m] / (2e6 * np.pi), b**2))
    return lines
