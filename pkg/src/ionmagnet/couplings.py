"""Phonon-mediated Ising couplings from a bichromatic Raman drive."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

from .exceptions import DimensionMismatch, ResonantDetuning, ValidationError

TWO_PI = 2 * np.pi
RESONANCE_GUARD = TWO_PI * 1e3
HYPERFINE_HZ = 12.642812e9


def recoil_frequency(delta_k, ion_mass):
    """hbar (delta_k)**2 / (2 M) in rad/s."""
    return constants.hbar * delta_k**2 / (2.0 * ion_mass)


@dataclass(frozen=True)
class RamanDrive:
    """Per-ion Rabi frequencies, beat-note detuning and recoil, all in rad/s.

    ``delta_k`` (1/m) is informational once ``recoil`` is fixed; build from a
    wavevector with :meth:`from_wavevector`.  ``carrier_hint`` is the qubit
    splitting in Hz and is never used by the rotating-frame simulation.
    """

    rabi: np.ndarray
    mu: float
    recoil: float
    delta_k: float = float("nan")
    carrier_hint: float = HYPERFINE_HZ

    def __post_init__(self):
        rabi = np.atleast_1d(np.asarray(self.rabi, dtype=float))
        object.__setattr__(self, "rabi", rabi)
        if np.any(rabi < 0) or not np.all(np.isfinite(rabi)):
            raise ValidationError("Rabi frequencies must be finite and >= 0", "rabi")
        if not self.mu > 0:
            raise ValidationError("detuning mu must be > 0", "mu")
        if not self.recoil > 0:
            raise ValidationError("recoil must be > 0", "recoil")

    @classmethod
    def from_wavevector(cls, rabi, mu, delta_k, ion_mass, **kw):
        return cls(rabi, mu, recoil_frequency(delta_k, ion_mass), delta_k=delta_k, **kw)

    def to_dict(self):
        return {
            "rabi": self.rabi.tolist(),
            "mu": self.mu,
            "recoil": self.recoil,
            "delta_k": None if np.isnan(self.delta_k) else self.delta_k,
            "carrier_hint": self.carrier_hint,
        }

    @classmethod
    def from_dict(cls, d):
        dk = d.get("delta_k")
        return cls(d["rabi"], float(d["mu"]), float(d["recoil"]),
                   float("nan") if dk is None else float(dk), float(d.get("carrier_hint", HYPERFINE_HZ)))


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric, zero-diagonal J (rad/s).  J > 0 is antiferromagnetic."""

    n_ions: int
    j: np.ndarray = field(repr=False)
    sign_flip: bool = False

    def __post_init__(self):
        j = np.array(self.j, dtype=float)
        if j.shape != (self.n_ions, self.n_ions):
            raise DimensionMismatch(f"J has shape {j.shape}, expected ({self.n_ions}, {self.n_ions})")
        if not np.all(np.isfinite(j)):
            raise ValidationError("J must be finite", "j")
        if not np.array_equal(j, j.T):
            raise ValidationError("J must be exactly symmetric", "j")
        if np.any(np.diag(j) != 0):
            raise ValidationError("J must have a zero diagonal", "j")
        j.setflags(write=False)
        object.__setattr__(self, "j", j)

    @classmethod
    def from_matrix(cls, j, sign_flip=False):
        """Symmetrize a square matrix and clear its diagonal."""
        j = np.asarray(j, dtype=float)
        j = 0.5 * (j + j.T)
        np.fill_diagonal(j, 0.0)
        return cls(len(j), j, sign_flip)

    def scaled(self, factor):
        return replace(self, j=self.j * factor)

    def permuted(self, perm):
        perm = np.asarray(perm)
        return replace(self, j=self.j[np.ix_(perm, perm)])

    def to_dict(self):
        return {"n_ions": self.n_ions, "j": self.j.tolist(), "sign_flip": self.sign_flip}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_ions"]), np.asarray(d["j"], dtype=float), bool(d.get("sign_flip", False)))


def coupling_matrix(spectrum, drive, resonance_guard=RESONANCE_GUARD):
    """J_ij = Omega_i Omega_j R sum_m b_im b_jm / (mu**2 - omega_m**2)."""
    if len(drive.rabi) == 1 and spectrum.n_ions > 1:
        rabi = np.full(spectrum.n_ions, drive.rabi[0])
    else:
        rabi = drive.rabi
    if len(rabi) != spectrum.n_ions:
        raise DimensionMismatch(f"{len(rabi)} Rabi frequencies for {spectrum.n_ions} ions")
    offsets = np.abs(drive.mu - spectrum.frequencies)
    if offsets.min() <= resonance_guard:
        m = int(np.argmin(offsets))
        raise ResonantDetuning(
            f"detuning within {offsets[m] / TWO_PI:.4g} Hz of mode {m + 1} "
            f"(guard {resonance_guard / TWO_PI:.4g} Hz)"
        )
    b = spectrum.mode_matrix
    weights = 1.0 / (drive.mu**2 - spectrum.frequencies**2)
    j = (b * weights) @ b.T
    j = drive.recoil * np.outer(rabi, rabi) * j
    j = 0.5 * (j + j.T)
    np.fill_diagonal(j, 0.0)
    return CouplingMatrix(spectrum.n_ions, j, False)


def apply_sign_flip(cm):
    """Global sign reversal, standing in for tracking the top eigenstate of H."""
    return CouplingMatrix(cm.n_ions, -cm.j + 0.0, not cm.sign_flip)


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    value: float
    kind: str
    tier: int


@dataclass(frozen=True)
class InteractionDiagram:
    """Signed graph after thresholding; ions are 1-based as in the figures."""

    n_ions: int
    edges: tuple
    dropped: tuple
    threshold: float

    def edge(self, i, j):
        i, j = min(i, j), max(i, j)
        for e in self.edges:
            if (e.i, e.j) == (i, j):
                return e
        return None

    def to_dict(self):
        as_dict = lambda e: {"i": e.i, "j": e.j, "value": e.value, "kind": e.kind, "tier": e.tier}
        return {
            "n_ions": self.n_ions,
            "threshold": self.threshold,
            "edges": [as_dict(e) for e in self.edges],
            "dropped": [as_dict(e) for e in self.dropped],
        }

    @classmethod
    def from_dict(cls, d):
        mk = lambda e: Edge(int(e["i"]), int(e["j"]), float(e["value"]), e["kind"], int(e["tier"]))
        return cls(int(d["n_ions"]), tuple(map(mk, d["edges"])), tuple(map(mk, d["dropped"])), float(d["threshold"]))


def classify_graph(cm, edge_threshold=0.2, tier_decimals=2):
    """Label every pair FM (J < 0) or AFM (J > 0) and drop weak ones.

    Pairs with ``|J| < edge_threshold * max|J|`` go to ``dropped``.  Tiers rank
    the distinct values of ``|J| / max|J|`` rounded to ``tier_decimals``,
    tier 1 being the strongest.
    """
    if not 0 < edge_threshold < 1:
        raise ValidationError("edge_threshold must lie in (0, 1)", "edge_threshold")
    n = cm.n_ions
    iu = np.triu_indices(n, 1)
    vals = cm.j[iu]
    scale = np.abs(vals).max() if len(vals) else 0.0
    if scale == 0:
        dropped = tuple(Edge(int(i) + 1, int(j) + 1, 0.0, "none", 0) for i, j in zip(*iu))
        return InteractionDiagram(n, (), dropped, edge_threshold)
    rel = np.round(np.abs(vals) / scale, tier_decimals)
    levels = sorted(set(rel.tolist()), reverse=True)
    kept, dropped = [], []
    for (i, j), v, r in zip(zip(*iu), vals, rel):
        e = Edge(int(i) + 1, int(j) + 1, float(v), "AFM" if v > 0 else "FM", levels.index(r) + 1)
        (kept if abs(v) >= edge_threshold * scale else dropped).append(e)
    return InteractionDiagram(n, tuple(kept), tuple(dropped), edge_threshold)
