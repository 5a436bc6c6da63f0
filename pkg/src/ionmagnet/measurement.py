"""Readout: basis histograms, total-S_x distributions and finite-shot sampling."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import BasisMismatch, DimensionMismatch, ValidationError
from .spins import label, popcount, rotate_to_basis

PROB_TOL = 1e-9


@dataclass(frozen=True)
class PopulationHistogram:
    """Probabilities over ``2**N`` labels in binary order (ion 1 = most significant bit).

    Bit 1 means the spin was found in the +1 eigenstate of sigma_basis (shown as
    an up arrow).
    """

    n_spins: int
    basis: str
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).copy()
        if p.shape != (2**self.n_spins,):
            raise DimensionMismatch(f"{p.shape} probabilities for {self.n_spins} spins")
        if p.min() < -1e-12:
            raise ValidationError(f"negative probability {p.min():.3g}", "probs")
        p[p < 0] = 0.0
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {p.sum()!r}", "probs")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def labels(self):
        return [label(k, self.n_spins) for k in range(2**self.n_spins)]

    def top(self, k=8):
        """``k`` most likely labels; near-ties (1e-10) go to the lower index."""
        order = np.lexsort((np.arange(len(self.probs)), -np.round(self.probs, 10)))[:k]
        return [(int(i), float(self.probs[i])) for i in order]

    def to_dict(self):
        return {"n_spins": self.n_spins, "basis": self.basis, "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_spins"]), d["basis"], np.asarray(d["probs"], dtype=float))


@dataclass(frozen=True)
class SxDistribution:
    """Distribution of ``S_x = (1/2) sum_i sx_i`` over ``-N/2, ..., N/2``."""

    values: np.ndarray
    probs: np.ndarray

    @property
    def mean(self):
        return float(np.dot(self.values, self.probs))

    def to_dict(self):
        return {"values": self.values.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["values"], dtype=float), np.asarray(d["probs"], dtype=float))


def basis_populations(state, basis="y"):
    if basis not in ("x", "y", "z"):
        raise ValidationError(f"unknown basis {basis!r}", "basis")
    amps = rotate_to_basis(state.amplitudes, basis, state.n_spins)
    return PopulationHistogram(state.n_spins, basis, np.abs(amps) ** 2)


def sx_distribution(state):
    n = state.n_spins
    px = basis_populations(state, "x").probs
    ups = popcount(n)
    probs = np.bincount(ups, weights=px, minlength=n + 1)
    values = np.arange(n + 1) - n / 2.0
    return SxDistribution(values, probs)


def ground_state_fraction(hist, manifold):
    """Probability mass of a sigma_y histogram on the manifold configurations."""
    if hist.basis != "y":
        raise BasisMismatch(f"ground-state fraction needs a y-basis histogram, got {hist.basis!r}")
    if manifold.n_spins != hist.n_spins:
        raise DimensionMismatch(f"{manifold.n_spins}-spin manifold for a {hist.n_spins}-spin histogram")
    return float(hist.probs[manifold.indices].sum())


def flip_channel(probs, n, prep_error):
    """Histogram after each spin label flips independently with probability ``prep_error``."""
    if not 0.0 <= prep_error <= 1.0:
        raise ValidationError("prep_error must lie in [0, 1]", "prep_error")
    channel = np.array([[1.0 - prep_error, prep_error], [prep_error, 1.0 - prep_error]])
    p = np.asarray(probs, dtype=float)
    for site in range(n):
        t = p.reshape(2**site, 2, 2 ** (n - site - 1))
        p = np.einsum("ab,ibj->iaj", channel, t).reshape(-1)
    return p


def sample_shots(hist, n_shots, prep_error=0.0, seed=0):
    """Multinomial counts per label after the independent flip channel."""
    if n_shots < 0:
        raise ValidationError("n_shots must be >= 0", "n_shots")
    p = flip_channel(hist.probs, hist.n_spins, prep_error)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return rng.multinomial(n_shots, p)
