"""Built-in traps, interaction diagrams and experiment definitions.

The trap frequencies behind the measured crystals were never published, so the
trap presets are stand-ins: anisotropies chosen so that the multi-start
minimizer lands on the right geometry class (a 60-degree rhombus for four
ions, a centered hexagon for seven, 2+8 and 3+9 shells for ten and twelve).

The interaction diagrams are hand-coded signed graphs with two magnitude
tiers, ``J0`` for nearest neighbours and ``0.4 J0`` further out.  They are
numbered the way the figures number ions, which is *not* the lexicographic
order used for computed crystals:

* four ions: 1-2-3-4 around the rhombus perimeter, 2-4 the short diagonal;
* seven ions: 1 is the center, 2..7 run around the hexagon;
* ten ions: 1..8 run around the outer ring, 9 and 10 are the inner pair.
"""

import itertools

import numpy as np

from .couplings import CouplingMatrix, apply_sign_flip
from .crystal import TrapParams

TWO_PI = 2 * np.pi
NEXT_NEAREST_RATIO = 0.4

# (fx, fy, fz) in kHz, frequency / 2pi
TRAPS = {
    "pair2": (500.0, 500.0, 2500.0),
    "rhombus4": (463.0, 600.0, 1500.0),
    "hexagon7": (500.0, 500.0, 1500.0),
    "crystal10": (500.0, 500.0, 1500.0),
    "crystal12": (500.0, 500.0, 1500.0),
}
TRAP_IONS = {"pair2": 2, "rhombus4": 4, "hexagon7": 7, "crystal10": 10, "crystal12": 12}


def trap_preset(name):
    return TrapParams.from_khz(*TRAPS[name])


def _build(n, edges):
    j = np.zeros((n, n))
    for (a, b), v in edges.items():
        j[a - 1, b - 1] = j[b - 1, a - 1] = v
    return CouplingMatrix(n, j)


def _ring_pairs(ring):
    """``{(i, j): hops}`` for every pair on a ring, hops measured the short way."""
    m = len(ring)
    out = {}
    for a in range(m):
        for d in range(1, m // 2 + 1):
            i, j = sorted((ring[a], ring[(a + d) % m]))
            out[(i, j)] = d
    return out


def fm4(j0):
    """All-to-all ferromagnet, obtained from a uniform antiferromagnet by the sign flip."""
    afm = _build(4, {pair: j0 for pair in itertools.combinations(range(1, 5), 2)})
    return apply_sign_flip(afm)


def neel4(j0, ratio=NEXT_NEAREST_RATIO):
    """Nearest-neighbour AFM on the rhombus, ferromagnetic long diagonal."""
    edges = {(1, 2): j0, (2, 3): j0, (3, 4): j0, (1, 4): j0, (2, 4): j0, (1, 3): -ratio * j0}
    return _build(4, edges)


_HEX_RING = (2, 3, 4, 5, 6, 7)


def hex7_case1(j0, ratio=NEXT_NEAREST_RATIO):
    """Ring AFM nearest / FM next-nearest; the center is FM to four ring ions, AFM to 2 and 5."""
    edges = {}
    for pair, hops in _ring_pairs(_HEX_RING).items():
        if hops == 1:
            edges[pair] = j0
        elif hops == 2:
            edges[pair] = -ratio * j0
    for k in _HEX_RING:
        edges[(1, k)] = j0 if k in (2, 5) else -j0
    return _build(7, edges)


def _two_sublattice(n, ring, group, j0, ratio, center=None, center_all_fm=False):
    spin = {k: (1 if k in group else -1) for k in range(1, n + 1)}
    edges = {}
    for (a, b), hops in _ring_pairs(ring).items():
        mag = j0 if hops == 1 else ratio * j0
        edges[(a, b)] = -mag * spin[a] * spin[b]
    if center is not None:
        for k in ring:
            edges[(center, k)] = -j0 if center_all_fm else -j0 * spin[center] * spin[k]
    return _build(n, edges)


def hex7_case2(j0, ratio=NEXT_NEAREST_RATIO):
    """Sub-lattices {1, 4, 7} and {2, 3, 5, 6}: FM inside, AFM between (unfrustrated)."""
    return _two_sublattice(7, _HEX_RING, {1, 4, 7}, j0, ratio, center=1)


def hex7_case3(j0, ratio=NEXT_NEAREST_RATIO):
    """Left {2, 6, 7} and right {3, 4, 5} sub-lattices, center FM to everyone."""
    return _two_sublattice(7, _HEX_RING, {2, 6, 7}, j0, ratio, center=1, center_all_fm=True)


def frustrated10(j0, ratio=NEXT_NEAREST_RATIO):
    """Outer 8-ring Neel (AFM nearest, FM next-nearest); inner ions 9 and 10 see zero net field.

    Ion 9 is AFM-coupled to ring ions 1-4, ion 10 to 5-8, and the inner pair
    does not interact, so both inner spins stay free in either Neel order.
    """
    ring = tuple(range(1, 9))
    edges = {}
    for pair, hops in _ring_pairs(ring).items():
        if hops == 1:
            edges[pair] = j0
        elif hops == 2:
            edges[pair] = -ratio * j0
    for k in (1, 2, 3, 4):
        edges[(k, 9)] = j0
    for k in (5, 6, 7, 8):
        edges[(k, 10)] = j0
    return _build(10, edges)


DIAGRAMS = {
    "fm4": fm4,
    "neel4": neel4,
    "hex7_case1": hex7_case1,
    "hex7_case2": hex7_case2,
    "hex7_case3": hex7_case3,
    "frustrated10": frustrated10,
}

# classical ground-state degeneracies the diagrams are built to reproduce
EXPECTED_DEGENERACY = {
    "fm4": 2,
    "neel4": 2,
    "hex7_case1": 4,
    "hex7_case2": 2,
    "hex7_case3": 4,
    "frustrated10": 8,
}


def diagram(name, j0_khz):
    """Coupling preset with nearest-neighbour magnitude ``j0_khz`` (frequency/2pi, kHz)."""
    try:
        build = DIAGRAMS[name]
    except KeyError:
        raise KeyError(f"unknown diagram {name!r}; choose from {sorted(DIAGRAMS)}") from None
    return build(TWO_PI * 1e3 * j0_khz)


_RAMAN = {"rabi_khz": 50.0, "delta_k": float(np.sqrt(2.0) * TWO_PI / 355e-9)}

# full experiment definitions; every block named here replaces the user's block
EXPERIMENTS = {
    "fm4": {
        "description": "4-ion rhombus, uniform ferromagnet via the sign flip, detuned 10 kHz above COM",
        "trap": {"preset": "rhombus4", "n_ions": 4},
        "drive": {**_RAMAN, "mu_mode": 1, "mu_offset_khz": 10.0, "sign_flip": True,
                  "diagram": "fm4", "j0_khz": 2.0},
        "schedule": {"b0_khz": 29.0, "b_end_fraction": 0.0075},
    },
    "neel4": {
        "description": "4-ion rhombus, AFM nearest / FM next-nearest, red side of the third mode",
        "trap": {"preset": "rhombus4", "n_ions": 4},
        "drive": {**_RAMAN, "mu_mode": 3, "mu_offset_khz": -10.0, "sign_flip": False,
                  "diagram": "neel4", "j0_khz": 3.0},
        "schedule": {"b0_khz": 29.0, "b_end_fraction": 0.02},
    },
    "hex7_case1": {
        "description": "7-ion centered hexagon, frustrated center spin (four-fold ground state)",
        "trap": {"preset": "hexagon7", "n_ions": 7},
        "drive": {**_RAMAN, "mu_mode": 6, "mu_offset_khz": -10.0, "sign_flip": False,
                  "diagram": "hex7_case1", "j0_khz": 4.0},
        "schedule": {"b0_khz": 29.0, "b_end_fraction": 0.05},
    },
    "hex7_case2": {
        "description": "7-ion centered hexagon, two anti-aligned sub-lattices (two-fold ground state)",
        "trap": {"preset": "hexagon7", "n_ions": 7},
        "drive": {**_RAMAN, "mu_mode": 4, "mu_offset_khz": -10.0, "sign_flip": False,
                  "diagram": "hex7_case2", "j0_khz": 3.0},
        "schedule": {"b0_khz": 29.0, "b_end_fraction": 0.05},
    },
    "hex7_case3": {
        "description": "7-ion centered hexagon, center FM to all (four-fold ground state), left of mode 7",
        "trap": {"preset": "hexagon7", "n_ions": 7},
        "drive": {**_RAMAN, "mu_mode": 7, "mu_offset_khz": -10.0, "sign_flip": False,
                  "diagram": "hex7_case3", "j0_khz": 4.0},
        "schedule": {"b0_khz": 29.0, "b_end_fraction": 0.05},
    },
    "frustrated10": {
        "description": "10-ion 2+8 crystal, Neel ring with two free inner spins, between modes 8 and 9",
        "trap": {"preset": "crystal10", "n_ions": 10},
        "drive": {**_RAMAN, "mu_mode": 8, "mu_offset_khz": -1.4, "sign_flip": False,
                  "diagram": "frustrated10", "j0_khz": 4.0},
        "schedule": {"b0_khz": 29.0, "b_end_fraction": 0.05},
    },
}
