import numpy as np
import pytest

from ionmagnet.crystal import TrapParams, equilibrium_positions
from ionmagnet.modes import transverse_modes
from ionmagnet.presets import trap_preset


@pytest.fixture(scope="session")
def hexagon():
    trap = trap_preset("hexagon7")
    crystal = equilibrium_positions(trap, 7)
    return trap, crystal, transverse_modes(crystal, trap)


@pytest.fixture(scope="session")
def preset_spectra():
    out = {}
    for name, n in (("pair2", 2), ("rhombus4", 4), ("hexagon7", 7), ("crystal10", 10), ("crystal12", 12)):
        trap = trap_preset(name)
        crystal = equilibrium_positions(trap, n)
        out[name] = (trap, crystal, transverse_modes(crystal, trap))
    return out


def random_couplings(n, seed, scale=1.0):
    from ionmagnet.couplings import CouplingMatrix

    rng = np.random.default_rng(seed)
    j = rng.normal(scale=scale, size=(n, n))
    return CouplingMatrix.from_matrix(j)


def isotropic(a_z=25.0):
    return TrapParams(1.0, 1.0, float(np.sqrt(a_z)))
