import numpy as np
import pytest

from hosf.coefficients import PhysicalConstants, make_operator
from hosf.grid import GridSpec, OrbitalSet, gram_schmidt
from hosf.meanfield import coulomb_kernel
from hosf.potentials import sample_coulomb
from hosf.propagation import EvolutionProblem


def random_orbitals(grid: GridSpec, n_orb: int, rng: np.random.Generator, smooth: float = 0.0) -> OrbitalSet:
    raw = rng.standard_normal((n_orb, *grid.shape)) + 1j * rng.standard_normal((n_orb, *grid.shape))
    if smooth:
        # damp high modes so the data is resolved
        hat = np.fft.fftn(raw, axes=tuple(range(1, grid.dim + 1)))
        hat *= np.exp(-smooth * grid.k2)
        raw = np.fft.ifftn(hat, axes=tuple(range(1, grid.dim + 1)))
    return OrbitalSet(grid, raw)


def two_orbital_system(J: int = 2, n: int = 256, length: float = 40.0, kappa: float = 1.0):
    """Two orthonormalized moving packets in a soft Coulomb well with the
    screened 1D kernel."""
    grid = GridSpec.cube(1, n, length)
    x = grid.coords[0]
    a = np.exp(-((x + 2) ** 2) / 4 + 0.5j * x)
    b = np.exp(-((x - 1.5) ** 2) / 2 - 0.3j * x)
    orb = gram_schmidt(OrbitalSet(grid, np.stack([a, b])))
    consts = PhysicalConstants(kappa=kappa)
    op = make_operator(grid, J, consts)
    pot = sample_coulomb(0.5, 1.0, grid).values
    problem = EvolutionProblem(op, consts, pot, coulomb_kernel(grid, screening=1.0))
    return orb, problem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hf_system():
    return two_orbital_system()
