import numpy as np
import pytest

from lerayflow import WaveGrid


@pytest.fixture(scope="session")
def grid3() -> WaveGrid:
    return WaveGrid(3, 16)


@pytest.fixture(scope="session")
def grid2() -> WaveGrid:
    return WaveGrid(2, 32)


@pytest.fixture(scope="session")
def grid2_64() -> WaveGrid:
    return WaveGrid(2, 64)


def single_mode_field(grid, a, amplitude):
    """Hermitian pair at integer index a (and -a) with the given d-vector."""
    from lerayflow import SpectralVectorField
    coeffs = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    amp = np.asarray(amplitude, dtype=complex)
    idx = tuple(int(c) % grid.n for c in a)
    conj_idx = tuple((-int(c)) % grid.n for c in a)
    for comp in range(grid.dim):
        coeffs[(comp,) + idx] = amp[comp]
        coeffs[(comp,) + conj_idx] = np.conj(amp[comp])
    return SpectralVectorField(grid, coeffs)
