import numpy as np
import pytest

from maglab.grids import Field, GridSpec
from maglab.operators import SampledPotential
from maglab.potentials import make_azimuthal_point, make_free


def resolved_noise(grid: GridSpec, rng, keep: float = 0.5, localized: bool = True) -> np.ndarray:
    """Band-limited random field, optionally envelope-localized in the half-ball."""
    noise = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    fh = np.fft.fftn(noise)
    kmax = np.max(np.abs(grid.wavenumbers))
    mask = grid.k_squared <= (keep * kmax) ** 2
    out = np.fft.ifftn(fh * mask)
    if localized:
        out = out * np.exp(-grid.radius**2 / (2.0 * (grid.half_width / 4.0) ** 2))
    return out


def gaussian_field(grid: GridSpec, width=1.0, center=None, momentum=None, amp=1.0) -> Field:
    c = np.zeros(grid.n) if center is None else np.asarray(center, dtype=float)
    m = np.zeros(grid.n) if momentum is None else np.asarray(momentum, dtype=float)
    r2 = np.zeros(grid.shape)
    phase = np.zeros(grid.shape)
    for j, x in enumerate(grid.coords):
        r2 = r2 + (x - c[j]) ** 2
        phase = phase + (np.pi / grid.half_width) * m[j] * x
    return Field(grid, amp * np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * phase))


@pytest.fixture(scope="session")
def grid8() -> GridSpec:
    return GridSpec(n=3, npts=8, half_width=4.0)


@pytest.fixture(scope="session")
def grid12() -> GridSpec:
    return GridSpec(n=3, npts=12, half_width=4.0)


@pytest.fixture(scope="session")
def free_pot8(grid8) -> SampledPotential:
    return SampledPotential.from_spec(make_free(), grid8)


@pytest.fixture(scope="session")
def azim_pot8(grid8) -> SampledPotential:
    """Mollified singular azimuthal potential on the coarse oracle grid."""
    return SampledPotential.from_spec(
        make_azimuthal_point(eps=2 * grid8.cell, lam=0.8), grid8)


@pytest.fixture(scope="session")
def azim_raw_pot8(grid8) -> SampledPotential:
    return SampledPotential.from_spec(make_azimuthal_point(lam=0.8), grid8)
