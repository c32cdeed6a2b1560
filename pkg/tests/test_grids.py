import numpy as np
import pytest

from maglab.grids import Field, GridError, GridSpec, WaveState, read_field, write_field


def test_offset_keeps_origin_off_nodes():
    g = GridSpec(n=3, npts=8, half_width=4.0)
    assert float(g.radius.min()) > 0.4 * g.cell


def test_spectral_derivative_exact_on_lattice_plane_waves():
    g = GridSpec(n=2, npts=16, half_width=3.0)
    k = (np.pi / g.half_width) * np.array([3.0, -2.0])
    u = np.exp(1j * (k[0] * g.coords[0] + k[1] * g.coords[1]))
    for j in range(2):
        d = g.deriv(u, j)
        np.testing.assert_allclose(d, 1j * k[j] * u, atol=1e-10)


def test_fd4_order_of_accuracy():
    errs = []
    for N in (32, 64):
        g = GridSpec(n=1, npts=N, half_width=np.pi, scheme="fd4")
        u = np.exp(np.sin(g.coords[0]))
        want = np.cos(g.coords[0]) * u
        errs.append(np.abs(g.deriv(u, 0) - want).max())
    assert errs[0] / errs[1] > 12.0  # ~16x for 4th order


def test_norm_and_inner_consistency():
    g = GridSpec(n=3, npts=8, half_width=2.0)
    rng = np.random.default_rng(0)
    u = Field(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    assert u.norm() == pytest.approx(abs(u.inner(u)) ** 0.5)


def test_field_shape_and_finite_checks():
    g = GridSpec(n=2, npts=8, half_width=1.0)
    with pytest.raises(GridError):
        Field(g, np.zeros((8, 9)))
    bad = np.zeros((8, 8), dtype=complex)
    bad[0, 0] = np.nan
    with pytest.raises(GridError):
        Field(g, bad)


def test_grid_validation():
    with pytest.raises(GridError):
        GridSpec(n=3, npts=9, half_width=1.0)          # odd spectral
    with pytest.raises(GridError):
        GridSpec(n=3, npts=8, half_width=1.0, offset=1.0)
    with pytest.raises(GridError):
        GridSpec(n=3, npts=8, half_width=-1.0)
    GridSpec(n=3, npts=9, half_width=1.0, scheme="fd4")  # odd is fine for fd4


def test_binary_roundtrip(tmp_path):
    g = GridSpec(n=3, npts=6, half_width=1.5, offset=0.5)
    rng = np.random.default_rng(7)
    u = Field(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    path = tmp_path / "state.bin"
    write_field(u, path)
    v = read_field(path)
    assert v.grid == g
    np.testing.assert_array_equal(v.values, u.values)


def test_spectral_tail_and_containment():
    g = GridSpec(n=3, npts=24, half_width=6.0)
    wide = Field(g, np.exp(-g.radius**2 / (2 * 1.5**2)))
    assert wide.spectral_tail_fraction() < 1e-8
    narrow = Field(g, np.exp(-g.radius**2 / 2))
    assert narrow.mass_fraction_inside(3.0) > 0.999
    rng = np.random.default_rng(1)
    noisy = Field(g, rng.normal(size=g.shape))
    assert noisy.spectral_tail_fraction() > 1e-3


def test_radial_profile_monotone_gaussian():
    g = GridSpec(n=3, npts=24, half_width=4.0)
    u = Field(g, np.exp(-g.radius**2))
    centers, prof = u.radial_profile(nbins=8)
    assert prof[0] > prof[3] > prof[6]


def test_wavestate_grid_mismatch():
    g1 = GridSpec(n=2, npts=8, half_width=1.0)
    g2 = GridSpec(n=2, npts=16, half_width=1.0)
    with pytest.raises(GridError):
        WaveState(Field(g1, np.zeros(g1.shape)), Field(g2, np.zeros(g2.shape)))
