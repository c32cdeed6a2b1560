"""Periodic-grid state representation.

The computational domain is the torus [-L, L)^n sampled on N points per axis,
with every node shifted by ``offset`` cells so that no node coincides with the
coordinate origin (all the |x|-weights used by the functionals stay finite).
Coordinates are the embedded Euclidean coordinates of the fundamental domain;
they are *not* wrapped, so radial weights are genuinely Euclidean as long as
the state stays well inside the box.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "WaveState",
    "GridError",
    "read_field",
    "write_field",
]


class GridError(ValueError):
    """Grid construction or grid/spec consistency error."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L, L)^n.

    Parameters
    ----------
    n : spatial dimension (>= 1)
    npts : points per axis; must be even for the spectral scheme
    half_width : L, half the box edge (length units)
    offset : node shift in units of one cell, in [0, 1); default 0.5 keeps
        the origin strictly inside a cell
    scheme : 'spectral' or 'fd4' derivative scheme
    """

    n: int
    npts: int
    half_width: float
    offset: float = 0.5
    scheme: str = "spectral"

    def __post_init__(self):
        if self.n < 1:
            raise GridError(f"dimension must be >= 1, got {self.n}")
        if self.npts < 4:
            raise GridError(f"need at least 4 points per axis, got {self.npts}")
        if self.scheme not in ("spectral", "fd4"):
            raise GridError(f"unknown derivative scheme {self.scheme!r}")
        if self.scheme == "spectral" and self.npts % 2 != 0:
            raise GridError("spectral scheme requires even npts")
        if not 0.0 <= self.offset < 1.0:
            raise GridError(f"offset must lie in [0, 1), got {self.offset}")
        if self.half_width <= 0:
            raise GridError("half_width must be positive")

    @property
    def cell(self) -> float:
        return 2.0 * self.half_width / self.npts

    @property
    def cell_volume(self) -> float:
        return self.cell**self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.npts,) * self.n

    @property
    def size(self) -> int:
        return self.npts**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        """1-D node coordinates along one axis."""
        h = self.cell
        return -self.half_width + (np.arange(self.npts) + self.offset) * h

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for j in range(self.n):
            sh = [1] * self.n
            sh[j] = self.npts
            out.append(self.axis.reshape(sh))
        return tuple(out)

    @cached_property
    def radius(self) -> np.ndarray:
        """|x| on the full grid (dense array)."""
        r2 = np.zeros(self.shape)
        for c in self.coords:
            r2 = r2 + c**2
        return np.sqrt(r2)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1-D FFT wavenumbers; the Nyquist derivative mode is zeroed."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.npts, d=self.cell)
        if self.npts % 2 == 0:
            k = k.copy()
            k[self.npts // 2] = 0.0
        return k

    @cached_property
    def k_axis_grids(self) -> tuple[np.ndarray, ...]:
        out = []
        for j in range(self.n):
            sh = [1] * self.n
            sh[j] = self.npts
            out.append(self.wavenumbers.reshape(sh))
        return tuple(out)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k2 = np.zeros(self.shape)
        for kg in self.k_axis_grids:
            k2 = k2 + kg**2
        return k2

    def deriv(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Partial derivative along one axis by the grid's scheme."""
        if self.scheme == "spectral":
            fh = np.fft.fft(values, axis=axis)
            sh = [1] * self.n
            sh[axis] = self.npts
            fh *= 1j * self.wavenumbers.reshape(sh)
            return np.fft.ifft(fh, axis=axis)
        # 4th-order central periodic stencil
        h = self.cell
        vp1 = np.roll(values, -1, axis=axis)
        vm1 = np.roll(values, 1, axis=axis)
        vp2 = np.roll(values, -2, axis=axis)
        vm2 = np.roll(values, 2, axis=axis)
        return (8.0 * (vp1 - vm1) - (vp2 - vm2)) / (12.0 * h)

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        if self.scheme == "spectral":
            fh = np.fft.fftn(values)
            return np.fft.ifftn(-self.k_squared * fh)
        out = np.zeros_like(values, dtype=complex)
        for j in range(self.n):
            out += self.deriv(self.deriv(values, j), j)
        return out

    def signature(self) -> str:
        return f"n{self.n}N{self.npts}L{self.half_width:g}o{self.offset:g}{self.scheme}"


@dataclass
class Field:
    """Complex grid function u on a GridSpec."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.isfinite(self.values).all():
            raise GridError("field contains non-finite entries")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def norm(self) -> float:
        """L2 norm: sqrt(cell volume * sum |u|^2)."""
        return float(np.sqrt(self.grid.cell_volume * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "Field") -> complex:
        """Hermitian L2 product <self, other> (conjugate-linear in self)."""
        return complex(self.grid.cell_volume * np.vdot(self.values, other.values))

    def integral(self, weight: np.ndarray | float = 1.0) -> float:
        """cell_volume * sum(weight * |u|^2)."""
        return float(self.grid.cell_volume * np.sum(weight * np.abs(self.values) ** 2))

    def spectral_tail_fraction(self, band: float = 0.25) -> float:
        """Fraction of L2 mass carried by the outer `band` of each spectral axis."""
        fh = np.fft.fftn(self.values)
        power = np.abs(fh) ** 2
        total = power.sum()
        if total == 0.0:
            return 0.0
        kmax = np.max(np.abs(self.grid.wavenumbers))
        cut = (1.0 - band) * kmax
        mask = np.zeros(self.grid.shape, dtype=bool)
        for kg in self.grid.k_axis_grids:
            mask |= np.abs(kg) >= cut
        return float(power[mask].sum() / total)

    def mass_fraction_inside(self, radius: float) -> float:
        w = (self.grid.radius <= radius).astype(float)
        total = np.sum(np.abs(self.values) ** 2)
        if total == 0.0:
            return 1.0
        return float(np.sum(w * np.abs(self.values) ** 2) / total)

    def radial_profile(self, nbins: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Bin-averaged |u|^2 versus radius, for CSV export."""
        if nbins <= 0:
            nbins = self.grid.npts
        r = self.grid.radius.ravel()
        p = np.abs(self.values.ravel()) ** 2
        edges = np.linspace(0.0, self.grid.half_width, nbins + 1)
        idx = np.clip(np.digitize(r, edges) - 1, 0, nbins - 1)
        sums = np.bincount(idx, weights=p, minlength=nbins)
        counts = np.maximum(np.bincount(idx, minlength=nbins), 1)
        centers = 0.5 * (edges[:-1] + edges[1:])
        return centers, sums / counts


@dataclass
class WaveState:
    """Pair (u, u_t) for the wave flow, on a common grid."""

    u: Field
    ut: Field

    def __post_init__(self):
        if self.u.grid != self.ut.grid:
            raise GridError("u and ut must share a grid")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def copy(self) -> "WaveState":
        return WaveState(self.u.copy(), self.ut.copy())


_MAGIC = b"MGLF"


def write_field(f: Field, path) -> None:
    """Flat binary layout: header (n, N, L, offset) then interleaved re/im doubles."""
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<iidd", g.n, g.npts, g.half_width, g.offset))
        inter = np.empty(g.size * 2)
        flat = f.values.ravel()  # row-major
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        fh.write(inter.tobytes())


def read_field(path, scheme: str = "spectral") -> Field:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise GridError(f"{path}: not a field checkpoint")
        n, npts, L, offset = struct.unpack("<iidd", fh.read(24))
        grid = GridSpec(n=n, npts=npts, half_width=L, offset=offset, scheme=scheme)
        inter = np.frombuffer(fh.read(grid.size * 16), dtype=float)
    values = (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape)
    return Field(grid, values)
