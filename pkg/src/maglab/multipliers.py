"""Radial multipliers and plateau weights for the virial/smoothing machinery.

Each multiplier carries closed-form phi, phi', phi'', the regular part of the
radial Laplacian, and the *structural* distributional content of the
bi-Laplacian: a point mass at the origin plus surface masses on spheres.
Dirac masses are never sampled on a grid; consumers pair them with |u|^2 by
interpolation / spherical quadrature.

Piecewise profiles evaluate the inner piece at exact piece boundaries
(measure-zero determinism choice).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "RadialMultiplier",
    "PlateauWeight",
    "MultiplierError",
    "make_morawetz_3d",
    "make_abs",
    "make_perturbed_nd",
    "make_variance",
    "make_plateau",
    "hessian_form",
    "hessian_form_grid",
    "builtin_multiplier",
    "BUILTIN_MULTIPLIERS",
]


class MultiplierError(ValueError):
    pass


@dataclass(frozen=True)
class RadialMultiplier:
    """Radial weight phi with derivative data and distributional bi-Laplacian.

    ``bilap_regular`` is the absolutely continuous part of lap^2 phi;
    ``point_mass`` is the coefficient of the Dirac mass at the origin and
    ``surface_masses`` lists (radius, weight) pairs for sphere-supported
    masses.  ``bounded_slope`` / ``bounded_r_curvature`` record whether phi'
    and r phi'' are bounded (preconditions of the interpolation pairing).
    """

    profile: str
    n: int
    params: dict = field(default_factory=dict)
    phi: Callable[[np.ndarray], np.ndarray] = None
    dphi: Callable[[np.ndarray], np.ndarray] = None
    d2phi: Callable[[np.ndarray], np.ndarray] = None
    lap: Callable[[np.ndarray], np.ndarray] = None
    bilap_regular: Callable[[np.ndarray], np.ndarray] = None
    point_mass: float = 0.0
    surface_masses: tuple = ()
    piece_boundaries: tuple = ()
    bounded_slope: bool = True
    bounded_r_curvature: bool = True

    def profile_table(self, radii: np.ndarray) -> np.ndarray:
        """Columns (r, phi, phi', phi'', lap phi) for CSV export."""
        r = np.asarray(radii, dtype=float)
        return np.column_stack([r, self.phi(r), self.dphi(r), self.d2phi(r), self.lap(r)])


@dataclass(frozen=True)
class PlateauWeight:
    """Piecewise-constant weight: 1/(2R) inside the ball of radius R, else 0."""

    R: float

    def __post_init__(self):
        if self.R <= 0:
            raise MultiplierError("plateau radius must be positive")

    @property
    def inside_value(self) -> float:
        return 1.0 / (2.0 * self.R)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.R, self.inside_value, 0.0)

    def sample_on_grid(self, grid) -> np.ndarray:
        return self(grid.radius)

    def weak_laplacian_pairing(self, u_field) -> float:
        """int |u|^2 dPsi evaluated in weak form as int lap(|u|^2) Psi."""
        grid = u_field.grid
        dens = np.abs(u_field.values) ** 2
        lap = grid.laplacian(dens).real
        return float(grid.cell_volume * np.sum(lap * self.sample_on_grid(grid)))


def _positive(name: str, value: float) -> None:
    if value <= 0:
        raise MultiplierError(f"{name} must be positive, got {value}")


def make_morawetz_3d(M: float, R: float) -> RadialMultiplier:
    """Piecewise 3D multiplier with slope M + r/(3R) inside the ball of radius R.

    Outside, phi' = M + 1/2 - R^2/(6 r^2).  The bi-Laplacian is purely
    distributional: a point mass -8 pi M at the origin (the lap^2 of the M|x|
    part) and a surface mass -1/R^2 on |x| = R; the regular part vanishes.
    """
    if M < 0:
        raise MultiplierError(f"M must be >= 0, got {M}")
    _positive("R", R)

    def phi(r):
        r = np.asarray(r, dtype=float)
        inside = M * r + r**2 / (6.0 * R)
        outside = M * r + r / 2.0 + R**2 / (6.0 * r) - R / 2.0
        return np.where(r <= R, inside, outside)

    def dphi(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= R, M + r / (3.0 * R), M + 0.5 - R**2 / (6.0 * r**2))

    def d2phi(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= R, 1.0 / (3.0 * R), R**2 / (3.0 * r**3))

    def lap(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= R, 1.0 / R + 2.0 * M / r, (2.0 * M + 1.0) / r)

    return RadialMultiplier(
        profile="morawetz-3d",
        n=3,
        params={"M": M, "R": R},
        phi=phi,
        dphi=dphi,
        d2phi=d2phi,
        lap=lap,
        bilap_regular=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        point_mass=-8.0 * math.pi * M,
        surface_masses=((R, -1.0 / R**2),),
        piece_boundaries=(R,),
        bounded_slope=True,
        bounded_r_curvature=True,
    )


def make_abs(n: int) -> RadialMultiplier:
    """phi(r) = r.  Regular bi-Laplacian -(n-1)(n-3)/r^3.

    In n = 3 that regular part vanishes but lap phi = 2/r still carries the
    point mass -8 pi at the origin; it is recorded structurally.
    """
    if n < 3:
        raise MultiplierError(f"|x| multiplier needs n >= 3, got {n}")
    c = -(n - 1.0) * (n - 3.0)
    return RadialMultiplier(
        profile="abs",
        n=n,
        params={},
        phi=lambda r: np.asarray(r, dtype=float),
        dphi=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        d2phi=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        lap=lambda r: (n - 1.0) / np.asarray(r, dtype=float),
        bilap_regular=lambda r: c / np.asarray(r, dtype=float) ** 3,
        point_mass=-8.0 * math.pi if n == 3 else 0.0,
        surface_masses=(),
        bounded_slope=True,
        bounded_r_curvature=True,
    )


def make_perturbed_nd(R: float, n: int) -> RadialMultiplier:
    """phi~_R = |x| + perturbation with slope capped at 3/2.

    Inside r <= R the perturbation slope is (n-1) r / (2 n R); outside it is
    1/2 - R^(n-1) / (2 n r^(n-1)).  The bi-Laplacian carries a surface mass
    -(n-1)/(2 R^2) on |x| = R, the |x| part's regular term -(n-1)(n-3)/r^3
    everywhere plus an extra -(n-1)(n-3)/(2 r^3) on r >= R, and (n = 3 only)
    the point mass -8 pi of |x|.
    """
    _positive("R", R)
    if n < 3:
        raise MultiplierError(f"perturbed multiplier needs n >= 3, got {n}")
    cn = (n - 1.0) / (2.0 * n)

    def pert_phi(r):
        r = np.asarray(r, dtype=float)
        inside = cn * r**2 / (2.0 * R)
        at_R = cn * R / 2.0
        tail = (r ** (2 - n) - R ** (2 - n)) / (2.0 - n)
        outside = at_R + (r - R) / 2.0 - R ** (n - 1) / (2.0 * n) * tail
        return np.where(r <= R, inside, outside)

    def phi(r):
        r = np.asarray(r, dtype=float)
        return r + pert_phi(r)

    def dphi(r):
        r = np.asarray(r, dtype=float)
        inside = 1.0 + cn * r / R
        outside = 1.5 - R ** (n - 1) / (2.0 * n * r ** (n - 1))
        return np.where(r <= R, inside, outside)

    def d2phi(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= R, cn / R, (n - 1.0) * R ** (n - 1) / (2.0 * n * r**n))

    def lap(r):
        r = np.asarray(r, dtype=float)
        base = (n - 1.0) / r
        return np.where(r <= R, base + (n - 1.0) / (2.0 * R), base + (n - 1.0) / (2.0 * r))

    c = -(n - 1.0) * (n - 3.0)

    def bilap_regular(r):
        r = np.asarray(r, dtype=float)
        return c / r**3 + np.where(r >= R, 0.5 * c / r**3, 0.0)

    return RadialMultiplier(
        profile="perturbed-nd",
        n=n,
        params={"R": R},
        phi=phi,
        dphi=dphi,
        d2phi=d2phi,
        lap=lap,
        bilap_regular=bilap_regular,
        point_mass=-8.0 * math.pi if n == 3 else 0.0,
        surface_masses=((R, -(n - 1.0) / (2.0 * R**2)),),
        piece_boundaries=(R,),
        bounded_slope=True,
        bounded_r_curvature=True,
    )


def make_variance(n: int = 3) -> RadialMultiplier:
    """phi(r) = r^2: Hessian 2*Id, vanishing bi-Laplacian, unbounded slope."""
    return RadialMultiplier(
        profile="variance",
        n=n,
        params={},
        phi=lambda r: np.asarray(r, dtype=float) ** 2,
        dphi=lambda r: 2.0 * np.asarray(r, dtype=float),
        d2phi=lambda r: np.full_like(np.asarray(r, dtype=float), 2.0),
        lap=lambda r: np.full_like(np.asarray(r, dtype=float), 2.0 * n),
        bilap_regular=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        bounded_slope=False,
        bounded_r_curvature=False,
    )


def make_plateau(R: float) -> PlateauWeight:
    return PlateauWeight(R=R)


def hessian_form(m: RadialMultiplier, x: np.ndarray, w: np.ndarray) -> float:
    """Quadratic form of the Hessian of phi on a (complex) vector w at x:

        phi''(|x|) |w_r|^2 + (phi'(|x|)/|x|) |w_tau|^2,

    where w_r is the radial projection of w.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise MultiplierError("Hessian form undefined at x = 0")
    w = np.asarray(w, dtype=complex)
    wr = np.vdot(x / r, w)  # complex radial component
    wr2 = abs(wr) ** 2
    wtau2 = float(np.sum(np.abs(w) ** 2)) - wr2
    return float(m.d2phi(r) * wr2 + m.dphi(r) / r * wtau2)


def hessian_form_grid(m: RadialMultiplier, grid, gcomps: list[np.ndarray]) -> np.ndarray:
    """Pointwise Hessian form of phi on a gradient-like family of grid arrays."""
    r = grid.radius
    gr = np.zeros(grid.shape, dtype=complex)
    total = np.zeros(grid.shape)
    for c, g in zip(grid.coords, gcomps):
        gr = gr + (c / r) * g
        total = total + np.abs(g) ** 2
    wr2 = np.abs(gr) ** 2
    wtau2 = np.maximum(total - wr2, 0.0)
    return m.d2phi(r) * wr2 + m.dphi(r) / r * wtau2


BUILTIN_MULTIPLIERS: dict[str, Callable[..., RadialMultiplier]] = {
    "morawetz-3d": lambda n=3, **p: make_morawetz_3d(p.get("M", 0.5), p.get("R", 1.0)),
    "abs": lambda n=3, **p: make_abs(n),
    "perturbed-nd": lambda n=3, **p: make_perturbed_nd(p.get("R", 1.0), n),
    "variance": lambda n=3, **p: make_variance(n),
}


def builtin_multiplier(name: str, n: int = 3, **params) -> RadialMultiplier:
    try:
        factory = BUILTIN_MULTIPLIERS[name]
    except KeyError:
        raise MultiplierError(
            f"unknown multiplier {name!r}; available: {sorted(BUILTIN_MULTIPLIERS)}"
        ) from None
    return factory(n=n, **params)
