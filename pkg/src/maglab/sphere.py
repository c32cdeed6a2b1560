"""Deterministic point sets on spheres and interpolated surface integrals.

Spherical suprema and surface integrals are estimated from a fixed,
reproducible node set per sphere: a Fibonacci lattice in 3D and an unscrambled
Sobol sequence pushed through the inverse normal CDF in other dimensions.
Grid functions are evaluated on spheres by multilinear interpolation with
periodic wrapping.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage
from scipy.special import gamma, ndtri
from scipy.stats import qmc

__all__ = [
    "sphere_points",
    "sphere_area",
    "interpolate",
    "sphere_mean",
    "sphere_integral",
]

_CACHE: dict[tuple[int, int], np.ndarray] = {}


def sphere_points(n: int, count: int) -> np.ndarray:
    """`count` unit vectors on S^(n-1), deterministic across runs."""
    key = (n, count)
    if key in _CACHE:
        return _CACHE[key]
    if n == 3:
        # Fibonacci lattice
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        phi = np.pi * (1.0 + math.sqrt(5.0)) * i
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        pts = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    else:
        eng = qmc.Sobol(d=n, scramble=False)
        eng.fast_forward(8)
        u = eng.random(count)
        u = np.clip(u, 1e-12, 1.0 - 1e-12)
        g = ndtri(u)
        norms = np.linalg.norm(g, axis=1)
        norms[norms == 0.0] = 1.0
        pts = g / norms[:, None]
    _CACHE[key] = pts
    return pts


def sphere_area(n: int, radius: float) -> float:
    """Surface measure of the sphere |x| = radius in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0) * radius ** (n - 1)


def interpolate(values: np.ndarray, grid, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of a grid array at arbitrary points (periodic)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    idx = (pts + grid.half_width) / grid.cell - grid.offset
    coords = [idx[:, j] for j in range(grid.n)]
    if np.iscomplexobj(values):
        re = ndimage.map_coordinates(values.real, coords, order=1, mode="grid-wrap")
        im = ndimage.map_coordinates(values.imag, coords, order=1, mode="grid-wrap")
        return re + 1j * im
    return ndimage.map_coordinates(values, coords, order=1, mode="grid-wrap")


def sphere_mean(values: np.ndarray, grid, radius: float, count: int = 256) -> float:
    """Mean of a (real) grid function over the sphere |x| = radius."""
    pts = radius * sphere_points(grid.n, count)
    return float(np.mean(interpolate(values, grid, pts)))


def sphere_integral(values: np.ndarray, grid, radius: float, count: int = 256) -> float:
    """Surface integral over |x| = radius of an interpolated grid function."""
    return sphere_mean(values, grid, radius, count) * sphere_area(grid.n, radius)
