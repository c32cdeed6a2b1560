"""Reconstruction of a vector potential from its magnetic field (n = 3).

For a divergence-free, decaying field the curl-consistent inversion is

    A(x) = (1/4pi) int B(y) ^ (x - y)/|x - y|^3 dy,

i.e. A = curl (-lap)^-1 B, so that eval_B of the reconstruction returns B at
interior points.  (Writing the kernel on the other side of the wedge flips
the sign of A; structural facts like A(omega) = 0 are unaffected.)

The volume integral is truncated to a spherical annulus and evaluated with a
tensor quadrature (Gauss-Legendre in radius and polar cosine, trapezoid in
azimuth).  The singular kernel is treated as a principal value: nodes inside
the ball |y - x| < h are dropped.  By the kernel's antisymmetry the excluded
mass is O(h^2); one Richardson step between h and 2h removes it, and h stays
*fixed* under node refinement so that refinement converges the PV integral
itself.  The Jacobian differentiates the kernel analytically under the
integral and adds the local term (1/3) eps_{iaj} B_a(x), the distributional
part of the kernel derivative that no principal value can see.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .potentials import PotentialSpec

__all__ = [
    "BiotSavartQuadrature",
    "QuadratureConvergenceError",
    "biot_savart",
    "biot_savart_jacobian",
    "reconstructed_potential",
    "homogeneous_field",
    "make_biot_family",
]

_EPS3 = np.zeros((3, 3, 3))
_EPS3[0, 1, 2] = _EPS3[1, 2, 0] = _EPS3[2, 0, 1] = 1.0
_EPS3[0, 2, 1] = _EPS3[2, 1, 0] = _EPS3[1, 0, 2] = -1.0


class QuadratureConvergenceError(ArithmeticError):
    def __init__(self, message: str, coarse: np.ndarray, fine: np.ndarray):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


@dataclass(frozen=True)
class BiotSavartQuadrature:
    """Annulus truncation, node counts and exclusion radius."""

    r_inner: float = 0.25
    r_outer: float = 6.0
    n_radial: int = 64
    n_polar: int = 48
    n_azimuth: int = 96
    exclusion: float = 0.0        # 0 -> three radial spacings of the *base* rule
    rtol: float = 2e-2            # refinement agreement for check_convergence

    def __post_init__(self):
        if not 0.0 <= self.r_inner < self.r_outer:
            raise ValueError("need 0 <= r_inner < r_outer")

    def exclusion_radius(self) -> float:
        if self.exclusion > 0.0:
            return self.exclusion
        return 3.0 * (self.r_outer - self.r_inner) / self.n_radial

    def refined(self, factor: int = 2) -> "BiotSavartQuadrature":
        # exclusion pinned to the base rule's value so refinement converges PV(h)
        return BiotSavartQuadrature(
            r_inner=self.r_inner, r_outer=self.r_outer,
            n_radial=factor * self.n_radial, n_polar=factor * self.n_polar,
            n_azimuth=factor * self.n_azimuth,
            exclusion=self.exclusion_radius(), rtol=self.rtol,
        )

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """(points (m,3), weights (m,)) over the annulus."""
        xr, wr = np.polynomial.legendre.leggauss(self.n_radial)
        rho = 0.5 * (self.r_outer - self.r_inner) * (xr + 1.0) + self.r_inner
        wrho = 0.5 * (self.r_outer - self.r_inner) * wr
        xc, wc = np.polynomial.legendre.leggauss(self.n_polar)
        phi = 2.0 * np.pi * np.arange(self.n_azimuth) / self.n_azimuth
        wphi = 2.0 * np.pi / self.n_azimuth

        R, Cth, Ph = np.meshgrid(rho, xc, phi, indexing="ij")
        WR, WC, _ = np.meshgrid(wrho, wc, np.ones(self.n_azimuth), indexing="ij")
        sth = np.sqrt(np.maximum(0.0, 1.0 - Cth**2))
        pts = np.stack(
            [R * sth * np.cos(Ph), R * sth * np.sin(Ph), R * Cth], axis=-1
        ).reshape(-1, 3)
        wgt = (R**2 * WR * WC * wphi).reshape(-1)
        return pts, wgt


def _value_pv(B_vals, pts, wgt, x, h: float) -> np.ndarray:
    r = x[None, :] - pts
    dist = np.linalg.norm(r, axis=1)
    mask = dist >= h
    rm, dm = r[mask], dist[mask]
    cross = np.cross(B_vals[mask], rm)
    return np.sum(wgt[mask, None] * cross / dm[:, None] ** 3, axis=0) / (4.0 * math.pi)


def biot_savart(B_rule: Callable[[np.ndarray], np.ndarray], x,
                quad: BiotSavartQuadrature | None = None,
                check_convergence: bool = False) -> np.ndarray:
    """Reconstruct A(x) by principal-value quadrature.

    ``B_rule`` maps stacked points (m, 3) to field vectors (m, 3).  With
    ``check_convergence`` the quadrature is repeated at doubled node counts
    (same exclusion radius) and a disagreement beyond ``quad.rtol`` raises,
    carrying both values.
    """
    quad = quad or BiotSavartQuadrature()
    x = np.asarray(x, dtype=float)
    pts, wgt = quad.nodes()
    B_vals = np.asarray(B_rule(pts), dtype=float)
    h = quad.exclusion_radius()
    val = (4.0 * _value_pv(B_vals, pts, wgt, x, h)
           - _value_pv(B_vals, pts, wgt, x, 2.0 * h)) / 3.0
    if check_convergence:
        q2 = quad.refined()
        pts2, wgt2 = q2.nodes()
        B2 = np.asarray(B_rule(pts2), dtype=float)
        val2 = (4.0 * _value_pv(B2, pts2, wgt2, x, h)
                - _value_pv(B2, pts2, wgt2, x, 2.0 * h)) / 3.0
        scale = max(float(np.linalg.norm(val2)), 1e-300)
        if float(np.linalg.norm(val - val2)) / scale > quad.rtol:
            raise QuadratureConvergenceError(
                f"reconstruction at x={x.tolist()} not converged: refinement moved "
                f"the value by {np.linalg.norm(val - val2) / scale:.3e} (> {quad.rtol})",
                coarse=val, fine=val2,
            )
        return val2
    return val


def biot_savart_jacobian(B_rule, x, quad: BiotSavartQuadrature | None = None) -> np.ndarray:
    """J_ij = dA^i/dx^j: analytic kernel derivative plus the local delta term."""
    quad = quad or BiotSavartQuadrature()
    x = np.asarray(x, dtype=float)
    pts, wgt = quad.nodes()
    B_vals = np.asarray(B_rule(pts), dtype=float)
    h = quad.exclusion_radius()
    r = x[None, :] - pts
    dist = np.linalg.norm(r, axis=1)

    def jac_pv(hh: float) -> np.ndarray:
        mask = dist >= hh
        rm, dm, Bm, wm = r[mask], dist[mask], B_vals[mask], wgt[mask]
        dK = (np.eye(3)[None, :, :] / dm[:, None, None] ** 3
              - 3.0 * rm[:, :, None] * rm[:, None, :] / dm[:, None, None] ** 5)
        return np.einsum("iab,ma,mbj->ij", _EPS3, Bm * wm[:, None], dK) / (4.0 * math.pi)

    Bx = np.asarray(B_rule(x[None, :]), dtype=float)[0]
    local = np.einsum("iaj,a->ij", _EPS3, Bx) / 3.0
    return (4.0 * jac_pv(h) - jac_pv(2.0 * h)) / 3.0 + local


def reconstructed_potential(B_rule, quad: BiotSavartQuadrature | None = None,
                            name: str = "biot-savart") -> PotentialSpec:
    """PotentialSpec whose A comes from the reconstruction quadrature (V = 0)."""
    quad = quad or BiotSavartQuadrature()

    def a_rule(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return biot_savart(B_rule, x, quad)
        flat = x.reshape(-1, 3)
        out = np.empty_like(flat)
        for i, p in enumerate(flat):
            out[i] = biot_savart(B_rule, p, quad)
        return out.reshape(x.shape)

    return PotentialSpec(
        n=3,
        a_rule=a_rule,
        v_rule=lambda x: np.zeros(np.asarray(x).shape[:-1]) if np.asarray(x).ndim > 1 else 0.0,
        jacobian_rule=lambda x: biot_savart_jacobian(B_rule, x, quad),
        vr_rule=lambda x: 0.0,
        name=name,
    )


def homogeneous_field(alpha: float = 3.0, omega=(0.0, 0.0, 1.0),
                      s0: float = 0.5, width: float = 0.35,
                      annulus: tuple[float, float] | None = None):
    """Radially directed family B(y) = h(y^ . w) |y|^-alpha y^.

    ``h`` is a smooth bump in the polar cosine, h(s) = exp(-((s - s0)/width)^2),
    one concrete degree-0 homogeneous weight.  Radially directed fields have
    vanishing tangential part.  With ``annulus`` the field is truncated to
    a <= |y| <= b.
    """
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)

    def rule(y):
        y = np.asarray(y, dtype=float)
        rho = np.linalg.norm(y, axis=-1)
        safe = np.maximum(rho, 1e-300)
        s = (y @ w) / safe
        hval = np.exp(-(((s - s0) / width) ** 2))
        mag = hval * safe ** (-alpha - 1.0)   # extra power turns y into y^
        if annulus is not None:
            a, b = annulus
            mag = np.where((rho >= a) & (rho <= b), mag, 0.0)
        return y * mag[..., None]

    return rule


def make_biot_family(n: int = 3, eps: float = 0.0, alpha: float = 3.0,
                     omega=(0.0, 0.0, 1.0), s0: float = 0.5, width: float = 0.35,
                     quad: BiotSavartQuadrature | None = None) -> PotentialSpec:
    """Potential reconstructed from the homogeneous radial field family."""
    if n != 3:
        raise ValueError("the reconstruction family is three-dimensional")
    quad = quad or BiotSavartQuadrature()
    rule = homogeneous_field(alpha=alpha, omega=omega, s0=s0, width=width,
                             annulus=(quad.r_inner, quad.r_outer))
    spec = reconstructed_potential(rule, quad, name="biot-family")
    return spec
