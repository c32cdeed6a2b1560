"""Quantities differentiated or bounded by the dispersive estimates.

Virial traces compare the numerical second derivative of the weighted mass
Theta against an itemized right-hand side.  Two assembly modes exist:

``discrete``
    Builds every term from grid-level commutators of the *same* operators the
    propagator uses.  With C_j = [D_j, phi], S_kj = [G_k, C_j],
    F_kj = [G_k, G_j] and T = -[H, phi], the identity

        <u, [H,T] u> = 4P + (-2Q - 2P) + 2 Re<Vu, Tu>
                       + 2 sum_kj Re<G_k u, (F_kj C_j + C_j F_kj) u>,
        P = sum_kj Re<G_k u, S_kj G_j u>,   Q = sum_kj Re<G_j G_k u, S_kj u>,

    holds *exactly* on the grid (no Leibniz/aliasing error), so the virial
    residual is pure time-differencing error.  Each group converges to its
    continuum counterpart: 4 int grad_A u D2phi conj(grad_A u),
    -int |u|^2 lap^2 phi, -2 int phi' V_r |u|^2 and
    +4 Im int u phi' B_tau . conj(grad_A u).

``analytic``
    Samples the closed-form phi', phi'', B_tau and V_r and pairs the
    distributional part of lap^2 phi structurally (origin mass by multilinear
    interpolation of |u|^2, sphere masses by spherical quadrature).  Accurate
    only for resolved states; this is the physics-report path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .engine import DistortedNormEngine
from .grids import Field, GridSpec
from .multipliers import MultiplierError, PlateauWeight, RadialMultiplier, hessian_form_grid
from .operators import SampledPotential, apply_H
from .potentials import eval_B
from .propagators import Trajectory
from .sphere import interpolate, sphere_integral

__all__ = [
    "CommutatorKit",
    "VirialTrace",
    "virial_trace_schrodinger",
    "virial_trace_wave",
    "SmoothingReport",
    "smoothing_report",
    "hardy_ratio",
    "wave_admissible",
    "AdmissibilityError",
    "StrichartzReport",
    "strichartz_norm",
    "DyadicReport",
    "dyadic_source_sum",
    "wave_source_samples",
    "interpolation_boundedness",
    "DegenerateDatumError",
]


class DegenerateDatumError(ArithmeticError):
    pass


class AdmissibilityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# grid-level commutator kit
# ---------------------------------------------------------------------------


class CommutatorKit:
    """FFT-level covariant operators tied to one (potential, multiplier) pair."""

    def __init__(self, pot: SampledPotential, m: RadialMultiplier | None = None,
                 phi_values: np.ndarray | None = None):
        self.pot = pot
        self.grid = pot.grid
        if phi_values is not None:
            self.phi = np.asarray(phi_values, dtype=float)
        elif m is not None:
            self.phi = np.asarray(m.phi(self.grid.radius), dtype=float)
        else:
            raise ValueError("need a multiplier or explicit phi samples")
        self.m = m

    # first-order blocks
    def D(self, w: np.ndarray, j: int) -> np.ndarray:
        return self.grid.deriv(w, j)

    def G(self, w: np.ndarray, j: int) -> np.ndarray:
        return self.grid.deriv(w, j) - 1j * self.pot.a[j] * w

    def C(self, w: np.ndarray, j: int) -> np.ndarray:
        return self.D(self.phi * w, j) - self.phi * self.D(w, j)

    def S(self, w: np.ndarray, k: int, j: int) -> np.ndarray:
        return self.G(self.C(w, j), k) - self.C(self.G(w, k), j)

    def F(self, w: np.ndarray, k: int, j: int) -> np.ndarray:
        return self.G(self.G(w, j), k) - self.G(self.G(w, k), j)

    def H(self, w: np.ndarray) -> np.ndarray:
        return apply_H(Field(self.grid, w), self.pot).values

    def T(self, w: np.ndarray) -> np.ndarray:
        """Morawetz-type operator as the exact commutator -[H, phi]."""
        return self.phi * self.H(w) - self.H(self.phi * w)

    def lap_phi_op(self, w: np.ndarray) -> np.ndarray:
        """Discrete 'multiplication by lap(phi)': sum_j [G_j, C_j] w."""
        out = np.zeros_like(w)
        for j in range(self.grid.n):
            out += self.G(self.C(w, j), j) - self.C(self.G(w, j), j)
        return out

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return complex(self.grid.cell_volume * np.vdot(f, g))

    # -- exact itemization ------------------------------------------------------

    def schrodinger_rhs_terms(self, u: np.ndarray) -> dict[str, float]:
        """Terms summing exactly to <u, [H,T] u>."""
        n = self.grid.n
        Gu = [self.G(u, j) for j in range(n)]
        Cu = [self.C(u, j) for j in range(n)]
        P = 0.0
        Q = 0.0
        btau = 0.0
        for k in range(n):
            for j in range(n):
                Sgj = self.S(Gu[j], k, j)
                P += self.inner(Gu[k], Sgj).real
                GjGk = self.G(Gu[k], j)
                Su = self.G(Cu[j], k) - self.C(Gu[k], j)
                Q += self.inner(GjGk, Su).real
                Fu = self.G(Gu[j], k) - self.G(Gu[k], j)
                z = self.F(Cu[j], k, j) + self.C(Fu, j)
                btau += 2.0 * self.inner(Gu[k], z).real
        Tu = self.T(u)
        vr = 2.0 * self.inner(self.pot.v * u, Tu).real
        return {
            "hessian": 4.0 * P,
            "bilaplacian": -2.0 * Q - 2.0 * P,
            "vr": vr,
            "btau": btau,
        }

    def commutator_form(self, u: np.ndarray) -> float:
        """<u, [H,T] u> = 2 Re <Hu, Tu>."""
        return 2.0 * self.inner(self.H(u), self.T(u)).real

    def theta_schrodinger(self, u: np.ndarray) -> float:
        return self.inner(u, self.phi * u).real

    def theta_wave(self, u: np.ndarray, ut: np.ndarray, psi: np.ndarray) -> float:
        val = self.inner(ut, self.phi * ut).real
        for j in range(self.grid.n):
            gj = self.G(u, j)
            val += self.inner(gj, self.phi * gj).real
        val -= 0.5 * self.inner(u, self.lap_phi_op(u)).real
        val += self.inner(u, (self.phi * self.pot.v) * u).real
        val += self.inner(u, psi * u).real
        return val

    def wave_rhs_terms(self, u: np.ndarray, ut: np.ndarray,
                       psi: np.ndarray) -> dict[str, float]:
        terms = self.schrodinger_rhs_terms(u)
        half = {k: 0.5 * v for k, v in terms.items()}
        half["psi_ut"] = 2.0 * self.inner(ut, psi * ut).real
        grad_part = 0.0
        lap_part = 0.0
        for j in range(self.grid.n):
            gj = self.G(u, j)
            grad_part += self.inner(gj, psi * gj).real
            lap_part += self.inner(gj, self.D(psi * u, j) - psi * self.D(u, j)).real
        half["psi_grad"] = -2.0 * grad_part
        half["psi_lap"] = -2.0 * lap_part
        half["psi_v"] = -2.0 * self.inner(u, (self.pot.v * psi) * u).real
        return half

    # -- sampled-analytic itemization --------------------------------------------

    def analytic_schrodinger_terms(self, u: np.ndarray,
                                   btau_samples: np.ndarray | None,
                                   vr_samples: np.ndarray | None) -> dict[str, float]:
        if self.m is None:
            raise MultiplierError("analytic assembly needs a RadialMultiplier")
        grid = self.grid
        vol = grid.cell_volume
        r = grid.radius
        Gu = [self.G(u, j) for j in range(grid.n)]
        hess = 4.0 * vol * float(np.sum(hessian_form_grid(self.m, grid, Gu)))

        dens = np.abs(u) ** 2
        bilap = vol * float(np.sum(self.m.bilap_regular(r) * dens))
        if self.m.point_mass:
            origin = np.zeros(grid.n)
            bilap += self.m.point_mass * float(interpolate(dens, grid, origin[None, :])[0])
        for radius, weight in self.m.surface_masses:
            bilap += weight * sphere_integral(dens, grid, radius)
        bilap = -bilap

        vr = 0.0
        if vr_samples is not None and np.any(vr_samples):
            vr = -2.0 * vol * float(np.sum(self.m.dphi(r) * vr_samples * dens))

        btau = 0.0
        if btau_samples is not None and np.any(btau_samples):
            dphi = self.m.dphi(r)
            acc = 0.0
            for k in range(grid.n):
                acc += float(np.sum((dphi * btau_samples[..., k] * u * np.conj(Gu[k])).imag))
            btau = 4.0 * vol * acc
        return {"hessian": hess, "bilaplacian": bilap, "vr": vr, "btau": btau}

    def analytic_wave_terms(self, u: np.ndarray, ut: np.ndarray, psi: np.ndarray,
                            btau_samples, vr_samples) -> dict[str, float]:
        terms = self.analytic_schrodinger_terms(u, btau_samples, vr_samples)
        half = {k: 0.5 * v for k, v in terms.items()}
        grid = self.grid
        vol = grid.cell_volume
        half["psi_ut"] = 2.0 * vol * float(np.sum(psi * np.abs(ut) ** 2))
        grad = 0.0
        for j in range(grid.n):
            gj = self.G(u, j)
            grad += float(np.sum(psi * np.abs(gj) ** 2))
        half["psi_grad"] = -2.0 * vol * grad
        dens = np.abs(u) ** 2
        half["psi_lap"] = vol * float(np.sum(grid.laplacian(dens).real * psi))
        half["psi_v"] = -2.0 * vol * float(np.sum(self.pot.v * psi * dens))
        return half

    def theta_wave_analytic(self, u: np.ndarray, ut: np.ndarray, psi: np.ndarray) -> float:
        grid = self.grid
        vol = grid.cell_volume
        val = vol * float(np.sum(self.phi * (np.abs(ut) ** 2)))
        for j in range(grid.n):
            val += vol * float(np.sum(self.phi * np.abs(self.G(u, j)) ** 2))
        lap = self.m.lap(grid.radius)
        dens = np.abs(u) ** 2
        val -= 0.5 * vol * float(np.sum(lap * dens))
        val += vol * float(np.sum(self.phi * self.pot.v * dens))
        val += vol * float(np.sum(psi * dens))
        return val


def btau_on_grid(pot: SampledPotential) -> np.ndarray | None:
    """Pointwise B_tau samples, shape grid.shape + (n,); None for A = 0."""
    if all(not np.any(c) for c in pot.a):
        return None
    grid = pot.grid
    pts = np.stack(np.broadcast_arrays(*grid.coords), axis=-1).reshape(-1, grid.n)
    out = np.empty_like(pts)
    for i, p in enumerate(pts):
        try:
            out[i] = eval_B(pot.spec, p).B_tau
        except Exception:
            out[i] = 0.0
    return out.reshape(grid.shape + (grid.n,))


def vr_on_grid(pot: SampledPotential) -> np.ndarray | None:
    if not np.any(pot.v):
        return None
    grid = pot.grid
    pts = np.stack(np.broadcast_arrays(*grid.coords), axis=-1).reshape(-1, grid.n)
    out = np.empty(pts.shape[0])
    for i, p in enumerate(pts):
        out[i] = pot.spec.V_r(p)
    return out.reshape(grid.shape)


# ---------------------------------------------------------------------------
# virial traces
# ---------------------------------------------------------------------------


@dataclass
class VirialTrace:
    """Time series of Theta, its differenced second derivative and the RHS."""

    equation: str
    assembly: str
    times: np.ndarray
    theta: np.ndarray
    rhs_terms: dict[str, np.ndarray]
    interior: np.ndarray          # indices where the second difference lives
    theta_ddot_raw: np.ndarray    # 3-point central, O(dt^2)
    theta_ddot: np.ndarray        # one Richardson level, O(dt^4)
    multiplier: str = ""

    @property
    def rhs_total(self) -> np.ndarray:
        return sum(self.rhs_terms.values())

    @property
    def residual_raw(self) -> np.ndarray:
        return self.theta_ddot_raw - self.rhs_total[self.interior]

    @property
    def residual(self) -> np.ndarray:
        return self.theta_ddot - self.rhs_total[self.interior]

    def max_relative_residual(self) -> float:
        scale = float(np.max(np.abs(self.rhs_total)))
        if scale == 0.0:
            return float(np.max(np.abs(self.residual))) if len(self.residual) else 0.0
        return float(np.max(np.abs(self.residual))) / scale

    def rows(self) -> list[dict]:
        out = []
        for ii, idx in enumerate(self.interior):
            row = {"t": float(self.times[idx]),
                   "theta": float(self.theta[idx]),
                   "theta_ddot": float(self.theta_ddot[ii]),
                   "theta_ddot_raw": float(self.theta_ddot_raw[ii]),
                   "rhs_total": float(self.rhs_total[idx]),
                   "residual": float(self.residual[ii])}
            for name, arr in self.rhs_terms.items():
                row[f"rhs_{name}"] = float(arr[idx])
            out.append(row)
        return out


def _check_uniform(times: np.ndarray) -> float:
    if len(times) < 5:
        raise ValueError("virial trace needs at least 5 consecutive uniform samples")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-10 * max(abs(dt[0]), 1e-300):
        raise ValueError("virial trace needs uniformly spaced samples")
    return float(dt[0])


def _second_difference(theta: np.ndarray, dt: float):
    """3-point second difference plus one Richardson level (needs +-2 samples)."""
    m = len(theta)
    interior = np.arange(2, m - 2)
    d2_h = (theta[interior - 1] - 2 * theta[interior] + theta[interior + 1]) / dt**2
    d2_2h = (theta[interior - 2] - 2 * theta[interior] + theta[interior + 2]) / (2 * dt) ** 2
    rich = (4.0 * d2_h - d2_2h) / 3.0
    return interior, d2_h, rich


def virial_trace_schrodinger(traj: Trajectory, m: RadialMultiplier,
                             pot: SampledPotential,
                             assembly: str = "discrete") -> VirialTrace:
    if traj.kind != "schrodinger":
        raise ValueError("expected a Schrodinger trajectory")
    dt = _check_uniform(traj.times)
    kit = CommutatorKit(pot, m)
    theta = np.array([kit.theta_schrodinger(s.values) for s in traj.states])
    term_names = ("hessian", "bilaplacian", "vr", "btau")
    rhs = {name: np.zeros(len(traj.states)) for name in term_names}
    if assembly == "analytic":
        btau_s = btau_on_grid(pot)
        vr_s = vr_on_grid(pot)
    for i, s in enumerate(traj.states):
        if assembly == "discrete":
            terms = kit.schrodinger_rhs_terms(s.values)
        elif assembly == "analytic":
            terms = kit.analytic_schrodinger_terms(s.values, btau_s, vr_s)
        else:
            raise ValueError(f"unknown assembly mode {assembly!r}")
        for name in term_names:
            rhs[name][i] = terms[name]
    interior, raw, rich = _second_difference(theta, dt)
    return VirialTrace("schrodinger", assembly, traj.times, theta, rhs,
                       interior, raw, rich, multiplier=m.profile)


def virial_trace_wave(traj: Trajectory, m: RadialMultiplier, psi: PlateauWeight | None,
                      pot: SampledPotential, assembly: str = "discrete") -> VirialTrace:
    if traj.kind != "wave":
        raise ValueError("expected a wave trajectory")
    dt = _check_uniform(traj.times)
    kit = CommutatorKit(pot, m)
    grid = pot.grid
    psi_samples = psi.sample_on_grid(grid) if psi is not None else np.zeros(grid.shape)
    term_names = ("hessian", "bilaplacian", "vr", "btau",
                  "psi_ut", "psi_grad", "psi_lap", "psi_v")
    theta = np.empty(len(traj.states))
    rhs = {name: np.zeros(len(traj.states)) for name in term_names}
    if assembly == "analytic":
        btau_s = btau_on_grid(pot)
        vr_s = vr_on_grid(pot)
    for i, s in enumerate(traj.states):
        u, ut = s.u.values, s.ut.values
        if assembly == "discrete":
            theta[i] = kit.theta_wave(u, ut, psi_samples)
            terms = kit.wave_rhs_terms(u, ut, psi_samples)
        elif assembly == "analytic":
            theta[i] = kit.theta_wave_analytic(u, ut, psi_samples)
            terms = kit.analytic_wave_terms(u, ut, psi_samples, btau_s, vr_s)
        else:
            raise ValueError(f"unknown assembly mode {assembly!r}")
        for name in term_names:
            rhs[name][i] = terms[name]
    interior, raw, rich = _second_difference(theta, dt)
    return VirialTrace("wave", assembly, traj.times, theta, rhs,
                       interior, raw, rich, multiplier=m.profile)


# ---------------------------------------------------------------------------
# smoothing / local-energy report
# ---------------------------------------------------------------------------


def dyadic_radii(grid: GridSpec) -> list[float]:
    """Dyadic radii spanning [2*cell, half_width/2]."""
    out = []
    r = 2.0 * grid.cell
    while r <= 0.5 * grid.half_width + 1e-12:
        out.append(r)
        r *= 2.0
    return out


@dataclass
class SmoothingReport:
    equation: str
    radii: list[float]
    local_energy: dict[float, float]
    sup_local_energy: float
    sup_radius: float
    tangential_weighted: float      # int dt int |grad_A^tau u|^2 / |x|
    k1: float
    sphere_mass: dict[float, float]  # R -> R^-2 int dt surface integral of |u|^2
    k2: float
    k2_radius: float
    weighted_mass: float            # int dt int |u|^2 / |x|^3
    normalizer: float
    normalizer_kind: str

    def normalized(self) -> dict[str, float]:
        nz = self.normalizer
        return {
            "sup_local_energy": self.sup_local_energy / nz,
            "tangential_weighted": self.tangential_weighted / nz,
            "k2_squared": self.k2**2 / nz,
            "weighted_mass": self.weighted_mass / nz,
        }

    def rows(self) -> list[dict]:
        return [
            {"R": R,
             "local_energy": self.local_energy[R],
             "local_energy_normalized": self.local_energy[R] / self.normalizer,
             "sphere_mass": self.sphere_mass[R]}
            for R in self.radii
        ]


def smoothing_report(traj: Trajectory, pot: SampledPotential,
                     normalizer: str = "auto",
                     engine: DistortedNormEngine | None = None,
                     sphere_count: int = 512) -> SmoothingReport:
    grid = traj.grid
    radii = dyadic_radii(grid)
    times = traj.times
    if len(times) < 2:
        raise ValueError("smoothing report needs a time window")
    wave = traj.kind == "wave"

    r = grid.radius
    ball_masks = {R: (r <= R) for R in radii}
    loc_series = {R: np.zeros(len(times)) for R in radii}
    sph_series = {R: np.zeros(len(times)) for R in radii}
    tang_series = np.zeros(len(times))
    wmass_series = np.zeros(len(times))
    vol = grid.cell_volume

    kit = CommutatorKit(pot, phi_values=np.zeros(grid.shape))
    coords = grid.coords
    for i, s in enumerate(traj.states):
        u = s.u.values if wave else s.values
        Gu = [kit.G(u, j) for j in range(grid.n)]
        gsq = np.zeros(grid.shape)
        proj = np.zeros(grid.shape, dtype=complex)
        for c, g in zip(coords, Gu):
            gsq += np.abs(g) ** 2
            proj += (c / r) * g
        tang_sq = np.maximum(gsq - np.abs(proj) ** 2, 0.0)
        dens_t = gsq + (np.abs(s.ut.values) ** 2 if wave else 0.0)
        dens = np.abs(u) ** 2
        for R in radii:
            loc_series[R][i] = vol * float(np.sum(dens_t[ball_masks[R]]))
            sph_series[R][i] = sphere_integral(dens, grid, R, sphere_count)
        tang_series[i] = vol * float(np.sum(tang_sq / r))
        wmass_series[i] = vol * float(np.sum(dens / r**3))

    local_energy = {R: float(np.trapezoid(loc_series[R], times)) / R for R in radii}
    sphere_mass = {R: float(np.trapezoid(sph_series[R], times)) / R**2 for R in radii}
    sup_R = max(local_energy, key=local_energy.get)
    k2_R = max(sphere_mass, key=sphere_mass.get)
    tangential = float(np.trapezoid(tang_series, times))
    wmass = float(np.trapezoid(wmass_series, times))

    if normalizer == "auto":
        normalizer = "energy" if wave else "h-half"
    if normalizer == "none":
        nz = 1.0
    elif normalizer == "h-half":
        engine = engine or DistortedNormEngine(pot)
        f0 = traj.states[0].u if wave else traj.states[0]
        nz = engine.norm(f0, 0.5) ** 2
    elif normalizer == "energy":
        if not wave:
            raise ValueError("energy normalizer needs a wave trajectory")
        s0 = traj.states[0]
        hu = apply_H(s0.u, pot)
        nz = 0.5 * s0.ut.norm() ** 2 + 0.5 * float(np.real(s0.u.inner(hu)))
    else:
        raise ValueError(f"unknown normalizer {normalizer!r}")
    if nz <= 1e-300:
        raise DegenerateDatumError("normalizer vanishes for this datum")

    return SmoothingReport(
        equation=traj.kind,
        radii=radii,
        local_energy=local_energy,
        sup_local_energy=local_energy[sup_R],
        sup_radius=sup_R,
        tangential_weighted=tangential,
        k1=math.sqrt(max(tangential, 0.0)),
        sphere_mass=sphere_mass,
        k2=math.sqrt(max(sphere_mass[k2_R], 0.0)),
        k2_radius=k2_R,
        weighted_mass=wmass,
        normalizer=float(nz),
        normalizer_kind=normalizer,
    )


# ---------------------------------------------------------------------------
# Hardy ratio
# ---------------------------------------------------------------------------


def hardy_ratio(f: Field, pot: SampledPotential) -> float:
    """[int |f|^2/|x|^2] / [int |grad_A f|^2]; bounded by 4/(n-2)^2 in n >= 3."""
    grid = f.grid
    if grid.n < 3:
        raise ValueError("the weighted-mass inequality needs n >= 3")
    kit = CommutatorKit(pot, phi_values=np.zeros(grid.shape))
    denom = 0.0
    for j in range(grid.n):
        g = kit.G(f.values, j)
        denom += float(np.sum(np.abs(g) ** 2))
    denom *= grid.cell_volume
    if denom <= 1e-300:
        raise DegenerateDatumError("covariant gradient vanishes")
    numer = grid.cell_volume * float(np.sum(np.abs(f.values) ** 2 / grid.radius**2))
    return numer / denom


# ---------------------------------------------------------------------------
# Strichartz plumbing
# ---------------------------------------------------------------------------


def wave_admissible(p, q, n: int):
    """Exact admissibility of a couple: 2/p + (n-1)/q = (n-1)/2, etc.

    Returns (admissible, endpoint, sigma, violation).  p may be math.inf.
    """
    if n < 3:
        raise ValueError("wave admissibility implemented for n >= 3")
    inf_p = p == math.inf
    pq = None if inf_p else Fraction(p)
    qq = Fraction(q)
    if qq == 0 or (not inf_p and pq == 0):
        return False, False, None, "p and q must be nonzero"
    inv_p = Fraction(0) if inf_p else 1 / pq
    lhs = 2 * inv_p + Fraction(n - 1) / qq
    rhs = Fraction(n - 1, 2)
    if lhs != rhs:
        return False, False, None, f"scaling line violated: 2/p + (n-1)/q = {lhs}, expected {rhs}"
    if not inf_p and pq < 2:
        return False, False, None, "p < 2"
    if qq < 2:
        return False, False, None, "q < 2"
    if n > 3 and qq > Fraction(2 * (n - 1), n - 3):
        return False, False, None, f"q > 2(n-1)/(n-3) = {Fraction(2 * (n - 1), n - 3)}"
    sigma = 1 / qq - inv_p + Fraction(1, 2)
    endpoint = (not inf_p) and pq == 2
    return True, endpoint, sigma, None


@dataclass
class StrichartzReport:
    p: float
    q: float
    n: int
    admissible: bool
    endpoint: bool
    sigma: float | None
    mixed_norm: float | None
    refused_reason: str | None = None
    dyadic_sum: float | None = None

    def to_dict(self) -> dict:
        return {
            "p": None if self.p == math.inf else float(self.p),
            "q": float(self.q),
            "n": self.n,
            "admissible": self.admissible,
            "endpoint": self.endpoint,
            "sigma": None if self.sigma is None else float(self.sigma),
            "mixed_norm": self.mixed_norm,
            "refused_reason": self.refused_reason,
            "dyadic_sum": self.dyadic_sum,
        }


def _fractional_gradient_norm_q(u: np.ndarray, grid: GridSpec, sigma: float, q) -> float:
    """||  |grad|^sigma u ||_{L^q} by plain Fourier multiplier |k|^sigma."""
    fh = np.fft.fftn(u)
    mult = grid.k_squared ** (sigma / 2.0) if sigma > 0 else np.ones(grid.shape)
    w = np.fft.ifftn(mult * fh)
    a = np.abs(w)
    if q == math.inf:
        return float(a.max())
    qf = float(q)
    return float((grid.cell_volume * np.sum(a**qf)) ** (1.0 / qf))


def strichartz_norm(traj: Trajectory, p, q, n: int | None = None) -> StrichartzReport:
    """Mixed L^p_t (homogeneous W^{sigma,q}_x) norm of a stored trajectory."""
    grid = traj.grid
    n = n or grid.n
    admissible, endpoint, sigma, violation = wave_admissible(p, q, n)
    if not admissible:
        raise AdmissibilityError(f"couple (p={p}, q={q}, n={n}) rejected: {violation}")
    if endpoint:
        return StrichartzReport(p=p, q=q, n=n, admissible=True, endpoint=True,
                                sigma=float(sigma), mixed_norm=None,
                                refused_reason="endpoint couple (p = 2) refused for bound checks")
    sig = float(sigma)
    vals = []
    for s in traj.states:
        u = s.u.values if traj.kind == "wave" else s.values
        vals.append(_fractional_gradient_norm_q(u, grid, sig, q))
    vals = np.asarray(vals)
    if p == math.inf:
        norm = float(vals.max())
    else:
        pf = float(p)
        norm = float(np.trapezoid(vals**pf, traj.times) ** (1.0 / pf))
    return StrichartzReport(p=p, q=q, n=n, admissible=True, endpoint=False,
                            sigma=sig, mixed_norm=norm)


# ---------------------------------------------------------------------------
# dyadic source sums
# ---------------------------------------------------------------------------


@dataclass
class DyadicReport:
    j_values: list[int]
    norms: dict[int, float]          # ||F_j||_{L^2 L^2}
    contributions: dict[int, float]  # 2^{j/2} ||F_j||
    total: float

    def decay_ratios(self, j_from: int = 0) -> list[float]:
        js = [j for j in self.j_values if j >= j_from]
        out = []
        for a, b in zip(js, js[1:]):
            if self.contributions[a] > 0:
                out.append(self.contributions[b] / self.contributions[a])
        return out

    def rows(self) -> list[dict]:
        return [{"j": j, "r_lo": 2.0**j, "r_hi": 2.0 ** (j + 1),
                 "l2l2": self.norms[j], "contribution": self.contributions[j]}
                for j in self.j_values]


def dyadic_source_sum(F_samples: list[Field], times: np.ndarray,
                      grid: GridSpec) -> DyadicReport:
    """Weighted sum over half-open dyadic annuli [2^j, 2^(j+1)) inside the half-domain."""
    r = grid.radius
    r_hi = 0.5 * grid.half_width
    r_min = float(r.min())
    j_lo = int(math.floor(math.log2(max(r_min, 1e-12))))
    j_hi = int(math.floor(math.log2(r_hi)))
    times = np.asarray(times, dtype=float)
    vol = grid.cell_volume
    j_values = []
    norms = {}
    contribs = {}
    for j in range(j_lo, j_hi + 1):
        mask = (r >= 2.0**j) & (r < 2.0 ** (j + 1))
        if not mask.any():
            continue
        series = np.array([vol * float(np.sum(np.abs(F.values[mask]) ** 2))
                           for F in F_samples])
        val = math.sqrt(max(float(np.trapezoid(series, times)), 0.0))
        j_values.append(j)
        norms[j] = val
        contribs[j] = 2.0 ** (j / 2.0) * val
    return DyadicReport(j_values=j_values, norms=norms, contributions=contribs,
                        total=sum(contribs.values()))


def wave_source_samples(traj: Trajectory, pot: SampledPotential,
                        form: str = "sampled") -> list[Field]:
    """Source F with u_tt - lap u = F along a stored trajectory.

    ``sampled``: F = -2i A . grad u - A^2 u - V u, the Coulomb-gauge expansion
    of -(grad - iA)^2 + V with the plain gradient.  ``operator``: F computed
    as -(H + lap) u with the same discrete H that drives the flow; the two
    agree wherever the grid resolves A (they differ by the discrete
    i(div A) operator), and the operator form reproduces the trajectory
    through the free Duhamel representation up to pure time-quadrature error.
    """
    grid = traj.grid
    a2 = np.zeros(grid.shape)
    for aj in pot.a:
        a2 = a2 + aj**2
    out = []
    for s in traj.states:
        u = s.u.values if traj.kind == "wave" else s.values
        if form == "operator":
            F = -(apply_H(Field(grid, u), pot).values + grid.laplacian(u))
        elif form == "sampled":
            F = -(a2 + pot.v) * u
            for j in range(grid.n):
                F = F - 2j * pot.a[j] * grid.deriv(u, j)
        else:
            raise ValueError(f"unknown source form {form!r}")
        out.append(Field(grid, F))
    return out


# ---------------------------------------------------------------------------
# interpolation-pairing boundedness
# ---------------------------------------------------------------------------


def interpolation_boundedness(traj: Trajectory, m: RadialMultiplier,
                              pot: SampledPotential,
                              engine: DistortedNormEngine | None = None):
    """|int conj(u) grad_A u . grad phi| / ||f||^2_{H^1/2-distorted-inhom} per sample."""
    if not (m.bounded_slope and m.bounded_r_curvature):
        raise MultiplierError(
            f"multiplier {m.profile!r} lacks bounded slope / r-curvature; "
            "the interpolation pairing is only controlled for bounded phi'"
        )
    grid = traj.grid
    engine = engine or DistortedNormEngine(pot)
    kit = CommutatorKit(pot, m)
    r = grid.radius
    dphi = m.dphi(r)
    f0 = traj.states[0].u if traj.kind == "wave" else traj.states[0]
    nz = engine.sobolev_norm(f0, 0.5) ** 2
    if nz <= 1e-300:
        raise DegenerateDatumError("datum has vanishing Sobolev norm")
    series = []
    for s in traj.states:
        u = s.u.values if traj.kind == "wave" else s.values
        acc = 0.0 + 0.0j
        for j, c in enumerate(grid.coords):
            acc += grid.cell_volume * np.sum(np.conj(u) * kit.G(u, j) * (dphi * c / r))
        series.append(abs(acc) / nz)
    series = np.asarray(series)
    return traj.times, series, float(series.max())
