"""Time evolution for the magnetic Schrodinger and wave flows.

Conventions: the Schrodinger equation is evolved literally as i u_t = H u,
i.e. u(t) = exp(-itH) f.  All downstream functionals are quadratic in u and
independent of this sign choice.  The wave equation is u_tt + H u = 0.

Integrators
-----------
crank-nicolson : Cayley step (I + i dt H/2) u+ = (I - i dt H/2) u, solved
    iteratively with an FFT-diagonal preconditioner; unitary up to the solver
    tolerance.
exact-dense    : eigendecomposition flow from the norm engine (small grids).
wave-leapfrog  : explicit second-order three-level scheme; its staggered
    quadratic invariant is conserved to roundoff.
free-spectral  : exact Fourier flow, free Hamiltonian only.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .engine import DistortedNormEngine
from .grids import Field, GridSpec, WaveState
from .operators import MonitorBreach, SampledPotential, apply_H, check_containment, check_resolution

__all__ = [
    "EvolutionConfig",
    "Trajectory",
    "SolveError",
    "evolve_schrodinger",
    "evolve_wave",
    "duhamel_free_wave",
]


class SolveError(RuntimeError):
    """Iterative linear solve failed to reach the configured tolerance."""


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    steps: int
    integrator: str = "crank-nicolson"
    solve_tol: float = 1e-13
    store_every: int = 1
    monitor_every: int = 0          # 0 disables the runtime monitors
    resolution_tol: float = 1e-8
    containment_fraction: float = 0.999

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("need at least one step")
        if self.solve_tol <= 0:
            raise ValueError("solver tolerance must be positive")
        if self.integrator not in ("crank-nicolson", "exact-dense", "wave-leapfrog", "free-spectral"):
            raise ValueError(f"unknown integrator {self.integrator!r}")


@dataclass
class Trajectory:
    """Stored states at a fixed cadence plus a conservation log."""

    kind: str                      # 'schrodinger' | 'wave'
    grid: GridSpec
    times: np.ndarray
    states: list = dfield(repr=False, default_factory=list)
    conservation: list = dfield(default_factory=list)
    dt: float = 0.0
    integrator: str = ""
    monitor_flags: list = dfield(default_factory=list)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def stride(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else self.dt

    def conservation_rows(self) -> list[dict]:
        return self.conservation


def _monitor(u: Field, cfg: EvolutionConfig, flags: list, step: int) -> None:
    try:
        check_resolution(u, cfg.resolution_tol)
        check_containment(u, cfg.containment_fraction)
    except MonitorBreach as err:
        flags.append({"step": step, "message": str(err)})
        raise


def _energy_quadratic(u: Field, ut: Field, pot: SampledPotential) -> float:
    """E = 1/2 ||u_t||^2 + 1/2 Re<u, Hu>  (no eigendecomposition needed)."""
    hu = apply_H(u, pot)
    return 0.5 * ut.norm() ** 2 + 0.5 * float(np.real(u.inner(hu)))


def evolve_schrodinger(f: Field, pot: SampledPotential, cfg: EvolutionConfig,
                       engine: DistortedNormEngine | None = None) -> Trajectory:
    """Evolve i u_t = H u from the datum f."""
    grid = f.grid
    if cfg.integrator == "exact-dense":
        engine = engine or DistortedNormEngine(pot)
        times = cfg.dt * np.arange(0, cfg.steps + 1, cfg.store_every, dtype=float)
        vals = engine.schrodinger_flow(f, times)
        states = [Field(grid, v) for v in vals]
        cons = [{"t": float(t), "mass": s.norm()} for t, s in zip(times, states)]
        return Trajectory("schrodinger", grid, times, states, cons, cfg.dt, cfg.integrator)

    if cfg.integrator == "free-spectral":
        if not pot.is_free:
            raise ValueError("free-spectral integrator requires A = 0 and V = 0")
        times = cfg.dt * np.arange(0, cfg.steps + 1, cfg.store_every, dtype=float)
        fh = np.fft.fftn(f.values)
        k2 = grid.k_squared
        states = [Field(grid, np.fft.ifftn(np.exp(-1j * k2 * t) * fh)) for t in times]
        cons = [{"t": float(t), "mass": s.norm()} for t, s in zip(times, states)]
        return Trajectory("schrodinger", grid, times, states, cons, cfg.dt, cfg.integrator)

    if cfg.integrator != "crank-nicolson":
        raise ValueError(f"integrator {cfg.integrator!r} does not evolve the Schrodinger flow")

    # Crank-Nicolson with FFT-diagonal preconditioning
    size = grid.size
    half = 0.5j * cfg.dt

    def sys_mv(x):
        u = Field(grid, x.reshape(grid.shape))
        return (x.reshape(grid.shape) + half * apply_H(u, pot).values).ravel()

    a2 = np.zeros(grid.shape)
    for aj in pot.a:
        a2 = a2 + aj**2
    shift = float(np.mean(pot.v + a2))
    denom = 1.0 + half * (grid.k_squared + shift)

    def precon(x):
        return np.fft.ifftn(np.fft.fftn(x.reshape(grid.shape)) / denom).ravel()

    Aop = LinearOperator((size, size), matvec=sys_mv, dtype=complex)
    Pop = LinearOperator((size, size), matvec=precon, dtype=complex)

    flags: list = []
    times = [0.0]
    states = [f.copy()]
    cons = [{"t": 0.0, "mass": f.norm()}]
    u = f.copy()
    if cfg.monitor_every:
        _monitor(u, cfg, flags, 0)
    for k in range(1, cfg.steps + 1):
        rhs = (u.values - half * apply_H(u, pot).values).ravel()
        x0 = u.values.ravel()
        sol, info = gmres(Aop, rhs, x0=x0, M=Pop, rtol=cfg.solve_tol, atol=0.0,
                          maxiter=400, restart=40)
        if info != 0:
            raise SolveError(f"CN solve failed to converge at step {k} (info={info})")
        u = Field(grid, sol.reshape(grid.shape))
        if cfg.monitor_every and k % cfg.monitor_every == 0:
            _monitor(u, cfg, flags, k)
        if k % cfg.store_every == 0:
            times.append(k * cfg.dt)
            states.append(u.copy())
            cons.append({"t": k * cfg.dt, "mass": u.norm()})
    return Trajectory("schrodinger", grid, np.asarray(times), states, cons,
                      cfg.dt, cfg.integrator, flags)


def evolve_wave(state: WaveState, pot: SampledPotential, cfg: EvolutionConfig,
                engine: DistortedNormEngine | None = None) -> Trajectory:
    """Evolve u_tt + H u = 0 from (f, g)."""
    grid = state.grid
    if cfg.integrator == "exact-dense":
        engine = engine or DistortedNormEngine(pot)
        times = cfg.dt * np.arange(0, cfg.steps + 1, cfg.store_every, dtype=float)
        pairs = engine.wave_flow(state.u, state.ut, times)
        states = [WaveState(Field(grid, u), Field(grid, ut)) for u, ut in pairs]
        cons = [{"t": float(t), "mass": s.u.norm(),
                 "energy": _energy_quadratic(s.u, s.ut, pot)}
                for t, s in zip(times, states)]
        return Trajectory("wave", grid, times, states, cons, cfg.dt, cfg.integrator)

    if cfg.integrator == "free-spectral":
        if not pot.is_free:
            raise ValueError("free-spectral integrator requires A = 0 and V = 0")
        times = cfg.dt * np.arange(0, cfg.steps + 1, cfg.store_every, dtype=float)
        fh = np.fft.fftn(state.u.values)
        gh = np.fft.fftn(state.ut.values)
        om = np.sqrt(grid.k_squared)
        states = []
        cons = []
        for t in times:
            cos_t = np.cos(om * t)
            sinc_t = t * np.sinc(om * t / np.pi)
            u = Field(grid, np.fft.ifftn(cos_t * fh + sinc_t * gh))
            ut = Field(grid, np.fft.ifftn(-om * np.sin(om * t) * fh + cos_t * gh))
            states.append(WaveState(u, ut))
            cons.append({"t": float(t), "mass": u.norm(),
                         "energy": _energy_quadratic(u, ut, pot)})
        return Trajectory("wave", grid, times, states, cons, cfg.dt, cfg.integrator)

    if cfg.integrator != "wave-leapfrog":
        raise ValueError(f"integrator {cfg.integrator!r} does not evolve the wave flow")

    dt = cfg.dt
    flags: list = []
    u_prev = state.u.values.copy()
    hu = apply_H(state.u, pot).values
    u_curr = u_prev + dt * state.ut.values - 0.5 * dt**2 * hu

    def staggered_energy(ua: np.ndarray, ub: np.ndarray) -> float:
        # leapfrog shadow invariant: 1/2 ||(ub-ua)/dt||^2 + 1/2 Re<ub, H ua>
        diff = Field(grid, (ub - ua) / dt)
        return 0.5 * diff.norm() ** 2 + 0.5 * float(
            np.real(Field(grid, ub).inner(apply_H(Field(grid, ua), pot))))

    times = [0.0]
    states = [state.copy()]
    cons = [{"t": 0.0, "mass": state.u.norm(),
             "energy": _energy_quadratic(state.u, state.ut, pot),
             "energy_staggered": staggered_energy(u_prev, u_curr)}]
    for k in range(1, cfg.steps + 1):
        hu = apply_H(Field(grid, u_curr), pot).values
        u_next = 2.0 * u_curr - u_prev - dt**2 * hu
        if cfg.monitor_every and k % cfg.monitor_every == 0:
            _monitor(Field(grid, u_curr), cfg, flags, k)
        if k % cfg.store_every == 0:
            ut_mid = (u_next - u_prev) / (2.0 * dt)
            s = WaveState(Field(grid, u_curr.copy()), Field(grid, ut_mid))
            times.append(k * dt)
            states.append(s)
            cons.append({"t": k * dt, "mass": s.u.norm(),
                         "energy": _energy_quadratic(s.u, s.ut, pot),
                         "energy_staggered": staggered_energy(u_curr, u_next)})
        u_prev, u_curr = u_curr, u_next
    return Trajectory("wave", grid, np.asarray(times), states, cons,
                      cfg.dt, cfg.integrator, flags)


def duhamel_free_wave(f: Field, g: Field, F_samples: list[Field],
                      cfg: EvolutionConfig) -> Trajectory:
    """Free-wave Duhamel assembly with trapezoidal time quadrature.

    Builds u(t) = cos(t sqrt(-lap)) f + sin(t sqrt(-lap))/sqrt(-lap) g
    + int_0^t sin((t-s) sqrt(-lap))/sqrt(-lap) F(s) ds with F sampled at the
    integrator's nodes k*dt; the zero mode of the half-wave kernel uses the
    t-limit sin(t*0)/0 := t.
    """
    grid = f.grid
    nsteps = cfg.steps
    if len(F_samples) != nsteps + 1:
        raise ValueError(f"need {nsteps + 1} source samples, got {len(F_samples)}")
    om = np.sqrt(grid.k_squared)
    fh = np.fft.fftn(f.values)
    gh = np.fft.fftn(g.values)
    Fh = [np.fft.fftn(Fs.values) for Fs in F_samples]
    dt = cfg.dt

    def halfwave(t: float) -> np.ndarray:
        return t * np.sinc(om * t / np.pi)

    times = []
    states = []
    for m in range(0, nsteps + 1, cfg.store_every):
        t = m * dt
        acc = np.cos(om * t) * fh + halfwave(t) * gh
        if m > 0:
            duh = np.zeros_like(fh)
            for k in range(m + 1):
                wgt = 0.5 if k in (0, m) else 1.0
                duh += wgt * halfwave(t - k * dt) * Fh[k]
            acc += dt * duh
        times.append(t)
        states.append(Field(grid, np.fft.ifftn(acc)))
    cons = [{"t": float(t), "mass": s.norm()} for t, s in zip(times, states)]
    return Trajectory("free-duhamel", grid, np.asarray(times), states, cons, dt, "duhamel")
