"""Scenario execution: certify, evolve, evaluate, emit reports, assert.

The run is deterministic for a fixed config and package version: quadratures
are fixed, randomness is seeded, and headline numbers are serialized at full
precision.  Exit-code contract: a run passes iff every configured assertion
passes; the CLI maps that to the process exit code.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..biot import BiotSavartQuadrature, biot_savart, homogeneous_field, make_biot_family
from ..decay import RadialQuadrature, certify
from ..engine import DistortedNormEngine
from ..functionals import (
    dyadic_source_sum,
    hardy_ratio,
    interpolation_boundedness,
    smoothing_report,
    strichartz_norm,
    virial_trace_schrodinger,
    virial_trace_wave,
    wave_source_samples,
)
from ..grids import Field, GridSpec, WaveState, write_field
from ..multipliers import builtin_multiplier, make_plateau
from ..operators import SampledPotential
from ..potentials import builtin_potential, eval_B
from ..propagators import EvolutionConfig, evolve_schrodinger, evolve_wave
from .reports import config_hash, report_basename, write_csv, write_summary
from .scenarios import scenario_config

__all__ = ["ValidationError", "RunReport", "run_scenario", "run_config"]


class ValidationError(ValueError):
    def __init__(self, fld: str, message: str):
        super().__init__(f"config field {fld!r}: {message}")
        self.field = fld


@dataclass
class RunReport:
    scenario_id: str
    headline: dict
    assertions: list
    files: list
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a["passed"] for a in self.assertions)


def _require(cfg: dict, fld: str):
    if fld not in cfg:
        raise ValidationError(fld, "missing")
    return cfg[fld]


def _build_grid(cfg: dict) -> GridSpec:
    g = _require(cfg, "grid")
    for key in ("npts", "half_width"):
        if key not in g:
            raise ValidationError(f"grid.{key}", "missing")
    return GridSpec(n=cfg["dimension"], npts=int(g["npts"]),
                    half_width=float(g["half_width"]),
                    offset=float(g.get("offset", 0.5)),
                    scheme=g.get("scheme", "spectral"))


def _build_potential(pcfg: dict, n: int, grid: GridSpec | None):
    pcfg = dict(pcfg)
    name = pcfg.pop("name", None)
    if name is None:
        raise ValidationError("potential.name", "missing")
    cells = pcfg.pop("mollify_cells", 0)
    eps = float(cells) * grid.cell if (cells and grid is not None) else 0.0
    if name == "biot-family":
        quad_kw = pcfg.pop("biot_quadrature", None)
        quad = BiotSavartQuadrature(**quad_kw) if quad_kw else None
        return make_biot_family(n=n, alpha=pcfg.get("alpha", 3.0),
                                omega=pcfg.get("omega", (0.0, 0.0, 1.0)),
                                s0=pcfg.get("s0", 0.5), width=pcfg.get("width", 0.35),
                                quad=quad)
    if name == "tabulated":
        from ..potentials import make_tabulated
        if "path" not in pcfg:
            raise ValidationError("potential.path", "missing for tabulated values")
        return make_tabulated(pcfg["path"], eps=eps, n=n)
    try:
        return builtin_potential(name, n=n, eps=eps, **pcfg)
    except TypeError as err:
        raise ValidationError("potential", str(err)) from None


def _gaussian(grid: GridSpec, width: float, center, momentum, amplitude: float) -> np.ndarray:
    c = np.asarray(center, dtype=float)
    if c.shape != (grid.n,):
        raise ValidationError("datum.center", f"needs {grid.n} entries")
    r2 = np.zeros(grid.shape)
    phase = np.zeros(grid.shape)
    for j, x in enumerate(grid.coords):
        r2 = r2 + (x - c[j]) ** 2
        phase = phase + (math.pi / grid.half_width) * float(momentum[j]) * x
    return amplitude * np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * phase)


def _build_datum(dcfg: dict, grid: GridSpec) -> Field:
    kind = dcfg.get("kind")
    if kind == "gaussian":
        return Field(grid, _gaussian(grid, float(dcfg["width"]), dcfg["center"],
                                     dcfg.get("momentum", [0] * grid.n),
                                     float(dcfg.get("amplitude", 1.0))))
    if kind == "plane-wave":
        modes = dcfg.get("modes")
        if modes is None or len(modes) != grid.n:
            raise ValidationError("datum.modes", f"needs {grid.n} lattice integers")
        phase = np.zeros(grid.shape)
        for j, x in enumerate(grid.coords):
            phase = phase + (math.pi / grid.half_width) * int(modes[j]) * x
        return Field(grid, np.exp(1j * phase))
    if kind == "file":
        from ..grids import read_field
        return read_field(dcfg["path"], scheme=grid.scheme)
    raise ValidationError("datum.kind", f"unknown kind {kind!r}")


def _assert_row(name: str, value, tol, mode: str = "le") -> dict:
    if mode == "le":
        passed = bool(value <= tol)
    elif mode == "ge":
        passed = bool(value >= tol)
    else:
        passed = bool(value == tol)
    return {"name": name, "value": value, "tolerance": tol, "mode": mode,
            "passed": passed}


def run_scenario(scenario_id: str, outdir=None, seed: int | None = None) -> RunReport:
    cfg = scenario_config(scenario_id)
    if seed is not None:
        cfg["seed"] = seed
    return run_config(cfg, outdir)


def run_config(cfg: dict, outdir=None) -> RunReport:
    t0 = time.time()
    sid = _require(cfg, "id")
    equation = _require(cfg, "equation")
    n = int(_require(cfg, "dimension"))
    tol = cfg.get("tolerances", {})
    seed = int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    assertions: list[dict] = []
    headline: dict = {"scenario": sid, "equation": equation, "dimension": n}
    tables: dict[str, list[dict]] = {}
    checkpoints: dict[str, Field] = {}

    if equation == "geometry":
        _run_geometry(cfg, headline, assertions)
        grid_sig = "analytic"
    else:
        grid = _build_grid(cfg)
        grid_sig = grid.signature()
        spec = _build_potential(_require(cfg, "potential"), n, grid)
        pot = SampledPotential.from_spec(spec, grid)
        headline["gauge_residual"] = pot.gauge_residual
        headline["grid"] = grid_sig

        # certificates: evaluated on the physical (un-mollified) rule when
        # the config provides one, else on the run potential
        cert_rows = []
        cert_spec = spec
        if "certificate_potential" in cfg:
            cert_spec = _build_potential(cfg["certificate_potential"], n, grid)
        for mode in cfg.get("certificates", []):
            cert = certify(cert_spec, n, mode, RadialQuadrature(
                r_min=0.5 * grid.cell, r_max=8.0 * grid.half_width,
                points=400, sphere_count=192))
            cert_rows.append({"mode": mode, "value": cert.value,
                              "threshold": cert.threshold, "verdict": cert.verdict,
                              **{k: float(v) for k, v in cert.measured.items()}})
            headline[f"certificate_{mode}"] = {"value": cert.value,
                                               "verdict": cert.verdict}
            if "certificate_verdict" in tol:
                assertions.append(_assert_row(
                    f"certificate_{mode}_verdict", cert.verdict,
                    tol["certificate_verdict"], mode="eq"))
            if "certificate_btau_norm" in tol and "btau2_norm3" in cert.measured:
                assertions.append(_assert_row(
                    f"certificate_{mode}_btau_norm",
                    float(cert.measured["btau2_norm3"]),
                    tol["certificate_btau_norm"]))
        if cert_rows:
            tables["certificates"] = cert_rows

        # datum and evolution
        ecfg = _require(cfg, "evolution")
        evo = EvolutionConfig(dt=float(ecfg["dt"]), steps=int(ecfg["steps"]),
                              integrator=ecfg.get("integrator", "crank-nicolson"),
                              solve_tol=float(ecfg.get("solve_tol", 1e-13)),
                              store_every=int(ecfg.get("store_every", 1)),
                              monitor_every=int(ecfg.get("monitor_every", 0)))
        engine = None
        if evo.integrator == "exact-dense" or "smoothing" in cfg.get("functionals", []):
            if grid.size <= 4096 or not pot.is_free:
                engine = DistortedNormEngine(pot)
        f0 = _build_datum(_require(cfg, "datum"), grid)
        if equation == "wave":
            vcfg = cfg["datum"].get("velocity")
            g0 = _build_datum(vcfg, grid) if vcfg else Field(grid, np.zeros(grid.shape))
            traj = evolve_wave(WaveState(f0, g0), pot, evo, engine)
            energies = np.array([row["energy"] for row in traj.conservation])
            drift = float(np.max(np.abs(energies - energies[0]))) / max(abs(energies[0]), 1e-300)
            headline["energy_drift"] = drift
            if "energy_drift" in tol:
                assertions.append(_assert_row("energy_drift", drift, tol["energy_drift"]))
            checkpoints["state_final"] = traj.states[-1].u
        else:
            traj = evolve_schrodinger(f0, pot, evo, engine)
            masses = np.array([row["mass"] for row in traj.conservation])
            drift = float(np.max(np.abs(masses - masses[0]))) / max(masses[0], 1e-300)
            headline["mass_drift"] = drift
            if "mass_drift" in tol:
                assertions.append(_assert_row("mass_drift", drift, tol["mass_drift"]))
            checkpoints["state_final"] = traj.states[-1]
        tables["conservation"] = traj.conservation

        centers, prof = checkpoints["state_final"].radial_profile()
        tables["radial_profile"] = [
            {"r": float(r), "mean_density": float(p)} for r, p in zip(centers, prof)]

        suites = cfg.get("functionals", [])
        if "multiplier" in cfg:
            m = _build_multiplier(cfg, n)
            radii = np.linspace(0.5 * grid.cell, grid.half_width, 200)
            tables["multiplier_profile"] = [
                {"r": float(r), "phi": float(p), "dphi": float(d1),
                 "d2phi": float(d2), "lap": float(lp)}
                for r, p, d1, d2, lp in m.profile_table(radii)]
        if "virial" in suites:
            m = _build_multiplier(cfg, n)
            assembly = cfg.get("virial_assembly", "discrete")
            if equation == "wave":
                psi = make_plateau(float(cfg["plateau"]["R"])) if "plateau" in cfg else None
                trace = virial_trace_wave(traj, m, psi, pot, assembly)
            else:
                trace = virial_trace_schrodinger(traj, m, pot, assembly)
            tables["virial"] = trace.rows()
            rel = trace.max_relative_residual()
            headline["virial_residual_rel"] = rel
            headline["virial_residual_max"] = float(np.max(np.abs(trace.residual)))
            if "virial_residual_rel" in tol:
                assertions.append(_assert_row("virial_residual_rel", rel,
                                              tol["virial_residual_rel"]))
        if "smoothing" in suites:
            rep = smoothing_report(traj, pot, engine=engine)
            tables["smoothing"] = rep.rows()
            headline["smoothing"] = rep.normalized()
            headline["smoothing"]["sup_radius"] = rep.sup_radius
        if "strichartz" in suites:
            rows = []
            for couple in cfg.get("strichartz_couples", []):
                p = math.inf if couple[0] in ("inf", None) else couple[0]
                rep = strichartz_norm(traj, p, couple[1], n)
                rows.append(rep.to_dict())
            tables["strichartz"] = rows
            headline["strichartz"] = rows
        if "dyadic" in suites:
            Fs = wave_source_samples(traj, pot)
            rep = dyadic_source_sum(Fs, traj.times, grid)
            tables["dyadic"] = rep.rows()
            headline["dyadic_total"] = rep.total
            headline["dyadic_ratios"] = rep.decay_ratios(0)
        if "hardy" in suites:
            rows = []
            worst = 0.0
            for i in range(int(cfg.get("hardy_fields", 6))):
                noise = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
                fh = np.fft.fftn(noise)
                keep = grid.k_squared <= (0.5 * np.max(np.abs(grid.wavenumbers))) ** 2
                smooth = np.fft.ifftn(fh * keep)
                envelope = np.exp(-grid.radius**2 / (2.0 * (grid.half_width / 4.0) ** 2))
                fld = Field(grid, smooth * envelope)
                ratio = hardy_ratio(fld, pot)
                worst = max(worst, ratio)
                rows.append({"field": i, "ratio": ratio})
            tables["hardy"] = rows
            headline["hardy_max_ratio"] = worst
            bound = 4.0 / (n - 2) ** 2 * (1.0 + 1e-3)
            assertions.append(_assert_row("hardy_ratio_bound", worst, bound))
        if "interpolation" in suites:
            m = _build_multiplier(cfg, n)
            times, series, sup = interpolation_boundedness(traj, m, pot, engine)
            tables["interpolation"] = [
                {"t": float(t), "normalized_pairing": float(v)}
                for t, v in zip(times, series)]
            headline["interpolation_sup"] = sup

    wall = time.time() - t0
    report = RunReport(
        scenario_id=sid,
        headline=headline,
        assertions=assertions,
        files=[],
        metadata={"wall_clock_s": wall, "version": __version__,
                  "fixture_hash": config_hash(cfg, __version__)},
    )

    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        base = report_basename(sid, grid_sig)
        for name, rows in tables.items():
            path = outdir / f"{base}__{name}.csv"
            write_csv(path, rows)
            report.files.append(str(path))
        for name, fld in checkpoints.items():
            path = outdir / f"{base}__{name}.bin"
            write_field(fld, path)
            report.files.append(str(path))
        summary_path = outdir / f"{base}__summary.json"
        write_summary(summary_path, {
            "headline": report.headline,
            "assertions": report.assertions,
            "metadata": report.metadata,
            "files": report.files,
        })
        report.files.append(str(summary_path))
    return report


def _build_multiplier(cfg: dict, n: int):
    mcfg = dict(cfg.get("multiplier", {"name": "variance"}))
    name = mcfg.pop("name")
    return builtin_multiplier(name, n=n, **mcfg)


def _run_geometry(cfg: dict, headline: dict, assertions: list) -> None:
    """Quadrature-reconstruction checks for the homogeneous-field scenario."""
    tol = cfg.get("tolerances", {})
    pcfg = cfg["potential"]
    qcfg = cfg.get("biot_quadrature", {})
    quad = BiotSavartQuadrature(**qcfg)
    rule = homogeneous_field(alpha=pcfg.get("alpha", 3.0),
                             omega=pcfg.get("omega", (0, 0, 1)),
                             s0=pcfg.get("s0", 0.5), width=pcfg.get("width", 0.35),
                             annulus=(quad.r_inner, quad.r_outer))
    omega = np.asarray(pcfg.get("omega", (0, 0, 1)), dtype=float)
    omega /= np.linalg.norm(omega)

    axis_worst = 0.0
    for r in cfg["geometry_checks"]["axis_points"]:
        val = float(np.linalg.norm(biot_savart(rule, r * omega, quad)))
        axis_worst = max(axis_worst, val)
    headline["axis_max"] = axis_worst
    assertions.append(_assert_row("axis_value", axis_worst, tol["axis_value"]))

    spec = make_biot_family(alpha=pcfg.get("alpha", 3.0), omega=tuple(omega),
                            s0=pcfg.get("s0", 0.5), width=pcfg.get("width", 0.35),
                            quad=quad)
    perp_worst = 0.0
    anti_worst = 0.0
    tang_worst = 0.0
    for p in cfg["geometry_checks"]["probe_points"]:
        x = np.asarray(p, dtype=float)
        a = spec.A(x)
        na = float(np.linalg.norm(a))
        if na > 0:
            perp_worst = max(perp_worst, abs(float(x @ a)) / (np.linalg.norm(x) * na))
        s = eval_B(spec, x)
        anti_worst = max(anti_worst, float(np.abs(s.B + s.B.T).max()))
        nb = float(np.linalg.norm(s.B_tau))
        tang_worst = max(tang_worst, abs(float(s.B_tau @ x)) /
                         max(np.linalg.norm(x) * nb, 1e-300))
    headline["perpendicularity_max"] = perp_worst
    headline["antisymmetry_max"] = anti_worst
    headline["tangentiality_max"] = tang_worst
    assertions.append(_assert_row("perpendicularity", perp_worst, tol["perpendicularity"]))
    assertions.append(_assert_row("antisymmetry", anti_worst, tol["antisymmetry"]))
    assertions.append(_assert_row("tangentiality", tang_worst, tol["tangentiality"]))
