"""Scenario registry: named, fully explicit experiment configurations.

Each entry is a complete config dict (no hidden physical defaults) that
``maglab run`` accepts after YAML round-tripping.  ``describe`` prints the
parameters and the identities/estimates the scenario exercises.
"""

from __future__ import annotations

import copy

__all__ = ["SCENARIOS", "scenario_config", "describe", "UnknownScenarioError"]


class UnknownScenarioError(KeyError):
    pass


def _free_schrodinger() -> dict:
    return {
        "id": "free-schrodinger",
        "equation": "schrodinger",
        "dimension": 3,
        "grid": {"npts": 32, "half_width": 12.0, "offset": 0.5, "scheme": "spectral"},
        "potential": {"name": "free"},
        "datum": {"kind": "gaussian", "width": 1.0, "center": [0.4, -0.3, 0.2],
                  "momentum": [1, 0, 0], "amplitude": 1.0},
        "evolution": {"integrator": "free-spectral", "dt": 0.02, "steps": 100,
                      "store_every": 2},
        "multiplier": {"name": "variance"},
        "functionals": ["virial", "smoothing", "strichartz", "hardy"],
        "virial_assembly": "discrete",
        "strichartz_couples": [[4, 4], ["inf", 2]],
        "certificates": ["small-3d-schrodinger"],
        "hardy_fields": 8,
        "seed": 2024,
        "tolerances": {
            "mass_drift": 1e-10,
            "virial_residual_rel": 1e-5,
            "certificate_verdict": "holds-strictly",
        },
        "exercises": [
            "weighted-mass virial identity with the |x|^2 multiplier (free flow)",
            "local-smoothing functional normalized by the half-derivative datum norm",
            "wave-admissibility bookkeeping on non-endpoint couples",
            "weighted-mass vs covariant-gradient ratio bound",
        ],
    }


def _free_wave() -> dict:
    return {
        "id": "free-wave",
        "equation": "wave",
        "dimension": 3,
        "grid": {"npts": 32, "half_width": 12.0, "offset": 0.5, "scheme": "spectral"},
        "potential": {"name": "free"},
        "datum": {"kind": "gaussian", "width": 1.2, "center": [0.3, 0.2, -0.4],
                  "momentum": [0, 1, 0], "amplitude": 1.0,
                  "velocity": {"kind": "gaussian", "width": 1.2,
                               "center": [0.3, 0.2, -0.4], "momentum": [0, 1, 0],
                               "amplitude": 0.3}},
        "evolution": {"integrator": "free-spectral", "dt": 0.02, "steps": 100,
                      "store_every": 2},
        "multiplier": {"name": "variance"},
        "plateau": {"R": 3.0},
        "functionals": ["virial", "smoothing", "strichartz"],
        "virial_assembly": "discrete",
        "strichartz_couples": [[4, 4], ["inf", 2]],
        "certificates": ["small-3d-wave"],
        "seed": 2025,
        "tolerances": {
            "energy_drift": 1e-10,
            "virial_residual_rel": 1e-5,
            "certificate_verdict": "holds-strictly",
        },
        "exercises": [
            "wave virial identity with plateau weight (weak-form pairing)",
            "local energy decay functional normalized by the initial energy",
            "Strichartz mixed norms for the free half-wave flow",
        ],
    }


def _example16_schrodinger() -> dict:
    return {
        "id": "example16-schrodinger",
        "equation": "schrodinger",
        "dimension": 3,
        "grid": {"npts": 8, "half_width": 4.0, "offset": 0.5, "scheme": "spectral"},
        "potential": {"name": "azimuthal-point", "lam": 0.8, "mollify_cells": 2},
        "certificate_potential": {"name": "azimuthal-point", "lam": 0.8},
        "datum": {"kind": "gaussian", "width": 0.9, "center": [0.3, -0.2, 0.4],
                  "momentum": [1, 0, -1], "amplitude": 1.0},
        "evolution": {"integrator": "exact-dense", "dt": 1e-3, "steps": 40,
                      "store_every": 1},
        "multiplier": {"name": "morawetz-3d", "M": 0.5, "R": 1.0},
        "functionals": ["virial", "interpolation"],
        "virial_assembly": "discrete",
        "certificates": ["small-3d-schrodinger"],
        "seed": 11,
        "tolerances": {
            "mass_drift": 1e-10,
            "virial_residual_rel": 1e-6,
            "virial_halving_ratio_min": 3.0,
            "certificate_btau_norm": 1e-10,
        },
        "exercises": [
            "exact-commutator virial identity on the dense-oracle grid",
            "singular azimuthal potential with vanishing tangential field",
            "smallness certificate via weighted radial-sup norms",
            "interpolation pairing boundedness for the capped-slope multiplier",
        ],
    }


def _example16_wave() -> dict:
    return {
        "id": "example16-wave",
        "equation": "wave",
        "dimension": 3,
        "grid": {"npts": 8, "half_width": 4.0, "offset": 0.5, "scheme": "spectral"},
        "potential": {"name": "azimuthal-point", "lam": 0.8, "mollify_cells": 2},
        "certificate_potential": {"name": "azimuthal-point", "lam": 0.8},
        "datum": {"kind": "gaussian", "width": 0.9, "center": [0.3, -0.2, 0.4],
                  "momentum": [1, 0, -1], "amplitude": 1.0,
                  "velocity": {"kind": "gaussian", "width": 1.0,
                               "center": [-0.2, 0.3, 0.1], "momentum": [0, 1, 0],
                               "amplitude": 0.4}},
        "evolution": {"integrator": "exact-dense", "dt": 2e-3, "steps": 40,
                      "store_every": 1},
        "multiplier": {"name": "perturbed-nd", "R": 1.0},
        "plateau": {"R": 1.0},
        "functionals": ["virial"],
        "virial_assembly": "discrete",
        "certificates": ["small-3d-wave"],
        "seed": 12,
        "tolerances": {
            "energy_drift": 1e-10,
            "virial_residual_rel": 1e-5,
            "antisym_ut_T_ut": 1e-10,
        },
        "exercises": [
            "wave virial identity with the capped-slope perturbed multiplier",
            "plateau-weight terms paired in weak form",
            "distorted wave energy conservation on the dense path",
        ],
    }


def _biot_family() -> dict:
    return {
        "id": "biot-family-alpha3",
        "equation": "geometry",
        "dimension": 3,
        "potential": {"name": "biot-family", "alpha": 3.0, "omega": [0.0, 0.0, 1.0],
                      "s0": 0.5, "width": 0.35},
        "biot_quadrature": {"r_inner": 0.3, "r_outer": 5.0, "n_radial": 48,
                            "n_polar": 36, "n_azimuth": 72, "exclusion": 0.3},
        "geometry_checks": {
            "axis_points": [0.5, 1.0, 2.0],
            "probe_points": [[0.9, 0.5, 1.0], [-0.6, 0.8, 1.1], [1.2, -0.4, 0.8]],
        },
        "certificates": [],
        "seed": 13,
        "tolerances": {
            "axis_value": 1e-12,
            "perpendicularity": 1e-10,
            "antisymmetry": 1e-9,
            "tangentiality": 1e-9,
        },
        "exercises": [
            "reconstruction of A from a radially directed homogeneous field",
            "vanishing of the reconstructed potential on the symmetry axis",
            "antisymmetry and tangentiality of the field matrix",
        ],
    }


def _highdim_n4() -> dict:
    return {
        "id": "highdim-n4-smallfield",
        "equation": "schrodinger",
        "dimension": 4,
        "grid": {"npts": 8, "half_width": 4.0, "offset": 0.5, "scheme": "spectral"},
        "potential": {"name": "n4-smallfield", "lam": 0.05},
        "datum": {"kind": "gaussian", "width": 0.9, "center": [0.3, -0.2, 0.1, 0.2],
                  "momentum": [1, 0, 0, 0], "amplitude": 1.0},
        "evolution": {"integrator": "crank-nicolson", "dt": 2e-3, "steps": 50,
                      "store_every": 1, "solve_tol": 1e-13},
        "multiplier": {"name": "variance"},
        "functionals": ["virial"],
        "virial_assembly": "discrete",
        "certificates": ["highdim-schrodinger"],
        "seed": 14,
        "tolerances": {
            "mass_drift": 1e-10,
            "virial_residual_rel": 1e-4,
            "certificate_verdict": "holds-strictly",
        },
        "exercises": [
            "higher-dimensional decay-constant certificate C1^2 + 2 C2",
            "variance virial identity in dimension four",
            "Crank-Nicolson unitarity on a 4D grid",
        ],
    }


def _smooth_decay_wave() -> dict:
    return {
        "id": "smooth-decay-wave",
        "equation": "wave",
        "dimension": 3,
        "grid": {"npts": 48, "half_width": 16.0, "offset": 0.5, "scheme": "spectral"},
        "potential": {"name": "smooth-decay", "lam": 0.6, "delta": 0.5},
        "datum": {"kind": "gaussian", "width": 1.4, "center": [0.0, 0.0, 0.0],
                  "momentum": [0, 0, 0], "amplitude": 1.0,
                  "velocity": {"kind": "gaussian", "width": 1.4,
                               "center": [0.0, 0.0, 0.0], "momentum": [0, 0, 0],
                               "amplitude": 0.5}},
        "evolution": {"integrator": "wave-leapfrog", "dt": 0.04, "steps": 40,
                      "store_every": 4},
        "multiplier": {"name": "variance"},
        "functionals": ["virial", "dyadic"],
        "virial_assembly": "discrete",
        "certificates": ["small-3d-wave"],
        "seed": 15,
        "tolerances": {
            "energy_drift": 5e-4,
            "virial_residual_rel": 5e-3,
        },
        "exercises": [
            "dyadic source decomposition under almost-Coulomb field decay",
            "wave virial trace for a leapfrog trajectory",
        ],
    }


SCENARIOS = {
    cfg["id"]: cfg
    for cfg in (
        _free_schrodinger(),
        _free_wave(),
        _example16_schrodinger(),
        _example16_wave(),
        _biot_family(),
        _highdim_n4(),
        _smooth_decay_wave(),
    )
}


def scenario_config(scenario_id: str) -> dict:
    try:
        return copy.deepcopy(SCENARIOS[scenario_id])
    except KeyError:
        raise UnknownScenarioError(
            f"unknown scenario {scenario_id!r}; available: {sorted(SCENARIOS)}"
        ) from None


def describe(scenario_id: str) -> str:
    cfg = scenario_config(scenario_id)
    lines = [f"scenario: {cfg['id']}", f"equation: {cfg['equation']}",
             f"dimension: {cfg['dimension']}"]
    pot = cfg.get("potential", {})
    lines.append("potential: " + ", ".join(f"{k}={v}" for k, v in pot.items()))
    if "grid" in cfg:
        g = cfg["grid"]
        lines.append(f"grid: {g['npts']}^{cfg['dimension']} on [-{g['half_width']}, {g['half_width']})")
    if "evolution" in cfg:
        e = cfg["evolution"]
        lines.append(f"evolution: {e['integrator']}, dt={e['dt']}, steps={e['steps']}")
    if cfg.get("certificates"):
        lines.append("certificates: " + ", ".join(cfg["certificates"]))
    lines.append("exercises:")
    for item in cfg.get("exercises", []):
        lines.append(f"  - {item}")
    lines.append("tolerances:")
    for k, v in sorted(cfg.get("tolerances", {}).items()):
        lines.append(f"  {k}: {v}")
    return "\n".join(lines)
