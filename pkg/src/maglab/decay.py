"""Weighted radial-decay norms and smallness certificates.

The gating quantity is the weighted radial-sup norm

    |||f|||_alpha = int_0^inf rho^alpha sup_{|x|=rho} |f(x)| d rho,

estimated from deterministic sphere sampling (see :mod:`maglab.sphere`) and a
truncated 1-D quadrature.  Certificates evaluate either the 3D smallness
condition

    |||B_tau^2|||_3 + |||V_r^+|||_2 <= 1/2

or the higher-dimensional decay condition

    C1^2 + 2 C2 <= (2/3)(n-1)(n-3),
    C1 = sup |B_tau| |x|^2,   C2 = sup V_r^+ |x|^3.

The 1/2 on the 3D side comes from minimizing (M + 1/2)^2 / M over the
multiplier slope parameter M > 0: the minimum sits at M = 1/2 where both
ellipse coefficients equal 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .potentials import PotentialSpec, eval_B
from .sphere import sphere_points

__all__ = [
    "RadialQuadrature",
    "DivergentNormError",
    "triple_norm",
    "spherical_sup_profile",
    "Certificate",
    "certify",
    "certificate_from_constants",
    "optimize_M",
    "ellipse_condition",
    "CERTIFICATE_MODES",
]

CERTIFICATE_MODES = (
    "small-3d-schrodinger",
    "highdim-schrodinger",
    "small-3d-wave",
    "highdim-wave",
)


class DivergentNormError(ArithmeticError):
    """Triple-norm quadrature failed its tail-decay check."""

    def __init__(self, message: str, partial: float):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class RadialQuadrature:
    """Truncated quadrature window for |||.|||_alpha estimates.

    The integrand is sampled on ``points`` log-spaced radii in
    [r_min, r_max] and integrated by the trapezoid rule.  Divergence is
    declared when the outermost dyadic window contributes more than
    ``tail_fraction`` of the running total and does not decrease.
    """

    r_min: float = 1e-3
    r_max: float = 64.0
    points: int = 800
    sphere_count: int = 256
    tail_fraction: float = 0.2

    def radii(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.points)


def triple_norm(profile: Callable[[np.ndarray], np.ndarray], alpha: float,
                quad: RadialQuadrature | None = None) -> float:
    """Quadrature of rho^alpha * profile(rho) over the truncation window.

    ``profile`` maps an array of radii to the spherical suprema
    sup_{|x|=rho}|f|; it must be vectorized and nonnegative.
    """
    quad = quad or RadialQuadrature()
    rho = quad.radii()
    vals = np.asarray(profile(rho), dtype=float)
    if vals.shape != rho.shape:
        vals = np.array([float(profile(np.array([r]))) for r in rho])
    integrand = rho**alpha * vals
    total = float(np.trapezoid(integrand, rho))
    # dyadic tail audit on the top two octaves
    hi = rho >= quad.r_max / 2.0
    mid = (rho >= quad.r_max / 4.0) & ~hi
    tail_hi = float(np.trapezoid(integrand[hi], rho[hi])) if hi.sum() > 1 else 0.0
    tail_mid = float(np.trapezoid(integrand[mid], rho[mid])) if mid.sum() > 1 else 0.0
    if total > 0.0 and tail_hi > quad.tail_fraction * total and tail_hi >= tail_mid:
        raise DivergentNormError(
            f"weighted norm does not settle on [{quad.r_min}, {quad.r_max}]: "
            f"top octave carries {tail_hi / total:.1%} of the total",
            partial=total,
        )
    return total


def spherical_sup_profile(spec: PotentialSpec, quantity: str,
                          quad: RadialQuadrature | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Profile rho -> sup_{|x|=rho} q(x) for q in {'btau2', 'btau', 'vrplus'}.

    The sup is taken over the deterministic sphere node set; radii whose
    sphere intersects the singular set report the sup over evaluable nodes.
    """
    quad = quad or RadialQuadrature()
    if quantity not in ("btau2", "btau", "vrplus"):
        raise ValueError(f"unknown quantity {quantity!r}")
    dirs = sphere_points(spec.n, quad.sphere_count)

    def profile(rho: np.ndarray) -> np.ndarray:
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.empty(rho.shape)
        for i, r in enumerate(rho):
            best = 0.0
            for d in dirs:
                x = r * d
                try:
                    if quantity == "vrplus":
                        val = max(spec.V_r(x), 0.0)
                    else:
                        bt = float(np.linalg.norm(eval_B(spec, x).B_tau))
                        val = bt * bt if quantity == "btau2" else bt
                except Exception:
                    continue
                best = max(best, val)
            out[i] = best
        return out

    return profile


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Evaluated smallness condition for one estimate family."""

    mode: str
    measured: dict = field(default_factory=dict)
    threshold: float = 0.0
    value: float = 0.0
    verdict: str = "fails"
    multiplier_M: float = 0.5
    strict_margin: float = 1e-12
    divergent: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "measured": {k: float(v) for k, v in self.measured.items()},
                "threshold": float(self.threshold),
                "value": float(self.value),
                "verdict": self.verdict,
                "multiplier_M": float(self.multiplier_M),
                "strict_margin": float(self.strict_margin),
                "divergent": self.divergent,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "Certificate":
        d = json.loads(text)
        return Certificate(
            mode=d["mode"],
            measured=d["measured"],
            threshold=d["threshold"],
            value=d["value"],
            verdict=d["verdict"],
            multiplier_M=d["multiplier_M"],
            strict_margin=d["strict_margin"],
            divergent=d["divergent"],
        )


def _verdict(value, threshold, strict_margin: float, divergent: bool) -> str:
    """Pure function of the stored numbers; exact when given Fractions."""
    if divergent or value > threshold:
        return "fails"
    if value < threshold - strict_margin:
        return "holds-strictly"
    return "holds"


def optimize_M(bTau3: float, vr2: float) -> tuple[float, bool]:
    """Minimize the B-coefficient (M + 1/2)^2 / M over M > 0.

    The minimizer is M = 1/2 (value 2), independent of the inputs; feasibility
    reports whether the ellipse condition holds there.
    """
    if bTau3 < 0 or vr2 < 0:
        raise ValueError("weighted norms must be nonnegative")
    M = 0.5
    return M, ellipse_condition(M, bTau3, vr2)


def ellipse_condition(M, bTau3, vr2) -> bool:
    """(M + 1/2)^2 / M * |||B_tau^2|||_3 + 2 (M + 1/2) |||V_r^+|||_2 <= 1.

    Evaluates in exact rational arithmetic whenever the inputs convert
    losslessly to fractions (floats do).
    """
    Mq = Fraction(M)
    if Mq <= 0:
        raise ValueError("M must be positive")
    b = Fraction(bTau3)
    v = Fraction(vr2)
    coeff_b = (Mq + Fraction(1, 2)) ** 2 / Mq
    coeff_v = 2 * (Mq + Fraction(1, 2))
    return coeff_b * b + coeff_v * v <= 1


def highdim_threshold(n: int) -> Fraction:
    return Fraction(2, 3) * (n - 1) * (n - 3)


def certificate_from_constants(mode: str, n: int, C1, C2,
                               strict_margin: float = 1e-12) -> Certificate:
    """Certificate for the higher-dimensional condition from given constants.

    Exact at the boundary: Fractions in, exact comparison inside.
    """
    if mode not in ("highdim-schrodinger", "highdim-wave"):
        raise ValueError("constant-based certificates are for the highdim modes")
    if n < 4:
        raise ValueError("higher-dimensional condition needs n >= 4")
    c1 = Fraction(C1)
    c2 = Fraction(C2)
    thr = highdim_threshold(n)
    val = c1 * c1 + 2 * c2
    verdict = _verdict(val, thr, Fraction(strict_margin), False)
    return Certificate(
        mode=mode,
        measured={"C1": float(c1), "C2": float(c2)},
        threshold=float(thr),
        value=float(val),
        verdict=verdict,
        multiplier_M=0.5,
        strict_margin=strict_margin,
    )


def certify(spec: PotentialSpec, n: int, mode: str,
            quad: RadialQuadrature | None = None,
            strict_margin: float = 1e-9) -> Certificate:
    """Measure the smallness condition gating the requested estimate family."""
    if mode not in CERTIFICATE_MODES:
        raise ValueError(f"unknown certificate mode {mode!r}; choose from {CERTIFICATE_MODES}")
    if n != spec.n:
        raise ValueError(f"certificate dimension {n} does not match spec dimension {spec.n}")
    quad = quad or RadialQuadrature()

    if mode.startswith("small-3d"):
        if n != 3:
            raise ValueError("the smallness condition with weighted norms is 3D")
        divergent = False
        try:
            b3 = triple_norm(spherical_sup_profile(spec, "btau2", quad), 3.0, quad)
        except DivergentNormError as err:
            b3, divergent = err.partial, True
        try:
            v2 = triple_norm(spherical_sup_profile(spec, "vrplus", quad), 2.0, quad)
        except DivergentNormError as err:
            v2, divergent = err.partial, True
        value = b3 + v2
        threshold = 0.5
        verdict = _verdict(value, threshold, strict_margin, divergent)
        return Certificate(
            mode=mode,
            measured={"btau2_norm3": b3, "vrplus_norm2": v2},
            threshold=threshold,
            value=value,
            verdict=verdict,
            multiplier_M=0.5,
            strict_margin=strict_margin,
            divergent=divergent,
        )

    # highdim modes: decay constants from sampled suprema
    if n < 4:
        raise ValueError("higher-dimensional condition needs n >= 4")
    rho = quad.radii()
    dirs = sphere_points(n, quad.sphere_count)
    C1 = 0.0
    C2 = 0.0
    for r in rho:
        for d in dirs:
            x = r * d
            try:
                bt = float(np.linalg.norm(eval_B(spec, x).B_tau))
                vr = max(spec.V_r(x), 0.0)
            except Exception:
                continue
            C1 = max(C1, bt * r**2)
            C2 = max(C2, vr * r**3)
    thr = float(highdim_threshold(n))
    value = C1 * C1 + 2.0 * C2
    verdict = _verdict(value, thr, strict_margin, False)
    return Certificate(
        mode=mode,
        measured={"C1": C1, "C2": C2},
        threshold=thr,
        value=value,
        verdict=verdict,
        multiplier_M=0.5,
        strict_margin=strict_margin,
    )
