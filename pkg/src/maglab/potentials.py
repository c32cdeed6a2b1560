"""Electromagnetic field geometry.

A :class:`PotentialSpec` carries analytic rules for the vector potential
A : R^n -> R^n and the scalar potential V : R^n -> R, together with optional
analytic Jacobian and radial-derivative rules, singularity metadata and a
mollification radius.  The antisymmetric field matrix is

    B = J - J^T,   J_ij = dA^i/dx^j,

and its tangential part is the row-vector product B_tau = (x/|x|) B, which is
orthogonal to x in every dimension.  In three dimensions B acts as
(curl A) x v on vectors.

Mollification freezes the radial coordinate at eps inside the eps-ball (or the
eps-cylinder for line singularities), which keeps grid evaluations finite
while leaving the far field untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PotentialSpec",
    "FieldMatrixSample",
    "PotentialError",
    "SingularityError",
    "eval_B",
    "gauge_residual",
    "builtin_potential",
    "BUILTIN_POTENTIALS",
]


class PotentialError(ValueError):
    """Bad arguments to a potential operation."""


class SingularityError(PotentialError):
    """Evaluation requested on (or too close to) the singular set."""


def _fd_step(x: np.ndarray) -> float:
    return math.sqrt(np.finfo(float).eps) * (1.0 + float(np.linalg.norm(x)))


@dataclass(frozen=True)
class PotentialSpec:
    """Analytic description of the pair (A, V).

    ``a_rule``/``v_rule`` accept a point (shape ``(n,)``) and return the vector
    A(x) / scalar V(x).  ``jacobian_rule`` (optional) returns the n x n matrix
    J_ij = dA^i/dx^j; without it a central difference with step
    sqrt(machine eps) * (1 + |x|) is used.  ``vr_rule`` (optional) returns the
    radial derivative x^ . grad V.  ``singularities`` is a list of descriptors:
    ("point", center) or ("line", axis_index) for a coordinate-axis line.
    """

    n: int
    a_rule: Callable[[np.ndarray], np.ndarray]
    v_rule: Callable[[np.ndarray], float]
    jacobian_rule: Callable[[np.ndarray], np.ndarray] | None = None
    vr_rule: Callable[[np.ndarray], float] | None = None
    singularities: tuple = ()
    mollify_eps: float = 0.0
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise PotentialError(f"dimension must be >= 2, got {self.n}")
        if self.mollify_eps < 0:
            raise PotentialError("mollification radius must be >= 0")

    @property
    def uses_numerical_jacobian(self) -> bool:
        return self.jacobian_rule is None

    def with_mollification(self, eps: float) -> "PotentialSpec":
        """Not a generic operation: only builtins know how to freeze |x| at eps."""
        factory = BUILTIN_POTENTIALS.get(self.name)
        if factory is None:
            raise PotentialError(
                f"potential {self.name!r} has no mollification recipe; "
                "construct it with the desired eps"
            )
        return factory(n=self.n, eps=eps, **self.params)

    # -- evaluation ---------------------------------------------------------

    def singular_distance(self, x: np.ndarray) -> float:
        """Distance from x to the (un-mollified) singular set; inf if none."""
        d = math.inf
        for kind, datum in self.singularities:
            if kind == "point":
                d = min(d, float(np.linalg.norm(x - np.asarray(datum))))
            elif kind == "line":
                mask = np.ones(self.n, dtype=bool)
                mask[datum] = False
                d = min(d, float(np.linalg.norm(x[mask])))
        return d

    def check_evaluable(self, x: np.ndarray) -> None:
        if self.mollify_eps > 0.0:
            return  # mollified rules are total
        tiny = 1e-12
        if self.singular_distance(x) < tiny:
            raise SingularityError(
                f"{self.name}: evaluation at x={np.asarray(x).tolist()} hits the "
                f"singular set {list(self.singularities)}"
            )

    def A(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self.check_evaluable(x)
        return np.asarray(self.a_rule(x), dtype=float)

    def V(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        self.check_evaluable(x)
        return float(self.v_rule(x))

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self.check_evaluable(x)
        if self.jacobian_rule is not None:
            return np.asarray(self.jacobian_rule(x), dtype=float)
        h = _fd_step(x)
        J = np.empty((self.n, self.n))
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = h
            J[:, j] = (self.a_rule(x + e) - self.a_rule(x - e)) / (2.0 * h)
        return J

    def V_r(self, x: np.ndarray) -> float:
        """Radial derivative x^ . grad V."""
        x = np.asarray(x, dtype=float)
        self.check_evaluable(x)
        r = float(np.linalg.norm(x))
        if r == 0.0:
            raise PotentialError("V_r undefined at the origin")
        if self.vr_rule is not None:
            return float(self.vr_rule(x))
        h = _fd_step(x)
        xhat = x / r
        return float((self.v_rule(x + h * xhat) - self.v_rule(x - h * xhat)) / (2.0 * h))

    def sample_on_grid(self, grid) -> tuple[list[np.ndarray], np.ndarray]:
        """Sample (A components, V) on all grid nodes.

        Vectorizes by looping over nodes only when the rules are not
        broadcast-safe; builtins accept stacked points of shape (..., n).
        """
        pts = np.stack(np.broadcast_arrays(*grid.coords), axis=-1)
        try:
            a_all = np.asarray(self.a_rule(pts), dtype=float)
            if a_all.shape != grid.shape + (self.n,):
                raise ValueError
            v_all = np.broadcast_to(np.asarray(self.v_rule(pts), dtype=float), grid.shape)
        except Exception:
            flat = pts.reshape(-1, self.n)
            a_all = np.empty((flat.shape[0], self.n))
            v_all = np.empty(flat.shape[0])
            for i, p in enumerate(flat):
                a_all[i] = self.a_rule(p)
                v_all[i] = self.v_rule(p)
            a_all = a_all.reshape(grid.shape + (self.n,))
            v_all = v_all.reshape(grid.shape)
        comps = [np.ascontiguousarray(a_all[..., j]) for j in range(self.n)]
        return comps, np.ascontiguousarray(v_all)


@dataclass(frozen=True)
class FieldMatrixSample:
    """B and B_tau evaluated at one point."""

    x: np.ndarray
    B: np.ndarray
    B_tau: np.ndarray

    def curl_vector(self) -> np.ndarray:
        """Axial vector c with B v = c x v; only defined for n = 3."""
        if self.B.shape != (3, 3):
            raise PotentialError("curl vector is only defined in 3D")
        return np.array([-self.B[1, 2], self.B[0, 2], -self.B[0, 1]])


def eval_B(spec: PotentialSpec, x) -> FieldMatrixSample:
    """Evaluate B = J - J^T and B_tau = (x/|x|) B at one point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise PotentialError(f"point has shape {x.shape}, expected ({spec.n},)")
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise PotentialError("B_tau undefined at x = 0 (x/|x| has no limit)")
    J = spec.jacobian(x)
    B = J - J.T
    btau = (x / r) @ B
    return FieldMatrixSample(x=x, B=B, B_tau=btau)


def gauge_residual(spec: PotentialSpec, samples: Sequence[np.ndarray]) -> float:
    """max |div A| over the sample set, from the Jacobian trace."""
    pts = list(samples)
    if not pts:
        raise PotentialError("gauge_residual needs a non-empty sample set")
    worst = 0.0
    for p in pts:
        J = spec.jacobian(np.asarray(p, dtype=float))
        worst = max(worst, abs(float(np.trace(J))))
    return worst


# ---------------------------------------------------------------------------
# builtin potentials
# ---------------------------------------------------------------------------


def _frozen_radius(r: np.ndarray, eps: float) -> np.ndarray:
    return np.maximum(r, eps) if eps > 0.0 else r


def make_free(n: int = 3, eps: float = 0.0) -> PotentialSpec:
    return PotentialSpec(
        n=n,
        a_rule=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        v_rule=lambda x: np.zeros(np.asarray(x).shape[:-1]) if np.asarray(x).ndim > 1 else 0.0,
        jacobian_rule=lambda x: np.zeros((n, n)),
        vr_rule=lambda x: 0.0,
        name="free",
    )


def make_constant(n: int = 3, c: Sequence[float] = (1.0, 0.0, 0.0), eps: float = 0.0) -> PotentialSpec:
    cv = np.asarray(c, dtype=float)
    if cv.shape != (n,):
        raise PotentialError("constant vector has wrong dimension")
    return PotentialSpec(
        n=n,
        a_rule=lambda x: np.broadcast_to(cv, np.asarray(x).shape),
        v_rule=lambda x: np.zeros(np.asarray(x).shape[:-1]) if np.asarray(x).ndim > 1 else 0.0,
        jacobian_rule=lambda x: np.zeros((n, n)),
        vr_rule=lambda x: 0.0,
        name="constant",
        params={"c": tuple(cv)},
    )


def make_linear(n: int = 3, eps: float = 0.0) -> PotentialSpec:
    """A(x) = x; div A = n everywhere (deliberately gauge-violating)."""
    return PotentialSpec(
        n=n,
        a_rule=lambda x: np.asarray(x, dtype=float),
        v_rule=lambda x: np.zeros(np.asarray(x).shape[:-1]) if np.asarray(x).ndim > 1 else 0.0,
        jacobian_rule=lambda x: np.eye(n),
        vr_rule=lambda x: 0.0,
        name="linear",
    )


def _azimuthal_point(eps: float, lam: float):
    """A = lam * (-y, x, 0) / max(|x|, eps)^2 : singular at the origin."""

    def a_rule(x):
        x = np.asarray(x, dtype=float)
        r = _frozen_radius(np.linalg.norm(x, axis=-1), eps)
        out = np.zeros_like(x)
        out[..., 0] = -x[..., 1]
        out[..., 1] = x[..., 0]
        return lam * out / (r[..., None] ** 2)

    def jac(x):
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        J = np.zeros((3, 3))
        if eps > 0.0 and r <= eps:
            J[0, 1] = -1.0 / eps**2
            J[1, 0] = 1.0 / eps**2
            return lam * J
        r2 = r * r
        # d/dx_j of (-y/r^2): -delta_{j2}/r^2 + 2 y x_j / r^4
        J[0, :] = 2.0 * x[1] * x / r2**2
        J[0, 1] -= 1.0 / r2
        J[1, :] = -2.0 * x[0] * x / r2**2
        J[1, 0] += 1.0 / r2
        return lam * J

    return a_rule, jac


def make_azimuthal_point(n: int = 3, eps: float = 0.0, lam: float = 1.0) -> PotentialSpec:
    """Divergence-free azimuthal potential with inverse-square falloff.

    Its field matrix acts as c x v with c = 2 lam z |x|^-4 (x, y, z), a purely
    radial axial vector, so B_tau vanishes identically away from the origin.
    """
    if n != 3:
        raise PotentialError("azimuthal-point potential is a 3D builtin")
    a_rule, jac = _azimuthal_point(eps, lam)
    return PotentialSpec(
        n=3,
        a_rule=a_rule,
        v_rule=lambda x: np.zeros(np.asarray(x).shape[:-1]) if np.asarray(x).ndim > 1 else 0.0,
        jacobian_rule=jac,
        vr_rule=lambda x: 0.0,
        singularities=(("point", (0.0, 0.0, 0.0)),) if eps == 0.0 else (),
        mollify_eps=eps,
        name="azimuthal-point",
        params={"lam": lam},
    )


def make_azimuthal_line(n: int = 3, eps: float = 0.0, lam: float = 1.0) -> PotentialSpec:
    """A = lam * (-y, x, 0)/(x^2 + y^2): flux-line potential, singular on the z axis."""
    if n != 3:
        raise PotentialError("azimuthal-line potential is a 3D builtin")

    def a_rule(x):
        x = np.asarray(x, dtype=float)
        s2 = x[..., 0] ** 2 + x[..., 1] ** 2
        if eps > 0.0:
            s2 = np.maximum(s2, eps**2)
        out = np.zeros_like(x)
        out[..., 0] = -x[..., 1]
        out[..., 1] = x[..., 0]
        return lam * out / s2[..., None]

    def jac(x):
        x = np.asarray(x, dtype=float)
        s2 = x[0] ** 2 + x[1] ** 2
        J = np.zeros((3, 3))
        if eps > 0.0 and s2 <= eps**2:
            J[0, 1] = -1.0 / eps**2
            J[1, 0] = 1.0 / eps**2
            return lam * J
        J[0, 0] = 2.0 * x[1] * x[0] / s2**2
        J[0, 1] = -1.0 / s2 + 2.0 * x[1] ** 2 / s2**2
        J[1, 0] = 1.0 / s2 - 2.0 * x[0] ** 2 / s2**2
        J[1, 1] = -2.0 * x[0] * x[1] / s2**2
        return lam * J

    return PotentialSpec(
        n=3,
        a_rule=a_rule,
        v_rule=lambda x: np.zeros(np.asarray(x).shape[:-1]) if np.asarray(x).ndim > 1 else 0.0,
        jacobian_rule=jac,
        vr_rule=lambda x: 0.0,
        singularities=(("line", 2),) if eps == 0.0 else (),
        mollify_eps=eps,
        name="azimuthal-line",
        params={"lam": lam},
    )


def make_smooth_decay(n: int = 3, eps: float = 0.0, lam: float = 1.0, delta: float = 0.5) -> PotentialSpec:
    """Smooth divergence-free A with |A| <= C (1 + |x|)^-(2 + delta); V = 0.

    A = lam * (-y, x, 0) * (1 + |x|^2)^(-(3 + delta)/2).  Azimuthal fields with
    any radial profile are divergence free.
    """
    if n != 3:
        raise PotentialError("smooth-decay potential is a 3D builtin")
    p = -(3.0 + delta) / 2.0

    def a_rule(x):
        x = np.asarray(x, dtype=float)
        w = (1.0 + np.sum(x * x, axis=-1)) ** p
        out = np.zeros_like(x)
        out[..., 0] = -x[..., 1]
        out[..., 1] = x[..., 0]
        return lam * out * w[..., None]

    def jac(x):
        x = np.asarray(x, dtype=float)
        s = 1.0 + float(x @ x)
        w = s**p
        dw = 2.0 * p * s ** (p - 1.0) * x  # grad of (1+|x|^2)^p
        base = np.array([-x[1], x[0], 0.0])
        J = np.outer(base, dw)
        J[0, 1] -= w
        J[1, 0] += w
        return lam * J

    return PotentialSpec(
        n=3,
        a_rule=a_rule,
        v_rule=lambda x: np.zeros(np.asarray(x).shape[:-1]) if np.asarray(x).ndim > 1 else 0.0,
        jacobian_rule=jac,
        vr_rule=lambda x: 0.0,
        name="smooth-decay",
        params={"lam": lam, "delta": delta},
    )


def make_n4_smallfield(n: int = 4, eps: float = 0.0, lam: float = 0.05) -> PotentialSpec:
    """4D divergence-free test field A = lam (-x2, x1, -x4, x3)(1 + |x|^2)^-3/2."""
    if n != 4:
        raise PotentialError("this builtin is 4-dimensional")

    def base(x):
        out = np.empty_like(x)
        out[..., 0] = -x[..., 1]
        out[..., 1] = x[..., 0]
        out[..., 2] = -x[..., 3]
        out[..., 3] = x[..., 2]
        return out

    def a_rule(x):
        x = np.asarray(x, dtype=float)
        w = (1.0 + np.sum(x * x, axis=-1)) ** -1.5
        return lam * base(x) * w[..., None]

    def jac(x):
        x = np.asarray(x, dtype=float)
        s = 1.0 + float(x @ x)
        w = s**-1.5
        dw = -3.0 * s**-2.5 * x
        J = np.outer(base(x), dw)
        P = np.zeros((4, 4))
        P[0, 1], P[1, 0], P[2, 3], P[3, 2] = -1.0, 1.0, -1.0, 1.0
        return lam * (J + w * P)

    return PotentialSpec(
        n=4,
        a_rule=a_rule,
        v_rule=lambda x: np.zeros(np.asarray(x).shape[:-1]) if np.asarray(x).ndim > 1 else 0.0,
        jacobian_rule=jac,
        vr_rule=lambda x: 0.0,
        name="n4-smallfield",
        params={"lam": lam},
    )


def make_ring_well(n: int = 3, eps: float = 0.0, lam: float = 0.2, width: float = 1.0) -> PotentialSpec:
    """Pure electric ring well V = lam |x|^2 exp(-|x|^2/width^2); A = 0.

    V_r changes sign at |x| = width, so the positive part V_r^+ is nontrivial
    but integrable against every weight used by the certificates.
    """

    def v_rule(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        return lam * r2 * np.exp(-r2 / width**2)

    def vr_rule(x):
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        r = math.sqrt(r2)
        return lam * (2.0 * r - 2.0 * r * r2 / width**2) * math.exp(-r2 / width**2)

    return PotentialSpec(
        n=n,
        a_rule=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        v_rule=v_rule,
        jacobian_rule=lambda x: np.zeros((n, n)),
        vr_rule=vr_rule,
        name="ring-well",
        params={"lam": lam, "width": width},
    )


def make_tabulated(path, eps: float = 0.0, n: int | None = None) -> PotentialSpec:
    """Potential from tabulated grid values (npz archive).

    Expected arrays: ``a`` of shape (n, N, ..., N), ``v`` of shape (N, ..., N),
    scalars ``half_width`` and ``offset``.  Off-node evaluation uses periodic
    multilinear interpolation; the Jacobian falls back to central differences.
    """
    from .grids import GridSpec
    from .sphere import interpolate

    data = np.load(path)
    a = np.asarray(data["a"], dtype=float)
    v = np.asarray(data["v"], dtype=float)
    dim = a.shape[0]
    if n is not None and n != dim:
        raise PotentialError(f"tabulated potential is {dim}-dimensional, requested {n}")
    if v.shape != a.shape[1:]:
        raise PotentialError("tabulated arrays a and v have inconsistent shapes")
    grid = GridSpec(n=dim, npts=v.shape[0], half_width=float(data["half_width"]),
                    offset=float(data.get("offset", 0.5)))
    if v.shape != grid.shape:
        raise PotentialError("tabulated arrays are not cubical")

    def a_rule(x):
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, dim)
        out = np.stack([interpolate(a[j], grid, pts) for j in range(dim)], axis=-1)
        return out.reshape(x.shape)

    def v_rule(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(interpolate(v, grid, x[None, :])[0])
        pts = x.reshape(-1, dim)
        return interpolate(v, grid, pts).reshape(x.shape[:-1])

    return PotentialSpec(n=dim, a_rule=a_rule, v_rule=v_rule,
                         name="tabulated", params={"path": str(path)})


def gauge_shift(spec: PotentialSpec, psi_grad: Callable[[np.ndarray], np.ndarray],
                psi_hessian: Callable[[np.ndarray], np.ndarray] | None = None,
                label: str = "gauge-shift") -> PotentialSpec:
    """Replace A by A + grad(psi); B is unchanged for any smooth psi."""

    def a_rule(x):
        return spec.a_rule(x) + psi_grad(np.asarray(x, dtype=float))

    jac = None
    if spec.jacobian_rule is not None and psi_hessian is not None:
        def jac(x):
            return spec.jacobian_rule(x) + psi_hessian(np.asarray(x, dtype=float))

    return replace(spec, a_rule=a_rule, jacobian_rule=jac, name=f"{spec.name}+{label}")


BUILTIN_POTENTIALS: dict[str, Callable[..., PotentialSpec]] = {
    "free": make_free,
    "constant": make_constant,
    "linear": make_linear,
    "azimuthal-point": make_azimuthal_point,
    "azimuthal-line": make_azimuthal_line,
    "smooth-decay": make_smooth_decay,
    "n4-smallfield": make_n4_smallfield,
    "ring-well": make_ring_well,
}


def builtin_potential(name: str, n: int = 3, eps: float = 0.0, **params) -> PotentialSpec:
    try:
        factory = BUILTIN_POTENTIALS[name]
    except KeyError:
        raise PotentialError(
            f"unknown potential {name!r}; available: {sorted(BUILTIN_POTENTIALS)}"
        ) from None
    return factory(n=n, eps=eps, **params)
