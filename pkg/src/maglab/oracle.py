"""Dense-matrix reference implementation on tiny grids.

Everything here is explicit linear algebra over the flattened grid: H and the
multiplier operator T are square matrices, the flow is an eigendecomposition,
and the commutator [H, T] is formed literally.  Along the exact flow

    theta(t) = <u, phi u>,   theta''(t) = <u, [H,T] u>

holds as a matrix identity, so the only residual in the check below is the
O(dt^2) second-differencing error.  The module cross-validates the FFT-level
assembly in :mod:`maglab.functionals` term by term and generates the fixture
file consumed by the test suites.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .engine import DistortedNormEngine, axis_derivative_matrix, dense_hamiltonian
from .grids import Field, GridSpec, WaveState
from .multipliers import PlateauWeight, RadialMultiplier
from .operators import SampledPotential

__all__ = [
    "DenseOperator",
    "OracleError",
    "GRID_CAP",
    "build_T",
    "build_commutator",
    "commutator_identity_check",
    "wave_identity_check",
    "IdentityReport",
    "generate_fixtures",
]

GRID_CAP = 1728  # 12^3 unknowns; dense eigendecompositions stay cheap below this


class OracleError(RuntimeError):
    pass


@dataclass
class DenseOperator:
    matrix: np.ndarray
    label: str
    hermitian: bool = False
    antisymmetric: bool = False

    def __post_init__(self):
        scale = np.linalg.norm(self.matrix)
        if scale == 0.0:
            return
        if self.hermitian:
            defect = np.linalg.norm(self.matrix - self.matrix.conj().T) / scale
            if defect > 1e-10:
                raise OracleError(f"{self.label}: hermitian defect {defect:.2e}")
        if self.antisymmetric:
            defect = np.linalg.norm(self.matrix + self.matrix.conj().T) / scale
            if defect > 1e-10:
                raise OracleError(f"{self.label}: anti-hermitian defect {defect:.2e}")

    def quadratic_form(self, u: np.ndarray, cell_volume: float) -> complex:
        flat = u.ravel()
        return complex(cell_volume * np.vdot(flat, self.matrix @ flat))


def _check_cap(grid: GridSpec) -> None:
    if grid.size > GRID_CAP:
        raise OracleError(f"grid has {grid.size} unknowns, oracle cap is {GRID_CAP}")
    if grid.scheme != "spectral":
        raise OracleError("the dense oracle requires the spectral scheme "
                          "(exact summation by parts)")


def build_T(m: RadialMultiplier, pot: SampledPotential,
            form: str = "commutator") -> DenseOperator:
    """Dense multiplier operator.

    ``commutator`` builds T = -[H, phi] exactly; this is the operator whose
    sandwich reproduces theta'' along the flow.  ``sampled`` builds the
    symmetrized sampled version sum_j (phi_j G_j + G_j phi_j) from the
    closed-form gradient of phi; the two agree where the grid resolves phi.
    """
    grid = pot.grid
    _check_cap(grid)
    H = dense_hamiltonian(pot)
    if form == "commutator":
        phi = np.diag(m.phi(grid.radius).ravel().astype(complex))
        T = phi @ H - H @ phi
        return DenseOperator(T, label=f"T[{m.profile}]", antisymmetric=True)
    if form == "sampled":
        r = grid.radius
        dphi = m.dphi(r)
        T = np.zeros((grid.size, grid.size), dtype=complex)
        for j in range(grid.n):
            D = axis_derivative_matrix(grid, j)
            G = D - 1j * np.diag(pot.a[j].ravel())
            Pj = np.diag((dphi * grid.coords[j] / r).ravel().astype(complex))
            T += Pj @ G + G @ Pj
        return DenseOperator(T, label=f"T_sampled[{m.profile}]", antisymmetric=True)
    raise ValueError(f"unknown T form {form!r}")


def build_commutator(m: RadialMultiplier, pot: SampledPotential) -> DenseOperator:
    """[H, T] with T = -[H, phi]; hermitian by construction."""
    grid = pot.grid
    _check_cap(grid)
    H = dense_hamiltonian(pot)
    phi = np.diag(m.phi(grid.radius).ravel().astype(complex))
    T = phi @ H - H @ phi
    HT = H @ T - T @ H
    return DenseOperator(HT, label=f"[H,T][{m.profile}]", hermitian=True)


@dataclass
class IdentityReport:
    times: np.ndarray
    theta: np.ndarray
    d2_raw: np.ndarray           # central second difference at interior times
    quad_form: np.ndarray        # commutator sandwich at the same times
    extra: dict

    @property
    def residuals(self) -> np.ndarray:
        return self.d2_raw - self.quad_form

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.quad_form))) or 1.0

    @property
    def max_relative_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) / self.scale


def commutator_identity_check(f: Field, m: RadialMultiplier, pot: SampledPotential,
                              dt: float, nchecks: int = 5) -> IdentityReport:
    """Finite-difference theta'' along the exact Schrodinger flow vs <u,[H,T]u>."""
    grid = f.grid
    _check_cap(grid)
    engine = DistortedNormEngine(pot, dense_cap=GRID_CAP)
    phi = m.phi(grid.radius)
    HT = build_commutator(m, pot)
    vol = grid.cell_volume

    check_times = dt * 3 * (1 + np.arange(nchecks))
    times = np.concatenate([[t - dt, t, t + dt] for t in check_times])
    states = engine.schrodinger_flow(f, times)
    theta = np.array([vol * float(np.sum(phi * np.abs(u) ** 2)) for u in states])
    d2 = np.empty(nchecks)
    qf = np.empty(nchecks)
    for i in range(nchecks):
        tm, t0, tp = theta[3 * i: 3 * i + 3]
        d2[i] = (tm - 2.0 * t0 + tp) / dt**2
        qf[i] = HT.quadratic_form(states[3 * i + 1], vol).real
    im_defect = max(
        abs(HT.quadratic_form(states[3 * i + 1], vol).imag) for i in range(nchecks))
    return IdentityReport(times=check_times, theta=theta[1::3], d2_raw=d2,
                          quad_form=qf, extra={"imag_defect": im_defect, "dt": dt})


def wave_identity_check(state: WaveState, m: RadialMultiplier,
                        psi: PlateauWeight | None, pot: SampledPotential,
                        dt: float, nchecks: int = 5) -> IdentityReport:
    """theta_W'' vs (1/2)<u,[H,T]u> + plateau terms, all dense.

    Also verifies Re<u_t, T u_t> = 0 (anti-symmetry) and the intermediate
    identity d/dt Re<u_t, T u> = -(1/2) <u, [H,T] u>.
    """
    grid = state.grid
    _check_cap(grid)
    engine = DistortedNormEngine(pot, dense_cap=GRID_CAP)
    vol = grid.cell_volume
    size = grid.size

    H = dense_hamiltonian(pot)
    Phi = np.diag(m.phi(grid.radius).ravel().astype(complex))
    T = Phi @ H - H @ Phi
    HT = DenseOperator(H @ T - T @ H, label="[H,T]", hermitian=True)
    psi_flat = (psi.sample_on_grid(grid) if psi is not None else np.zeros(grid.shape)).ravel()
    v_flat = pot.v.ravel()

    Gmats = []
    Cmats = []
    for j in range(grid.n):
        D = axis_derivative_matrix(grid, j)
        G = D - 1j * np.diag(pot.a[j].ravel())
        Gmats.append(G)
        Cmats.append(D @ np.diag(m.phi(grid.radius).ravel()) -
                     np.diag(m.phi(grid.radius).ravel()) @ D)
    Lam = sum(G @ C - C @ G for G, C in zip(Gmats, Cmats))
    Dmats = [axis_derivative_matrix(grid, j) for j in range(grid.n)]

    def theta_W(u: np.ndarray, ut: np.ndarray) -> float:
        val = vol * np.vdot(ut, Phi @ ut).real
        for G in Gmats:
            gu = G @ u
            val += vol * np.vdot(gu, m.phi(grid.radius).ravel() * gu).real
        val -= 0.5 * vol * np.vdot(u, Lam @ u).real
        val += vol * np.vdot(u, (m.phi(grid.radius).ravel() * v_flat) * u).real
        val += vol * np.vdot(u, psi_flat * u).real
        return float(val)

    def rhs(u: np.ndarray, ut: np.ndarray) -> float:
        val = 0.5 * vol * np.vdot(u, HT.matrix @ u).real
        val += 2.0 * vol * np.vdot(ut, psi_flat * ut).real
        for G, D in zip(Gmats, Dmats):
            gu = G @ u
            val += -2.0 * vol * np.vdot(gu, psi_flat * gu).real
            val += -2.0 * vol * np.vdot(gu, D @ (psi_flat * u) - psi_flat * (D @ u)).real
        val += -2.0 * vol * np.vdot(u, (v_flat * psi_flat) * u).real
        return float(val)

    check_times = dt * 3 * (1 + np.arange(nchecks))
    times = np.concatenate([[t - dt, t, t + dt] for t in check_times])
    pairs = engine.wave_flow(state.u, state.ut, times)
    flat_pairs = [(u.ravel(), ut.ravel()) for u, ut in pairs]
    thetas = np.array([theta_W(u, ut) for u, ut in flat_pairs])
    d2 = np.empty(nchecks)
    qf = np.empty(nchecks)
    eq3_res = []
    antisym = []
    for i in range(nchecks):
        tm, t0, tp = thetas[3 * i: 3 * i + 3]
        d2[i] = (tm - 2.0 * t0 + tp) / dt**2
        u0, ut0 = flat_pairs[3 * i + 1]
        qf[i] = rhs(u0, ut0)
        um, utm = flat_pairs[3 * i]
        up, utp = flat_pairs[3 * i + 2]
        ddt = (np.vdot(utp, T @ up).real - np.vdot(utm, T @ um).real) * vol / (2.0 * dt)
        half = 0.5 * vol * np.vdot(u0, HT.matrix @ u0).real
        eq3_res.append(abs(ddt + half))
        norm2 = vol * float(np.vdot(ut0, ut0).real)
        antisym.append(abs(vol * np.vdot(ut0, T @ ut0).real) / max(norm2, 1e-300))
    return IdentityReport(
        times=check_times, theta=thetas[1::3], d2_raw=d2, quad_form=qf,
        extra={
            "dt": dt,
            "antisym_ut_T_ut": float(max(antisym)),
            "eq_intermediate_max": float(max(eq3_res)),
            "eq_intermediate_scale": float(np.max(np.abs(qf))) or 1.0,
        },
    )


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------


def generate_fixtures(path=None, verbose: bool = False) -> dict:
    """Machine-readable derived values consumed by the test suites.

    Everything here is computed by quadrature / dense linear algebra that is
    independent of the code paths under test.
    """
    from scipy.integrate import quad

    from .decay import RadialQuadrature, certify
    from .functionals import CommutatorKit
    from .potentials import make_azimuthal_point

    fixtures: dict = {}

    # weighted radial norm of min(1, rho^-5) with weight rho^3: analytic 5/4
    val, _ = quad(lambda r: r**3 * min(1.0, r**-5.0 if r > 0 else 1.0), 0.0, 200.0,
                  points=[1.0], limit=200)
    fixtures["triple_norm_min1_rm5_alpha3"] = val

    # 1-D radial quadrature oracle for the near-extremal Hardy family (n=3, A=0):
    # f = (rho^2 + rho0^2)^((-1/2 + delta)/2) * exp(-(rho/w)^4)
    def hardy_1d(delta: float, rho0: float, w: float) -> float:
        def f(r):
            return (r * r + rho0 * rho0) ** ((-0.5 + delta) / 2.0) * np.exp(-((r / w) ** 4))

        def fp(r):
            core = (r * r + rho0 * rho0) ** ((-0.5 + delta) / 2.0)
            dcore = (-0.5 + delta) * r * (r * r + rho0 * rho0) ** ((-0.5 + delta) / 2.0 - 1.0)
            cut = np.exp(-((r / w) ** 4))
            dcut = -4.0 * r**3 / w**4 * cut
            return dcore * cut + core * dcut

        num, _ = quad(lambda r: f(r) ** 2, 0.0, 6.0 * w, limit=400)
        den, _ = quad(lambda r: fp(r) ** 2 * r * r, 0.0, 6.0 * w, limit=400)
        return num / den

    hardy_cases = []
    for delta in (0.5, 0.3, 0.15):
        hardy_cases.append({"delta": delta, "rho0": 0.4, "width": 2.0,
                            "ratio": hardy_1d(delta, 0.4, 2.0)})
    fixtures["hardy_near_extremal"] = hardy_cases

    # certificate flip threshold for the mollified azimuthal potential:
    # the measured norm scales as lam^2 * c, so the flip sits at sqrt(1/(2c))
    quadr = RadialQuadrature(r_min=5e-3, r_max=32.0, points=600, sphere_count=128)
    base = certify(make_azimuthal_point(eps=0.5), 3, "small-3d-schrodinger", quadr)
    c = base.value
    lam_star = float(np.sqrt(0.5 / c))
    fixtures["azimuthal_mollified_flip"] = {
        "eps": 0.5, "quad_r_min": 5e-3, "quad_r_max": 32.0, "quad_points": 600,
        "sphere_count": 128, "base_value": c, "lam_star": lam_star,
    }

    # discrete identity sanity: assembled terms vs dense commutator sandwich
    grid = GridSpec(n=3, npts=6, half_width=2.5)
    pot = SampledPotential.from_spec(make_azimuthal_point(eps=0.8, lam=0.7), grid)
    from .multipliers import make_morawetz_3d

    m = make_morawetz_3d(0.5, 1.0)
    kit = CommutatorKit(pot, m)
    rng = np.random.default_rng(2024)
    u = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    terms = kit.schrodinger_rhs_terms(u)
    HT = build_commutator(m, pot)
    sandwich = HT.quadratic_form(u, grid.cell_volume).real
    fixtures["identity_seed2024"] = {
        "terms": {k: float(v) for k, v in terms.items()},
        "sandwich": float(sandwich),
        "rel_gap": float(abs(sum(terms.values()) - sandwich) / abs(sandwich)),
    }

    if path is not None:
        with open(path, "w") as fh:
            json.dump(fixtures, fh, indent=2, sort_keys=True)
    if verbose:
        print(json.dumps(fixtures, indent=2, sort_keys=True))
    return fixtures
