"""Spectral calculus for the distorted Sobolev scale ||H^(s/2) f||.

Small grids (up to a configurable unknown cap) build the dense hermitian
matrix of H once, eigendecompose it and evaluate arbitrary fractional powers
exactly in the eigenbasis.  Larger grids fall back to a Chebyshev polynomial
of the matvec with a certified sup-norm residual; the free Hamiltonian gets an
exact Fourier-multiplier path at any size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .grids import Field, GridSpec
from .operators import SampledPotential, _covariant_H

__all__ = [
    "DistortedNormEngine",
    "SpectralError",
    "axis_derivative_matrix",
    "dense_hamiltonian",
]

DENSE_CAP_DEFAULT = 4096


class SpectralError(ArithmeticError):
    """Fractional power undefined (negative spectrum beyond tolerance)."""


def axis_derivative_matrix(grid: GridSpec, axis: int) -> np.ndarray:
    """Dense matrix of the grid derivative along one axis (size^2 entries)."""
    N = grid.npts
    if grid.scheme == "spectral":
        eye = np.eye(N)
        D1 = np.real(np.fft.ifft(1j * grid.wavenumbers[:, None] * np.fft.fft(eye, axis=0), axis=0))
    else:
        h = grid.cell
        D1 = np.zeros((N, N))
        for shift, w in ((1, 8.0), (2, -1.0)):
            D1 += w * (np.roll(np.eye(N), -shift, axis=1) - np.roll(np.eye(N), shift, axis=1))
        D1 /= 12.0 * h
    mats = []
    for j in range(grid.n):
        pieces = [np.eye(N)] * grid.n
        pieces[j] = D1
        M = pieces[0]
        for p in pieces[1:]:
            M = np.kron(M, p)
        mats.append(M)
    return mats[axis]


def dense_hamiltonian(pot: SampledPotential) -> np.ndarray:
    """Dense matrix of the covariant-form H on the flattened grid.

    Built by applying H to all coordinate basis vectors at once (batched FFT
    over a (size, N, ..., N) stack); identical to the matrix-free operator by
    construction.
    """
    grid = pot.grid
    size = grid.size
    if grid.scheme != "spectral":
        H = np.zeros((size, size), dtype=complex)
        for j in range(grid.n):
            D = axis_derivative_matrix(grid, j)
            G = D - 1j * np.diag(pot.a[j].ravel())
            H -= G @ G
        H += np.diag(pot.v.ravel().astype(complex))
        return H

    batch = np.eye(size, dtype=complex).reshape((size,) + grid.shape)

    def deriv(arr, j):
        ax = j + 1
        fh = np.fft.fft(arr, axis=ax)
        shape = [1] * (grid.n + 1)
        shape[ax] = grid.npts
        fh *= 1j * grid.wavenumbers.reshape(shape)
        return np.fft.ifft(fh, axis=ax)

    out = np.zeros_like(batch)
    for j in range(grid.n):
        gj = deriv(batch, j) - 1j * pot.a[j][None] * batch
        out -= deriv(gj, j) - 1j * pot.a[j][None] * gj
    out += (pot.v[None]) * batch
    # rows of the stack are H applied to basis vectors -> columns of H
    return out.reshape(size, size).T


@dataclass
class DistortedNormEngine:
    """Eigendecomposition-backed evaluator of H^(s/2) and propagator functions."""

    pot: SampledPotential
    dense_cap: int = DENSE_CAP_DEFAULT
    neg_tol: float = 1e-9
    cheb_degree: int = 600
    cheb_rtol: float = 5e-3
    cheb_domain: float | None = None   # fix [0, cheb_domain] across engines
    prefer: str = "auto"               # 'auto' | 'chebyshev' (force the iterative path)
    _matrix: np.ndarray | None = field(default=None, repr=False)
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def grid(self) -> GridSpec:
        return self.pot.grid

    @property
    def is_dense(self) -> bool:
        return self.grid.size <= self.dense_cap

    @property
    def is_free(self) -> bool:
        return self.pot.is_free

    def matvec(self, values: np.ndarray) -> np.ndarray:
        return _covariant_H(values, self.pot)

    # -- dense path -----------------------------------------------------------

    def matrix(self) -> np.ndarray:
        if not self.is_dense:
            raise SpectralError(
                f"grid has {self.grid.size} unknowns > dense cap {self.dense_cap}"
            )
        if self._matrix is None:
            self._matrix = dense_hamiltonian(self.pot)
        return self._matrix

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            H = self.matrix()
            herm_defect = np.linalg.norm(H - H.conj().T) / max(np.linalg.norm(H), 1e-300)
            if herm_defect > 1e-10:
                raise SpectralError(f"H not hermitian: relative defect {herm_defect:.2e}")
            w, Q = scipy.linalg.eigh(H)
            self._eig = (w, Q)
        return self._eig

    def _eig_checked(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        w, Q = self.eigensystem()
        scale = max(abs(w[0]), abs(w[-1]), 1.0)
        if s != int(s) or s < 0:
            if w[0] < -self.neg_tol * scale:
                raise SpectralError(
                    f"negative eigenvalue {w[0]:.3e} beyond tolerance; "
                    f"H^{s / 2} undefined"
                )
        return np.maximum(w, 0.0) if (s != int(s) or s < 0) else w, Q

    # -- norms ----------------------------------------------------------------

    def norm(self, f: Field, s: float) -> float:
        """||H^(s/2) f||_{L^2} (the homogeneous distorted norm)."""
        if s == 0.0:
            return f.norm()
        if self.prefer == "chebyshev":
            return self._chebyshev_norm(f, s)
        if self.is_free and self.grid.scheme == "spectral":
            fh = np.fft.fftn(f.values)
            mult = self.grid.k_squared ** (s / 2.0) if s > 0 else _neg_power(self.grid.k_squared, s)
            val = np.sum(np.abs(mult * fh) ** 2) / self.grid.size
            return float(np.sqrt(self.grid.cell_volume * val))
        if self.is_dense:
            w, Q = self._eig_checked(s)
            c = Q.conj().T @ f.values.ravel()
            return float(np.sqrt(self.grid.cell_volume * np.sum(w**s * np.abs(c) ** 2)))
        return self._chebyshev_norm(f, s)

    def sobolev_norm(self, f: Field, s: float) -> float:
        """Inhomogeneous norm ||f||_{L^2} + ||H^(s/2) f||_{L^2}."""
        return f.norm() + self.norm(f, s)

    # -- propagator functions ---------------------------------------------------

    def schrodinger_flow(self, f: Field, times: np.ndarray) -> list[np.ndarray]:
        """States exp(-i t H) f at the given times (dense path)."""
        w, Q = self.eigensystem()
        c = Q.conj().T @ f.values.ravel()
        return [(Q @ (np.exp(-1j * w * t) * c)).reshape(self.grid.shape) for t in times]

    def wave_flow(self, f: Field, g: Field, times: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """(u, u_t) of the wave flow via cos(t sqrt(H)), sin(t sqrt(H))/sqrt(H)."""
        w, Q = self._eig_checked(0.5)
        sq = np.sqrt(w)
        cf = Q.conj().T @ f.values.ravel()
        cg = Q.conj().T @ g.values.ravel()
        out = []
        for t in times:
            cos_t = np.cos(t * sq)
            sinc_t = t * np.sinc(t * sq / np.pi)  # sin(t w)/w with the t-limit at w=0
            u = Q @ (cos_t * cf + sinc_t * cg)
            ut = Q @ (-sq * np.sin(t * sq) * cf + cos_t * cg)
            out.append((u.reshape(self.grid.shape), ut.reshape(self.grid.shape)))
        return out

    def wave_energy(self, u: Field, ut: Field) -> float:
        """E = 1/2 ||u_t||^2 + 1/2 ||H^(1/2) u||^2."""
        return 0.5 * ut.norm() ** 2 + 0.5 * self.norm(u, 1.0) ** 2

    # -- iterative fallback -----------------------------------------------------

    def _lambda_max(self, iters: int = 60, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        v = rng.normal(size=self.grid.shape) + 1j * rng.normal(size=self.grid.shape)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(iters):
            w = self.matvec(v)
            lam = float(np.real(np.vdot(v, w)))
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            v = w / nw
        return 1.1 * abs(lam)

    def _chebyshev_norm(self, f: Field, s: float) -> float:
        """||p(H) f|| with p ~ t^(s/2) on [0, lam_max]; residual certified."""
        from numpy.polynomial import chebyshev as C

        degree, rtol = self.cheb_degree, self.cheb_rtol
        if s < 0:
            raise SpectralError("iterative path supports s >= 0 only")
        lam_max = self.cheb_domain if self.cheb_domain else self._lambda_max()
        p = C.Chebyshev.interpolate(lambda t: np.maximum(t, 0.0) ** (s / 2.0),
                                    degree, domain=[0.0, lam_max])
        probe = np.linspace(0.0, lam_max, 4001)
        err = float(np.max(np.abs(p(probe) - probe ** (s / 2.0))))
        # Clenshaw recurrence on the shifted operator
        a, b = 0.0, lam_max
        alpha, beta = 2.0 / (b - a), -(b + a) / (b - a)
        coeffs = p.coef
        bk1 = np.zeros_like(f.values)
        bk2 = np.zeros_like(f.values)
        for c in coeffs[:0:-1]:
            bk = c * f.values + 2.0 * (alpha * self.matvec(bk1) + beta * bk1) - bk2
            bk2, bk1 = bk1, bk
        out = coeffs[0] * f.values + (alpha * self.matvec(bk1) + beta * bk1) - bk2
        val = float(np.sqrt(self.grid.cell_volume * np.sum(np.abs(out) ** 2)))
        bound = err * f.norm()
        if val > 0 and bound / max(val, 1e-300) > rtol:
            raise SpectralError(
                f"chebyshev residual bound {bound:.3e} exceeds rtol*value "
                f"({rtol:.1e} * {val:.3e}); raise the degree or use the dense path"
            )
        return val


def _neg_power(k2: np.ndarray, s: float) -> np.ndarray:
    out = np.zeros_like(k2)
    nz = k2 > 0
    out[nz] = k2[nz] ** (s / 2.0)
    return out
