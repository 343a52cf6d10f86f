"""Uniform radial discretization of the energy on a truncated domain.

Radial functions live on the nodes r_i = i h, i = 0..M, with a Dirichlet
zero at r_M. Volume integrals use the trapezoid rule against the measure
area(S^{N-1}) r^{N-1} dr; gradient integrals use midpoint weights per cell
so that the discrete gradient returned by `DiscreteEnergy.gradient` is the
exact derivative of `DiscreteEnergy.value`.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .penalization import PenalizedNonlinearity
from .problem_model import ProblemSpec, sphere_area


@dataclass(frozen=True)
class RadialGrid:
    """Uniform node layout with volume and per-cell gradient weights."""

    dim: int
    r_max: float
    cells: int
    r: np.ndarray = field(repr=False)
    h: float = 0.0
    vol_w: np.ndarray = field(repr=False, default=None)
    mid_w: np.ndarray = field(repr=False, default=None)

    def integrate(self, values: np.ndarray) -> float:
        """Volume integral of nodal values over the truncated domain."""
        return float(self.vol_w @ np.asarray(values, dtype=float))

    def lp_norm(self, u: np.ndarray, p: float) -> float:
        """L^p norm against the volume measure; p = inf gives the sup norm."""
        u = np.asarray(u, dtype=float)
        if math.isinf(p):
            return float(np.max(np.abs(u)))
        if p <= 0:
            raise ValueError("need p > 0")
        peak = float(np.max(np.abs(u)))
        if peak == 0.0:
            return 0.0
        # scale out the peak so u^p cannot overflow for large p
        scaled = np.abs(u) / peak
        return peak * float(self.vol_w @ scaled**p) ** (1.0 / p)


def build_grid(dim: int, r_max: float, cells: int) -> RadialGrid:
    if cells < 4:
        raise ValueError("need at least 4 cells")
    if r_max <= 0:
        raise ValueError("need r_max > 0")
    r = np.linspace(0.0, r_max, cells + 1)
    h = r_max / cells
    area = sphere_area(dim)
    vol_w = area * r ** (dim - 1) * h
    vol_w[0] *= 0.5
    vol_w[-1] *= 0.5
    r_mid = 0.5 * (r[:-1] + r[1:])
    mid_w = area * r_mid ** (dim - 1) * h
    return RadialGrid(dim=dim, r_max=r_max, cells=cells, r=r, h=h,
                      vol_w=vol_w, mid_w=mid_w)


class DiscreteEnergy:
    """Energy, exact discrete gradient, and Riesz preconditioner on a grid."""

    def __init__(self, spec: ProblemSpec, grid: RadialGrid):
        self.spec = spec
        self.grid = grid
        self.v_nodes = np.asarray(spec.V(grid.r), dtype=float)
        self.pen = PenalizedNonlinearity(spec)
        self.gpen = self.pen.on_grid(grid.r)
        self._chol = None

    # -- quadratic part -------------------------------------------------------

    def seminorm_sq(self, u: np.ndarray) -> float:
        """Integral of |grad u|^2 (midpoint weights per cell)."""
        du = np.diff(np.asarray(u, dtype=float)) / self.grid.h
        return float(self.grid.mid_w @ du**2)

    def norm(self, u: np.ndarray) -> float:
        """Energy norm sqrt(int |grad u|^2 + V u^2).

        Raises ValueError when the quadratic form is negative beyond
        rounding, which means u leans on the negative part of V too hard
        for the norm to exist.
        """
        grad_sq = self.seminorm_sq(u)
        u = np.asarray(u, dtype=float)
        mass = float(self.grid.vol_w @ (self.v_nodes * u**2))
        sq = grad_sq + mass
        if sq < -1e-12 * max(1.0, grad_sq):
            raise ValueError("quadratic form is negative; no energy norm")
        return math.sqrt(max(sq, 0.0))

    # -- energy and gradient ----------------------------------------------------

    def value(self, u: np.ndarray) -> float:
        """Discrete energy: half the quadratic form minus the reaction term."""
        u = np.asarray(u, dtype=float)
        quad = self.seminorm_sq(u) + float(self.grid.vol_w @ (self.v_nodes * u**2))
        reaction = float(self.grid.vol_w @ self.gpen.G(u))
        return 0.5 * quad - reaction

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """Exact derivative of `value` in the free nodes (zero at the boundary)."""
        u = np.asarray(u, dtype=float)
        du = np.diff(u) / self.grid.h
        flux = self.grid.mid_w * du / self.grid.h
        out = np.zeros_like(u)
        out[:-1] -= flux
        out[1:] += flux
        out += self.grid.vol_w * (self.v_nodes * u - self.gpen.g(u))
        out[-1] = 0.0
        return out

    def hessian_diags(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Tridiagonal second derivative of `value` on the free nodes.

        Returns (diag, super) arrays of lengths (cells, cells - 1).
        """
        n = self.grid.cells
        h2 = self.grid.h**2
        mw = self.grid.mid_w
        diag = np.empty(n)
        diag[0] = mw[0] / h2
        diag[1:] = (mw[:-1] + mw[1:])[: n - 1] / h2
        diag += self.grid.vol_w[:n] * (self.v_nodes[:n]
                                       - self.gpen.g_prime(u)[:n])
        sup = -mw[: n - 1] / h2
        return diag, sup

    # -- Riesz preconditioner ---------------------------------------------------

    def _factor(self):
        if self._chol is None:
            n = self.grid.cells
            h2 = self.grid.h**2
            mw = self.grid.mid_w
            diag = np.empty(n)
            diag[0] = mw[0] / h2
            diag[1:] = (mw[:-1] + mw[1:])[: n - 1] / h2
            diag += self.grid.vol_w[:n] * (np.maximum(self.v_nodes[:n], 0.0)
                                           + 1.0)
            ab = np.zeros((2, n))
            ab[0, 1:] = -mw[: n - 1] / h2
            ab[1, :] = diag
            self._chol = linalg.cholesky_banded(ab, lower=False)
        return self._chol

    def riesz(self, rho: np.ndarray) -> np.ndarray:
        """Direction d with <d, w>_B = rho . w for the positive form B.

        B adds 1 to the positive part of V so it stays definite even for
        sign-changing potentials.
        """
        rho = np.asarray(rho, dtype=float)
        n = self.grid.cells
        d = np.zeros_like(rho)
        d[:n] = linalg.cho_solve_banded((self._factor(), False), rho[:n])
        return d

    def residual_norm(self, rho: np.ndarray) -> float:
        """Dual norm of the gradient in the B inner product."""
        d = self.riesz(rho)
        val = float(np.asarray(rho, dtype=float) @ d)
        return math.sqrt(max(val, 0.0))
