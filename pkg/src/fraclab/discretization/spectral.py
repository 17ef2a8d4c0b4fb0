"""Weighted Jacobi spectral basis on an interval.

Basis functions u_n(x) = ω(ξ)^s P̂_n(ξ), ξ = (x - m)/L, ω = 1 - ξ², where
P̂_n are the Jacobi polynomials P_n^{(s,s)} normalized in L²((1-ξ²)^s).
On (-1, 1) they diagonalize the operator:

    (-Δ)^s u_n = λ_n P̂_n  inside the interval,  λ_n = Γ(2s + n + 1)/n!,

which is checked against the pointwise singular-integral oracle in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from ..errors import ConfigError
from ..geometry import Interval
from ..kernel import check_order
from .operator import BasisMeta, DiscreteOperator

EXTRA_QUAD = 32


def spectral_eigenvalue_factors(s: float, N: int) -> np.ndarray:
    n = np.arange(N)
    return np.exp(special.gammaln(2 * s + n + 1) - special.gammaln(n + 1))


def jacobi_norms(s: float, N: int) -> np.ndarray:
    """h_n = ∫ (1-ξ²)^s P_n^{(s,s)}(ξ)² dξ."""
    n = np.arange(N)
    logh = ((2 * s + 1) * np.log(2) + 2 * special.gammaln(n + s + 1)
            - np.log(2 * n + 2 * s + 1) - special.gammaln(n + 1) - special.gammaln(n + 2 * s + 1))
    return np.exp(logh)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    domain: Interval
    s: float
    N: int

    @property
    def center(self) -> float:
        return float(self.domain.center[0])

    @property
    def L(self) -> float:
        return self.domain.half_length

    def to_ref(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.L

    @cached_property
    def _inv_sqrt_h(self):
        return 1.0 / np.sqrt(jacobi_norms(self.s, self.N))

    def poly_matrix(self, xi) -> np.ndarray:
        """P̂_n(ξ) for n < N, shape (len(ξ), N)."""
        xi = np.asarray(xi, dtype=float).reshape(-1)
        n = np.arange(self.N)
        P = special.eval_jacobi(n[None, :], self.s, self.s, xi[:, None])
        return P * self._inv_sqrt_h[None, :]

    def poly(self, coeffs, xi) -> np.ndarray:
        return self.poly_matrix(xi) @ np.asarray(coeffs)

    def evaluate(self, coeffs, x, dist_a=None, dist_b=None) -> np.ndarray:
        """u(x), zero outside. ``dist_a = x - a`` and ``dist_b = b - x`` may be
        supplied to avoid cancellation near the endpoints."""
        x = np.asarray(x, dtype=float).reshape(-1)
        da = x - self.domain.a if dist_a is None else np.asarray(dist_a, dtype=float).reshape(-1)
        db = self.domain.b - x if dist_b is None else np.asarray(dist_b, dtype=float).reshape(-1)
        inside = (da > 0) & (db > 0)
        w = np.where(inside, np.clip(da * db, 0, None) / self.L ** 2, 0.0) ** self.s
        return w[:, None] * self.poly(coeffs, self.to_ref(x)).reshape(len(x), -1) if np.ndim(coeffs) > 1 \
            else w * self.poly(coeffs, self.to_ref(x))

    def endpoint_polys(self) -> tuple[np.ndarray, np.ndarray]:
        """P̂_n(-1), P̂_n(+1)."""
        n = np.arange(self.N)
        p1 = np.exp(special.gammaln(n + self.s + 1) - special.gammaln(n + 1) - special.gammaln(self.s + 1))
        return p1 * (-1.0) ** n * self._inv_sqrt_h, p1 * self._inv_sqrt_h

    @cached_property
    def _quad(self):
        xi, w = special.roots_jacobi(self.N + EXTRA_QUAD, 2 * self.s, 2 * self.s)
        x = self.center + self.L * xi
        return x[:, None], self.L * w, self.poly_matrix(xi), xi

    def quadrature(self):
        """Gauss-Jacobi points with weight ω^{2s}: ∫ f u v = Σ w f (B u)(B v)."""
        x, w, B, _ = self._quad
        return x, w, B

    def values(self, coeffs) -> np.ndarray:
        _, _, B, xi = self._quad
        return ((1 - xi ** 2) ** self.s)[:, None].reshape(-1, *([1] * (np.ndim(coeffs) - 1))) * (B @ coeffs)


def assemble_1d_spectral(s: float, N: int, interval: Interval) -> DiscreteOperator:
    """Weighted Jacobi basis; diagonal stiffness L^{1-2s} λ_n, Gauss-Jacobi mass."""
    s = check_order(s)
    if N < 2:
        raise ConfigError(f"N: basis size must be >= 2, got {N}")
    if not isinstance(interval, Interval):
        raise ConfigError("spectral basis needs an interval domain")
    basis = SpectralBasis(interval, s, int(N))
    L = basis.L
    A = np.diag(L ** (1 - 2 * s) * spectral_eigenvalue_factors(s, N))
    xi, w = special.roots_jacobi(N + 2, 2 * s, 2 * s)
    P = basis.poly_matrix(xi)
    M = L * (P.T @ (w[:, None] * P))
    M = 0.5 * (M + M.T)
    meta = BasisMeta(kind="spectral1d", s=s, N=int(N), domain=interval.to_config())
    return DiscreteOperator(stiffness=A, mass=M, meta=meta, basis=basis)
