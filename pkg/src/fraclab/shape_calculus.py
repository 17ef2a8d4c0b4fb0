"""Boundary densities, splitting matrices and the Pohozaev check.

Slopes are derivatives of λ (not of 1/λ) with L²-orthonormal cluster
vectors. For a domain field ψ the boundary route is

    M_ij = -Γ(1+s)² ∮ (φ_i/δ^s)(φ_j/δ^s) ψ·N dσ,

for a potential a + t·b it is ∫ b φ_i φ_j and for a weight α + t·β the
slope matrix is -λ₀ ∫ β φ_i φ_j. The volumetric route projects the pencil
derivative (derivative kernel and Jacobian-weighted mass) on the cluster.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
import numpy as np
from scipy import special
from scipy.spatial import cKDTree

from .discretization.grid import (Grid, assemble_derivative_kernel, assemble_mass_derivative,
                                  assemble_transformed_form)
from .discretization.operator import DiscreteOperator, evaluate_scalar
from .discretization.singular import derivative_kernel_factor, pair_integral_1d
from .discretization.spectral import SpectralBasis
from .errors import ConfigError, FitUnstable, NonPositiveWeight
from .geometry import BoundaryQuadrature, Interval, apply_perturbation
from .kernel import frac_constant, trace_constant
from .spectrum import Cluster, Spectrum, cluster, default_tolerance, solve, track

# normal-ray samples for the 2-D density, in units of h
RAY_TAUS = np.arange(1.0, 4.75, 0.5)
RAY_DEGREE = 3
MLS_RADIUS = 2.5
MLS_NEIGHBOURS = 24
MLS_MIN_DEPTH = 0.5
FIT_TOLERANCE = 0.2
BOUNDARY_NODES_2D = 256


@dataclass(frozen=True, eq=False)
class BoundaryDensity:
    values: np.ndarray                 # (m,) or (m, K) for several functions
    quadrature: BoundaryQuadrature
    diagnostics: dict = field(default_factory=dict)

    def integrate(self, weight: np.ndarray | None = None, i: int = 0, j: int | None = None) -> float:
        """∮ d_i d_j · weight dσ."""
        V = self.values.reshape(len(self.values), -1)
        j = i if j is None else j
        w = self.quadrature.weights if weight is None else self.quadrature.weights * weight
        return float(np.sum(w * V[:, i] * V[:, j]))


def default_boundary(op: DiscreteOperator) -> BoundaryQuadrature:
    d = op.domain
    return d.boundary_quadrature() if isinstance(d, Interval) else d.boundary_quadrature(BOUNDARY_NODES_2D)


def _as_matrix(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return phi[:, None] if phi.ndim == 1 else phi


def boundary_density(phi, op: DiscreteOperator, bq: BoundaryQuadrature | None = None,
                     eigenvalues=None) -> BoundaryDensity:
    """φ/δ^s on the boundary nodes for one vector or the columns of a matrix.

    ``eigenvalues`` (one per column) enables the Green-function route for
    1-D eigenvectors.
    """
    bq = default_boundary(op) if bq is None else bq
    U = _as_matrix(phi)
    basis = op.basis
    if isinstance(basis, SpectralBasis):
        vals, diag = _spectral_density(op, U, bq, eigenvalues)
    elif isinstance(basis, Grid) and basis.dim == 1:
        if eigenvalues is not None and op.potential_values is None and op.weight_values is None:
            vals, diag = _grid1d_green_density(basis, U, bq, eigenvalues)
        else:
            vals, diag = _grid1d_density(basis, U, bq)
    elif isinstance(basis, Grid):
        vals, diag = _grid2d_density(basis, U, bq)
    else:
        raise ConfigError("unsupported basis for boundary densities")
    if np.ndim(phi) == 1:
        vals = vals[:, 0]
    return BoundaryDensity(values=vals, quadrature=bq, diagnostics=diag)


def _spectral_density(op: DiscreteOperator, U: np.ndarray, bq: BoundaryQuadrature, eigenvalues) -> tuple:
    """Endpoint densities of spectral functions.

    With eigenvalues, the density of the Green potential of λφ:

        φ/δ^s → L^s (κ/s) 2^s λ ∫ ω(η)^s φ(η) / |ζ - η| dη,  κ = 1/(4^s Γ(s)²),

    (Martin kernel of the interval), a weighted integral that converges much
    faster in N than the pointwise trace (2/L)^s p(±1) used otherwise.
    """
    basis: SpectralBasis = op.basis
    s, L, N = basis.s, basis.L, basis.N
    a, b = basis.domain.a, basis.domain.b
    out = np.empty((len(bq.nodes), U.shape[1]))
    green = eigenvalues is not None and op.potential_values is None and op.weight_values is None
    pm, pp = basis.endpoint_polys()
    kappa = 1.0 / (4 ** s * math.gamma(s) ** 2)
    for m, x in enumerate(bq.nodes[:, 0]):
        right = abs(x - b) < abs(x - a)
        if not green:
            out[m] = (2.0 / L) ** s * ((pp if right else pm) @ U)
            continue
        al, be = (2 * s - 1, 2 * s) if right else (2 * s, 2 * s - 1)
        eta, w = special.roots_jacobi(N + 8, al, be)
        out[m] = L ** s * (kappa / s) * 2 ** s * np.asarray(eigenvalues) * (w @ (basis.poly_matrix(eta) @ U))
    return out, {"method": "green" if green else "trace"}


def _ray_fit(taus: np.ndarray, R: np.ndarray, degree: int):
    """Polynomial LSQ in τ for each column block; returns (value at 0, rms residual)."""
    V = np.vander(taus, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, R.reshape(len(taus), -1), rcond=None)
    res = R.reshape(len(taus), -1) - V @ coef
    rms = np.sqrt(np.mean(res ** 2, axis=0))
    return coef[0], rms


def _green_weight_cells(lo: np.ndarray, hi: np.ndarray, s: float) -> np.ndarray:
    """∫ (1-η)^{2s-1} (1+η)^{2s} dη over [lo, hi] ⊂ [-1, 1]."""
    a, b = 2 * s + 1, 2 * s
    return 4 ** (2 * s) * special.beta(a, b) * (special.betainc(a, b, (1 + hi) / 2) - special.betainc(a, b, (1 + lo) / 2))


def _grid1d_green_density(grid: Grid, U: np.ndarray, bq: BoundaryQuadrature, eigenvalues) -> tuple:
    """The Green-route formula of _spectral_density applied to nodal values.

    p = φ/ω^s is taken constant on each cell and the singular weight is
    integrated exactly, so the boundary layer of the nodal values enters
    only through cells of weight O(h^{2s}).
    """
    s, h = grid.s, grid.h
    I = grid.domain
    L, c = I.half_length, float(I.center[0])
    eta = (grid.nodes[:, 0] - c) / L
    inside = (eta > -1) & (eta < 1)
    om = np.where(inside, 1 - eta ** 2, 1.0)
    P = np.where(inside[:, None], U / om[:, None] ** s, 0.0)
    lo = np.clip(eta - h / (2 * L), -1, 1)
    hi = np.clip(eta + h / (2 * L), -1, 1)
    kappa = 1.0 / (4 ** s * math.gamma(s) ** 2)
    out = np.empty((len(bq.nodes), U.shape[1]))
    for m, x in enumerate(bq.nodes[:, 0]):
        right = abs(x - I.b) < abs(x - I.a)
        w = _green_weight_cells(lo, hi, s) if right else _green_weight_cells(-hi, -lo, s)
        out[m] = L ** s * (kappa / s) * 2 ** s * np.asarray(eigenvalues) * (w @ P)
    return out, {"method": "green"}


def _grid1d_density(grid: Grid, U: np.ndarray, bq: BoundaryQuadrature):
    s, h = grid.s, grid.h
    x = grid.nodes[:, 0]
    out = np.empty((len(bq.nodes), U.shape[1]))
    worst = 0.0
    for m, e in enumerate(bq.nodes[:, 0]):
        tau = np.abs(x - e)
        sel = np.where((tau <= 4.5 * h + 1e-12) & (grid.dist >= 0.5 * h))[0]
        sel = sel[np.argsort(tau[sel])]
        if len(sel) < 2:
            raise FitUnstable("too few nodes near the endpoint for a density fit", {"endpoint": float(e)})
        r = U[sel] / tau[sel, None] ** s
        c0, rms = _ray_fit(tau[sel], r, min(RAY_DEGREE, len(sel) - 1))
        out[m] = c0
        worst = max(worst, float(np.max(rms, initial=0.0)))
    scale = float(np.max(np.abs(out), initial=0.0))
    return out, {"method": "endpoint ray fit", "max_residual": worst,
                 "relative_residual": worst / scale if scale > 0 else 0.0}


def _mls_rows(grid: Grid, samples: np.ndarray):
    """Rows ℓ with ℓ·r ≈ r(sample) by weighted quadratic least squares.

    Returns (neighbour indices, weights) into the nodes with δ ≥ 0.5h.
    """
    h = grid.h
    good = np.where(grid.dist >= MLS_MIN_DEPTH * h)[0]
    tree = cKDTree(grid.nodes[good])
    k = min(MLS_NEIGHBOURS, len(good))
    dist, idx = tree.query(samples, k=k)
    d = (grid.nodes[good][idx] - samples[:, None, :]) / h
    w = np.where(dist <= MLS_RADIUS * h, np.exp(-(dist / h) ** 2), 0.0)
    if np.any((w > 0).sum(1) < 6):
        raise FitUnstable("too few interior nodes near the boundary for the density fit", {"h": h})
    B = np.stack([np.ones_like(d[..., 0]), d[..., 0], d[..., 1], d[..., 0] ** 2,
                  d[..., 0] * d[..., 1], d[..., 1] ** 2], -1)
    BtW = np.swapaxes(B * w[..., None], 1, 2)
    G = BtW @ B
    e0 = np.zeros((len(samples), 6))
    e0[:, 0] = 1.0
    sol = np.linalg.solve(G, e0[..., None])[..., 0]
    rows = np.einsum("ma,mak->mk", sol, BtW)
    return good[idx], rows


def _grid2d_density(grid: Grid, U: np.ndarray, bq: BoundaryQuadrature):
    s, h = grid.s, grid.h
    taus = RAY_TAUS * h
    samples = (bq.nodes[None, :, :] - taus[:, None, None] * bq.normals[None, :, :]).reshape(-1, 2)
    nbr, rows = _mls_rows(grid, samples)
    ratio = np.zeros_like(U)
    inside = grid.dist > 0
    ratio[inside] = U[inside] / grid.dist[inside, None] ** s
    R = np.einsum("mk,mkj->mj", rows, ratio[nbr])            # (len(taus)*m, K)
    R = R.reshape(len(taus), len(bq.nodes), U.shape[1])
    c0, rms = _ray_fit(taus, R, RAY_DEGREE)
    vals = c0.reshape(len(bq.nodes), U.shape[1])
    rms = rms.reshape(len(bq.nodes), U.shape[1])
    scale = np.max(np.abs(vals), axis=0)
    rel = np.max(rms, axis=0) / np.where(scale > 0, scale, 1.0)
    diag = {"method": "normal ray fit", "taus_over_h": RAY_TAUS.tolist(), "degree": RAY_DEGREE,
            "relative_residual": float(np.max(rel)), "relative_residual_per_function": rel.tolist()}
    if np.max(rel) > FIT_TOLERANCE:
        raise FitUnstable(f"density fit residual {np.max(rel):.3g} exceeds {FIT_TOLERANCE}", diag)
    return vals, diag


# --------------------------------------------------------------------------
# Pohozaev
# --------------------------------------------------------------------------

def _position_dot_normal(op: DiscreteOperator, bq: BoundaryQuadrature) -> np.ndarray:
    c = np.asarray(op.domain.center, dtype=float).reshape(1, -1)
    return np.sum((bq.nodes - c) * bq.normals, axis=1)


def pohozaev_terms(spec: Spectrum, k: int, bq: BoundaryQuadrature | None = None) -> tuple[float, float]:
    """(Γ(1+s)² ∮ d² (x - x₀)·N dσ, 2sλ_k ∫ φ_k²) for the 1-based index k."""
    if not 1 <= k <= spec.count:
        raise ConfigError(f"k={k} outside the computed spectrum (1..{spec.count})")
    op = spec.operator
    bq = default_boundary(op) if bq is None else bq
    phi = spec.eigenvectors[:, k - 1]
    dens = boundary_density(phi, op, bq, eigenvalues=spec.eigenvalues[k - 1:k])
    lhs = trace_constant(op.s) * dens.integrate(_position_dot_normal(op, bq))
    norm2 = float(phi @ op.mass @ phi)
    return lhs, 2 * op.s * spec.eigenvalues[k - 1] * norm2


def pohozaev_residual(spec: Spectrum, k: int, bq: BoundaryQuadrature | None = None) -> float:
    lhs, rhs = pohozaev_terms(spec, k, bq)
    return abs(lhs - rhs) / abs(rhs)


# --------------------------------------------------------------------------
# splitting matrices
# --------------------------------------------------------------------------

def deviation(M: np.ndarray) -> float:
    """Frobenius distance to the nearest scalar matrix."""
    M = np.asarray(M, dtype=float)
    nu = M.shape[0]
    return float(np.linalg.norm(M - np.trace(M) / nu * np.eye(nu)))


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


@dataclass(frozen=True, eq=False)
class SplittingMatrix:
    mode: str                      # domain | potential | weight
    matrix: np.ndarray             # M
    slope_matrix: np.ndarray       # its eigenvalues are the λ-slopes
    cluster: Cluster
    normalization: str
    route: str = "boundary"
    diagnostics: dict = field(default_factory=dict)

    @property
    def deviation(self) -> float:
        return deviation(self.matrix)

    @property
    def slopes(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.slope_matrix)

    def to_dict(self) -> dict:
        lam0 = self.cluster.value
        return {
            "mode": self.mode,
            "route": self.route,
            "cluster": self.cluster.to_dict(),
            "normalization": self.normalization,
            "matrix": self.matrix.tolist(),
            "slope_matrix": self.slope_matrix.tolist(),
            "slopes": self.slopes.tolist(),
            "deviation": self.deviation,
            # form-orthonormal vectors and slopes of μ = 1/λ
            "energy_normalized_matrix": (self.matrix / lam0).tolist(),
            "mu_slopes": (-self.slopes / lam0 ** 2).tolist(),
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _cluster_vectors(cl: Cluster, spec: Spectrum) -> np.ndarray:
    if spec.normalization != "l2":
        raise ConfigError("splitting matrices need L2-orthonormal eigenvectors")
    if cl.stop > spec.count:
        raise ConfigError("cluster extends beyond the computed spectrum")
    return spec.eigenvectors[:, cl.start:cl.stop]


def splitting_matrix_domain(cl: Cluster, spec: Spectrum, psi, bq: BoundaryQuadrature | None = None) -> SplittingMatrix:
    op = spec.operator
    bq = default_boundary(op) if bq is None else bq
    V = _cluster_vectors(cl, spec)
    dens = boundary_density(V, op, bq, eigenvalues=spec.eigenvalues[cl.start:cl.stop])
    psin = np.sum(psi(bq.nodes) * bq.normals, axis=1)
    D = dens.values
    M = -trace_constant(op.s) * (D.T @ ((bq.weights * psin)[:, None] * D))
    M = _sym(M)
    return SplittingMatrix("domain", M, M, cl, "l2", "boundary",
                           {"field": psi.to_config(), "density": dens.diagnostics})


def splitting_matrix_potential(cl: Cluster, spec: Spectrum, b) -> SplittingMatrix:
    op = spec.operator
    V = _cluster_vectors(cl, spec)
    M = _sym(V.T @ op.field_matrix(evaluate_scalar(op, b)) @ V)
    return SplittingMatrix("potential", M, M, cl, "l2", "volume", {})


def splitting_matrix_weight(cl: Cluster, spec: Spectrum, beta) -> SplittingMatrix:
    op = spec.operator
    if op.weight_values is not None and np.min(op.weight_values) <= 0:
        raise NonPositiveWeight("current weight is not positive")
    V = _cluster_vectors(cl, spec)
    M = _sym(V.T @ op.field_matrix(evaluate_scalar(op, beta)) @ V)
    return SplittingMatrix("weight", M, -cl.value * M, cl, "l2", "volume", {})


def derivative_via_transformed_form(cl: Cluster, spec: Spectrum, psi, base: DiscreteOperator | None = None) -> SplittingMatrix:
    """Cluster projection of d/dt(A - λ₀ M) of the transformed pencil."""
    base = spec.operator if base is None else base
    V = _cluster_vectors(cl, spec)
    lam0 = cl.value
    if isinstance(base.basis, Grid):
        if psi.is_zero:
            M = np.zeros((cl.size, cl.size))
        else:
            dA = assemble_derivative_kernel(base, psi)
            dM = assemble_mass_derivative(base, psi)
            M = V.T @ (dA - lam0 * dM) @ V
    elif isinstance(base.basis, SpectralBasis):
        M = _spectral_volume_derivative(base, V, psi, lam0)
    else:
        raise ConfigError("unsupported basis for the volumetric derivative")
    M = _sym(M)
    return SplittingMatrix("domain", M, M, cl, "l2", "volume", {"field": psi.to_config()})


def _spectral_volume_derivative(op: DiscreteOperator, V: np.ndarray, psi, lam0: float) -> np.ndarray:
    basis: SpectralBasis = op.basis
    if psi.is_zero:
        return np.zeros((V.shape[1], V.shape[1]))
    a, b, s = basis.domain.a, basis.domain.b, basis.s

    def funcs(x, da, db):
        return basis.evaluate(V, x, da, db).reshape(len(x), -1)
    G = derivative_kernel_factor(psi, s, b - a)
    dA = 0.5 * frac_constant(1, s) * pair_integral_1d(funcs, s, a, b, G=G)
    xq, _, _ = op.quadrature()
    dM = op.integrate_products(psi.divergence(xq), V)
    return dA - lam0 * dM


def remix(spec: Spectrum, cl: Cluster, Q: np.ndarray) -> Spectrum:
    """Spectrum with the cluster's vectors rotated by the orthogonal matrix Q."""
    V = spec.eigenvectors.copy()
    V[:, cl.start:cl.stop] = V[:, cl.start:cl.stop] @ Q
    return replace(spec, eigenvectors=V)


# --------------------------------------------------------------------------
# Hadamard formula against finite differences of tracked eigenvalues
# --------------------------------------------------------------------------

# slopes below NOISE_FLOOR·λ_k are indistinguishable from zero
NOISE_FLOOR = {"spectral1d": 1e-8, "grid1d": 1e-4, "grid2d": 1e-3}
FD_STEPS = {"spectral": (1e-3, 2e-3), "grid": (1e-2, 2e-2)}


def _fd_pencils(problem, psi, params):
    if problem.method == "spectral":
        # the image of an interval is an interval, so re-assembly is exact
        return [problem.with_domain(apply_perturbation(problem.domain, psi.with_amplitude(psi.amplitude * t))).operator
                for t in params]
    base = problem.base_operator
    return [assemble_transformed_form(base, psi.with_amplitude(psi.amplitude * t)) for t in params]


def hadamard_check(problem, psi, indices, steps=None, rel_tol: float | None = None) -> list[dict]:
    """Boundary-route slopes against Richardson slopes of tracked eigenvalues.

    Tracking runs over ±steps without the unperturbed pencil, so degenerate
    clusters are entered from split neighbours and keep their analytic
    branches. Slopes inside a cluster are compared in ascending order.
    Where both slopes lie below NOISE_FLOOR·λ_k the error is absolute.
    """
    if problem.potential is not None or problem.weight is not None:
        raise ConfigError("hadamard checks run on the operator without potential or weight")
    indices = sorted(set(int(i) for i in indices))
    op = problem.operator
    tol = default_tolerance(op) if rel_tol is None else rel_tol
    spec = solve(op, min(max(indices) + 3, op.size))
    clusters = [cl for cl in cluster(spec, tol) if any(cl.start < i <= cl.stop for i in indices)]
    if not clusters or clusters[-1].stop >= spec.count or max(indices) > spec.count:
        raise ConfigError(f"indices: {max(indices)} too close to the discrete problem size {op.size}")
    formula = np.full(spec.count, np.nan)
    for cl in clusters:
        formula[cl.start:cl.stop] = splitting_matrix_domain(cl, spec, psi).slopes
    steps = FD_STEPS[problem.method] if steps is None else tuple(steps)
    params = np.array(sorted([-t for t in steps] + list(steps)))
    kk = clusters[-1].stop
    tr = track(_fd_pencils(problem, psi, params), kk, params, rel_tol=tol)
    fd = tr.slopes(0.0)
    for cl in clusters:
        fd[cl.start:cl.stop] = np.sort(fd[cl.start:cl.stop])
    rows = []
    for i in indices:
        a, b = float(formula[i - 1]), float(fd[i - 1])
        floor = NOISE_FLOOR.get(op.meta.kind, 1e-3) * abs(spec.eigenvalues[i - 1])
        if max(abs(a), abs(b)) < floor:
            err, kind = abs(a - b), "absolute"
        else:
            err, kind = abs(a - b) / abs(b), "relative"
        rows.append({"k": i, "lambda": float(spec.eigenvalues[i - 1]), "slope_formula": a, "slope_fd": b,
                     "rel_err": err, "error_kind": kind, "noise_floor": floor,
                     "min_overlap": float(tr.overlaps.min()) if tr.overlaps.size else 1.0})
    return rows
