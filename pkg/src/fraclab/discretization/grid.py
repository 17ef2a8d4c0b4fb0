"""Lattice discretization of the fractional Dirichlet form in 1-D and 2-D.

Unknowns are values at lattice points inside Ω. Each node owns its cell
cut by Ω (volume v_i); u is piecewise constant on cells and zero on Ωᶜ.
The quadratic form

    E(u, u) = (C/2) ∫∫ (u(x) - u(y))² |x - y|^{-n-2s}

splits into
  * far field: midpoint weights v_i v_j |x_i - x_j|^{-n-2s} between nodes,
  * zero cells: lattice cells outside the node set that still meet Ω,
  * exterior: v_i T_Ω(x_i) with T_Ω(p) = ∫_{Ωᶜ} |y - p|^{-n-2s} dy, evaluated
    exactly as the boundary integral (1/2s) ∮ (y - p)·N |y - p|^{-n-2s} dσ,
  * near field: the self-cell integral with a linear model of u, giving
    (C/2) v_i ∇u·Q ∇u, Q = ∫_cell z zᵀ |z|^{-n-2s} dz, and ∇u from one-sided
    differences averaged over the 2^n quadrants. Across the boundary the
    zero cell's share is a ghost copy of node i's cell; this compensates the
    midpoint exterior term, whose cell average diverges for s ≥ 1/2.

The transformed form of a field ψ is assembled on the same nodes with
x ↦ x + ψ(x), Jacobian factors and the exterior of (I + ψ)Ω.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import shapely

from ..errors import ConfigError, GridTooCoarse, TooLarge, TooManyNodes
from ..geometry import Interval, StarDomain, closest_on_curve
from ..kernel import check_order, frac_constant
from ..quadrature import gauss_legendre, graded_panels
from .operator import BasisMeta, DiscreteOperator

MIN_NODES = 8
MAX_NODES = 4000
POLYGON_VERTICES = 4096


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Interval | StarDomain
    s: float
    h: float
    nodes: np.ndarray          # (m, n)
    volumes: np.ndarray        # (m,)
    zero_nodes: np.ndarray     # (k, n)
    zero_volumes: np.ndarray   # (k,)
    quad_nbrs: np.ndarray      # (m, 2^n, n), -1 where the neighbour carries u = 0
    quad_signs: np.ndarray     # (2^n, n)
    dist: np.ndarray           # boundary distance of nodes
    foot: np.ndarray | None    # foot parameter θ of nodes (2-D)
    lattice: np.ndarray        # integer lattice coordinates of nodes
    origin: np.ndarray

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return len(self.nodes)

    def quadrature(self):
        return self.nodes, self.volumes, None

    def values(self, coeffs):
        return np.asarray(coeffs)

    @cached_property
    def near_q(self) -> float:
        """Isotropic near-field constant q with Q(I) = q·Identity."""
        return float(_near_q_matrix(np.eye(self.dim)[None], self.s, self.h)[0, 0, 0])


# --------------------------------------------------------------------------
# lattice construction
# --------------------------------------------------------------------------

def _quadrant_signs(n: int) -> np.ndarray:
    return np.array(list(itertools.product([1, -1], repeat=n)), dtype=int)


def build_grid(domain, s: float, h: float, max_nodes: int = MAX_NODES) -> Grid:
    s = check_order(s)
    h = float(h)
    if not h > 0:
        raise ConfigError(f"h: grid spacing must be positive, got {h}")
    if isinstance(domain, Interval):
        origin = np.array([domain.a])
        kmax = int(math.ceil((domain.b - domain.a) / h)) + 2
        ks = np.arange(-2, kmax + 1)
        x = domain.a + h * ks
        lo = np.maximum(x - h / 2, domain.a)
        hi = np.minimum(x + h / 2, domain.b)
        area = np.clip(hi - lo, 0, None)
        dist = domain.boundary_distance(x)
        lat = ks[:, None]
        pts = x[:, None]
        foot_all = None
    elif isinstance(domain, StarDomain):
        origin = np.asarray(domain.center)
        K = int(math.ceil(domain.max_radius() / h)) + 2
        if (2 * K + 1) ** 2 > 40 * max_nodes:
            raise TooManyNodes(f"h={h} gives far more than {max_nodes} nodes")
        ii = np.arange(-K, K + 1)
        I, J = np.meshgrid(ii, ii, indexing="ij")
        lat = np.stack([I.ravel(), J.ravel()], 1)
        pts = origin + h * lat
        inside = domain.contains(pts)
        dcurve, foot_all = closest_on_curve(domain.curve, pts)
        area = np.where(inside, h * h, 0.0)
        cut = dcurve < h / math.sqrt(2) * (1 + 1e-9)
        if np.any(cut):
            poly = shapely.Polygon(domain.polygon(POLYGON_VERTICES))
            c = pts[cut]
            boxes = shapely.box(c[:, 0] - h / 2, c[:, 1] - h / 2, c[:, 0] + h / 2, c[:, 1] + h / 2)
            area[cut] = shapely.area(shapely.intersection(boxes, poly))
        dist = np.where(inside, dcurve, 0.0)
    else:
        raise ConfigError(f"unsupported domain {domain!r}")

    interior = dist > 1e-9 * h
    m = int(interior.sum())
    if m > max_nodes:
        raise TooManyNodes(f"{m} interior nodes exceed the cap {max_nodes}", {"nodes": m, "cap": max_nodes})
    if m < MIN_NODES:
        raise GridTooCoarse(f"only {m} interior nodes at h={h}", {"nodes": m})
    zero = (~interior) & (area > 1e-12 * h ** domain.dim)

    n = domain.dim
    shape = tuple(lat.max(0) - lat.min(0) + 3)
    off = lat.min(0) - 1
    index = -np.ones(shape, dtype=int)
    L_int = lat[interior]
    index[tuple((L_int - off).T)] = np.arange(m)
    signs = _quadrant_signs(n)

    def stencil(L):
        nbrs = np.empty((len(L), len(signs), n), dtype=int)
        for q, sg in enumerate(signs):
            for d in range(n):
                step = np.zeros(n, dtype=int)
                step[d] = sg[d]
                nbrs[:, q, d] = index[tuple((L + step - off).T)]
        return nbrs
    return Grid(domain=domain, s=s, h=h, nodes=pts[interior], volumes=area[interior],
                zero_nodes=pts[zero], zero_volumes=area[zero], quad_nbrs=stencil(L_int),
                quad_signs=signs,
                dist=dist[interior], foot=None if foot_all is None else foot_all[interior],
                lattice=L_int, origin=origin)


# --------------------------------------------------------------------------
# pieces of the form
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Pieces:
    """Per-node data of the (possibly transformed) form."""

    p: np.ndarray        # transformed node positions
    J: np.ndarray        # Jacobians at nodes
    pz: np.ndarray       # transformed zero-node positions
    Jz: np.ndarray
    G: np.ndarray        # I + Dψ at nodes


def _pieces(grid: Grid, field) -> _Pieces:
    n = grid.dim
    if field is None or field.is_zero:
        nz = len(grid.zero_nodes)
        return _Pieces(grid.nodes, np.ones(grid.size), grid.zero_nodes, np.ones(nz),
                       np.tile(np.eye(n), (grid.size, 1, 1)))
    G = np.eye(n) + field.jacobian(grid.nodes)
    J = np.linalg.det(G)
    if len(grid.zero_nodes):
        pz = grid.zero_nodes + field(grid.zero_nodes)
        Jz = np.linalg.det(np.eye(n) + field.jacobian(grid.zero_nodes))
    else:
        pz, Jz = grid.zero_nodes, np.zeros(0)
    return _Pieces(grid.nodes + field(grid.nodes), J, pz, Jz, G)


def _near_q_matrix(G: np.ndarray, s: float, h: float) -> np.ndarray:
    """Q(G) = ∫_{[-h/2,h/2]^n} z zᵀ |G z|^{-n-2s} dz for a stack of matrices G."""
    n = G.shape[-1]
    if n == 1:
        q = 2 * (h / 2) ** (2 - 2 * s) / (2 - 2 * s)
        return (q * np.abs(G[:, 0, 0]) ** (-1 - 2 * s))[:, None, None]
    th, w = _square_angles()
    e = np.stack([np.cos(th), np.sin(th)], 1)
    rho = (h / 2) / np.maximum(np.abs(e[:, 0]), np.abs(e[:, 1]))
    radial = w * rho ** (2 - 2 * s) / (2 - 2 * s)
    Ge = np.einsum("mab,kb->mka", G, e)
    f = radial[None, :] * np.linalg.norm(Ge, axis=2) ** (-2 - 2 * s)
    return np.einsum("mk,ka,kb->mab", f, e, e)


def _near_q_derivative(A: np.ndarray, s: float, h: float) -> np.ndarray:
    """d/dt Q(I + tA) at t = 0."""
    n = A.shape[-1]
    if n == 1:
        q = 2 * (h / 2) ** (2 - 2 * s) / (2 - 2 * s)
        return (-(1 + 2 * s) * q * A[:, 0, 0])[:, None, None]
    th, w = _square_angles()
    e = np.stack([np.cos(th), np.sin(th)], 1)
    rho = (h / 2) / np.maximum(np.abs(e[:, 0]), np.abs(e[:, 1]))
    radial = w * rho ** (2 - 2 * s) / (2 - 2 * s)
    eAe = np.einsum("ka,mab,kb->mk", e, A, e)
    f = -(2 + 2 * s) * radial[None, :] * eAe
    return np.einsum("mk,ka,kb->mab", f, e, e)


_SQUARE_CACHE: dict = {}


def _square_angles(m: int = 24):
    """Gauss rule in θ on the 8 smooth pieces of the square's polar radius."""
    if m not in _SQUARE_CACHE:
        x, w = gauss_legendre(m)
        th, wt = [], []
        for k in range(8):
            a, b = k * np.pi / 4, (k + 1) * np.pi / 4
            th.append(0.5 * (a + b) + 0.5 * (b - a) * x)
            wt.append(0.5 * (b - a) * w)
        _SQUARE_CACHE[m] = (np.concatenate(th), np.concatenate(wt))
    return _SQUARE_CACHE[m]


def _near_field_matrix(grid: Grid, coef: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Near-field energy Σ_i coef_i Σ_q (g_qᵀ Q_i g_q + g̃_qᵀ Q_i g̃_q) as a matrix.

    g_q is the one-sided gradient in quadrant q; g̃_q keeps only the
    components pointing at u = 0 neighbours (ghost copy of node i's cell
    standing in for the zero cell across the boundary).
    """
    m, n, h = grid.size, grid.dim, grid.h
    A = np.zeros((m, m))
    flat = A.reshape(-1)
    node = np.arange(m)
    ghost_diag = np.zeros(m)
    for q, sg in enumerate(grid.quad_signs):
        nb = grid.quad_nbrs[:, q, :]
        for d in range(n):
            for e in range(n):
                kappa = coef * Q[:, d, e] * sg[d] * sg[e] / h ** 2
                a, b = nb[:, d], nb[:, e]
                for r, c, sign in ((a, b, 1.0), (a, node, -1.0), (node, b, -1.0), (node, node, 1.0)):
                    ok = (r >= 0) & (c >= 0)
                    np.add.at(flat, r[ok] * m + c[ok], sign * kappa[ok])
                ghost_diag += np.where((a < 0) & (b < 0), kappa, 0.0)
    A[np.diag_indices(m)] += ghost_diag
    return A


def _exterior_curve(domain: StarDomain, field):
    """Boundary of (I + ψ)Ω as a parametric curve in θ."""
    if field is None or field.is_zero:
        return domain.curve

    def curve(theta):
        y, y1, y2 = domain.curve(theta)
        sh = y.shape
        yf = y.reshape(-1, 2)
        D = field.jacobian(yf)
        Y = yf + field(yf)
        Y1 = y1.reshape(-1, 2) + np.einsum("mab,mb->ma", D, y1.reshape(-1, 2))
        return Y.reshape(sh), Y1.reshape(sh), y2   # y'' only steers Newton
    return curve


def exterior_integral(domain, points: np.ndarray, s: float, field=None, derivative_field=None):
    """T(p) = ∫_{Ωψᶜ} |y - p|^{-n-2s} dy at transformed points ``points``.

    With ``derivative_field`` (and no ``field``) returns d/dt T at t = 0 for
    the domain (I + tψ)Ω and points p + tψ(p).
    """
    n = domain.dim
    if isinstance(domain, Interval):
        x = points[:, 0]
        ends = np.array([[domain.a], [domain.b]])
        if derivative_field is None:
            if field is not None and not field.is_zero:
                a, b = (ends + field(ends))[:, 0]
            else:
                a, b = domain.a, domain.b
            return ((b - x) ** (-2 * s) + (x - a) ** (-2 * s)) / (2 * s)
        pa, pb = derivative_field(ends)[:, 0]
        px = derivative_field(points)[:, 0]
        a, b = domain.a, domain.b
        return -((b - x) ** (-2 * s - 1) * (pb - px) + (x - a) ** (-2 * s - 1) * (px - pa))

    curve = _exterior_curve(domain, field)
    dist, foot = closest_on_curve(curve, points)
    speed = np.linalg.norm(curve(foot)[1], axis=1)
    thetas, weights, owner = [], [], []
    for i, (f0, d0, sp) in enumerate(zip(foot, dist, speed)):
        th, w = graded_panels(f0, d0 / sp)
        thetas.append(th)
        weights.append(w)
        owner.append(np.full(len(th), i))
    th = np.concatenate(thetas)
    w = np.concatenate(weights)
    own = np.concatenate(owner)
    Y, Y1, _ = curve(th)
    r = Y - points[own]
    nu = np.stack([Y1[:, 1], -Y1[:, 0]], 1)
    r2 = (r * r).sum(1)
    mexp = n + 2 * s
    if derivative_field is None:
        vals = (r * nu).sum(1) * r2 ** (-mexp / 2) / (2 * s)
    else:
        y = Y
        rdot = derivative_field(y) - derivative_field(points)[own]
        D = derivative_field.jacobian(y)
        t1 = np.einsum("mab,mb->ma", D, Y1)
        nudot = np.stack([t1[:, 1], -t1[:, 0]], 1)
        rn = (r * nu).sum(1)
        vals = (((rdot * nu).sum(1) + (r * nudot).sum(1)) * r2 ** (-mexp / 2)
                - mexp * rn * (r * rdot).sum(1) * r2 ** (-mexp / 2 - 1)) / (2 * s)
    return np.bincount(own, weights=w * vals, minlength=len(points))


def _pair_kernel(P: np.ndarray, Q: np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray]:
    """|P_i - Q_j|^{-n-2s} and the component differences."""
    diff = [P[:, d][:, None] - Q[:, d][None, :] for d in range(P.shape[1])]
    r2 = sum(dd * dd for dd in diff)
    with np.errstate(divide="ignore"):
        k = np.where(r2 > 0, r2 ** (-(P.shape[1] + 2 * s) / 2), 0.0)
    return k, r2, diff


def grid_pencil(grid: Grid, field=None) -> tuple[np.ndarray, np.ndarray]:
    """(stiffness, mass) of the form transformed by ``field`` (or the plain form)."""
    s, n = grid.s, grid.dim
    C = frac_constant(n, s)
    pc = _pieces(grid, field)
    if np.any(pc.J <= 0):
        raise TooLarge("transformation is not orientation preserving at some node")
    v = grid.volumes
    k, _, _ = _pair_kernel(pc.p, pc.p, s)
    W = k * ((v * pc.J)[:, None] * (v * pc.J)[None, :])
    diag = W.sum(1)
    if len(grid.zero_nodes):
        kz, _, _ = _pair_kernel(pc.p, pc.pz, s)
        diag = diag + v * pc.J * (kz @ (grid.zero_volumes * pc.Jz))
    T = exterior_integral(grid.domain, pc.p, s, field=field)
    diag = diag + v * pc.J * T
    A = -W
    A[np.diag_indices_from(A)] += diag
    A *= C
    nq = len(grid.quad_signs)
    Q = _near_q_matrix(pc.G, s, grid.h)
    A += _near_field_matrix(grid, 0.5 * C * v * pc.J ** 2 / nq, Q)
    A = 0.5 * (A + A.T)
    return A, np.diag(v * pc.J)


def grid_pencil_derivative(grid: Grid, field) -> tuple[np.ndarray, np.ndarray]:
    """d/dt at t = 0 of grid_pencil(grid, t·field)."""
    s, n = grid.s, grid.dim
    C = frac_constant(n, s)
    v = grid.volumes
    X = grid.nodes
    psi = field(X)
    Dpsi = field.jacobian(X)
    div = np.trace(Dpsi, axis1=1, axis2=2)
    k, r2, diff = _pair_kernel(X, X, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = sum(diff[d] * (psi[:, d][:, None] - psi[:, d][None, :]) for d in range(n))
        ratio = np.where(r2 > 0, cross / np.where(r2 > 0, r2, 1.0), 0.0)
    dW = k * (v[:, None] * v[None, :]) * (div[:, None] + div[None, :] - (n + 2 * s) * ratio)
    diag = dW.sum(1)
    if len(grid.zero_nodes):
        Z = grid.zero_nodes
        psiz = field(Z)
        divz = np.trace(field.jacobian(Z), axis1=1, axis2=2)
        kz, r2z, diffz = _pair_kernel(X, Z, s)
        crossz = sum(diffz[d] * (psi[:, d][:, None] - psiz[:, d][None, :]) for d in range(n))
        dWz = kz * (div[:, None] + divz[None, :] - (n + 2 * s) * crossz / r2z)
        diag = diag + v * (dWz @ grid.zero_volumes)
    T = exterior_integral(grid.domain, X, s)
    dT = exterior_integral(grid.domain, X, s, derivative_field=field)
    diag = diag + v * (div * T + dT)
    A = -dW
    A[np.diag_indices_from(A)] += diag
    A *= C
    Q0 = _near_q_matrix(np.tile(np.eye(n), (len(v), 1, 1)), s, grid.h)
    dQ = _near_q_derivative(Dpsi, s, grid.h)
    nq = len(grid.quad_signs)
    A += _near_field_matrix(grid, 0.5 * C * v / nq, dQ)
    A += _near_field_matrix(grid, 0.5 * C * v * 2 * div / nq, Q0)
    A = 0.5 * (A + A.T)
    return A, np.diag(v * div)


# --------------------------------------------------------------------------
# public assemblers
# --------------------------------------------------------------------------

def _grid_operator(grid: Grid, kind: str, field=None) -> DiscreteOperator:
    A, M = grid_pencil(grid, field)
    meta = BasisMeta(kind=kind, s=grid.s, h=grid.h, domain=grid.domain.to_config(),
                     transformed=None if field is None else field.to_config())
    return DiscreteOperator(stiffness=A, mass=M, meta=meta, basis=grid, field=field)


def assemble_1d_grid(s: float, h: float, interval: Interval) -> DiscreteOperator:
    if not isinstance(interval, Interval):
        raise ConfigError("assemble_1d_grid needs an interval")
    return _grid_operator(build_grid(interval, s, h), "grid1d")


def assemble_2d_grid(s: float, h: float, domain: StarDomain, max_nodes: int = MAX_NODES) -> DiscreteOperator:
    if not isinstance(domain, StarDomain):
        raise ConfigError("assemble_2d_grid needs a star2d domain")
    return _grid_operator(build_grid(domain, s, h, max_nodes), "grid2d")


def _require_grid(base: DiscreteOperator, field, check_norm: bool = True):
    if not isinstance(base.basis, Grid):
        raise ConfigError("transformed forms are assembled on grid discretizations")
    if base.field is not None:
        raise ConfigError("base operator is already transformed")
    if field.dim != base.dim:
        raise ConfigError("field dimension does not match the domain")
    if check_norm and field.c1_norm_bound >= 1.0:
        raise TooLarge(f"C1 bound {field.c1_norm_bound:.3g} >= 1", {"c1_norm_bound": field.c1_norm_bound})


def assemble_transformed_form(base: DiscreteOperator, field) -> DiscreteOperator:
    """Pullback of the form on (I + ψ)Ω to the reference nodes."""
    _require_grid(base, field)
    if field.is_zero:
        return base
    return _grid_operator(base.basis, base.meta.kind, field)


def assemble_derivative_kernel(base: DiscreteOperator, field) -> np.ndarray:
    """d/dt of the transformed stiffness at t = 0 (derivative-kernel pairings).

    Linear in ψ, so no norm restriction applies.
    """
    _require_grid(base, field, check_norm=False)
    if field.is_zero:
        return np.zeros_like(base.stiffness)
    return grid_pencil_derivative(base.basis, field)[0]


def assemble_mass_derivative(base: DiscreteOperator, field) -> np.ndarray:
    _require_grid(base, field, check_norm=False)
    if field.is_zero:
        return np.zeros_like(base.mass)
    return np.diag(base.basis.volumes * field.divergence(base.basis.nodes))
