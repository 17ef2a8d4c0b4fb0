"""Domains, perturbation fields and composed maps.

Two domain kinds are supported: intervals and star-shaped planar regions
whose radius is a finite Fourier series about a center point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, ConfigError, NotStarShaped, TooLarge

NORM_SAMPLES = 4096
NORM_SAFETY = 1.05
REFIT_SAMPLES = 512
REFIT_ORDER = 16
CUTOFF_WIDTH = 0.4
# sampling neighbourhood of the closure, in units of the local radius
NEIGHBOURHOOD = 1.0 + CUTOFF_WIDTH + 0.05


def _as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1:
        return x.reshape(-1, 1)
    return np.atleast_2d(x).reshape(-1, dim)


def trig_series(cos, sin, theta, deriv: int = 0) -> np.ndarray:
    """d^deriv/dθ^deriv of a_0 + Σ_k a_k cos kθ + b_k sin kθ (sin indexed from k=1)."""
    theta = np.asarray(theta, dtype=float)
    out = np.full(theta.shape, (cos[0] if cos else 0.0) if deriv == 0 else 0.0)
    for k in range(1, max(len(cos) - 1, len(sin)) + 1):
        a = cos[k] if k < len(cos) else 0.0
        b = sin[k - 1] if k - 1 < len(sin) else 0.0
        if a == 0.0 and b == 0.0:
            continue
        c, s_ = np.cos(k * theta), np.sin(k * theta)
        # derivatives of (a cos + b sin) cycle with period 4
        even = a * c + b * s_
        odd = -a * s_ + b * c
        out = out + [even, k * odd, -k ** 2 * even, -k ** 3 * odd][deriv]
    return out


# --------------------------------------------------------------------------
# domains
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryQuadrature:
    nodes: np.ndarray      # (m, n)
    weights: np.ndarray    # (m,)
    normals: np.ndarray    # (m, n)
    theta: np.ndarray | None = None

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    kind = "interval"
    dim = 1

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise ConfigError(f"interval needs a < b, got ({self.a}, {self.b})")

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * (self.a + self.b)])

    @property
    def half_length(self) -> float:
        return 0.5 * (self.b - self.a)

    def contains(self, x) -> np.ndarray:
        x = _as_points(x, 1)[:, 0]
        return (x > self.a) & (x < self.b)

    def boundary_distance(self, x) -> np.ndarray:
        x = _as_points(x, 1)[:, 0]
        return np.maximum(np.minimum(x - self.a, self.b - x), 0.0)

    def boundary_quadrature(self, m: int | None = None) -> BoundaryQuadrature:
        return BoundaryQuadrature(nodes=np.array([[self.a], [self.b]]),
                                  weights=np.ones(2),
                                  normals=np.array([[-1.0], [1.0]]))

    def scaled(self, r: float) -> "Interval":
        return Interval(r * self.a, r * self.b)

    def norm_samples(self) -> np.ndarray:
        c, L = self.center[0], self.half_length
        return np.linspace(c - NEIGHBOURHOOD * L, c + NEIGHBOURHOOD * L, NORM_SAMPLES)[:, None]

    def to_config(self) -> dict:
        return {"kind": "interval", "endpoints": [float(self.a), float(self.b)]}


@dataclass(frozen=True)
class StarDomain:
    """r(θ) = a_0 + Σ_k a_k cos kθ + b_k sin kθ around ``center``."""

    center: tuple[float, float] = (0.0, 0.0)
    cos: tuple[float, ...] = (1.0,)
    sin: tuple[float, ...] = ()

    kind = "star2d"
    dim = 2

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(c) for c in self.sin))
        if len(self.center) != 2:
            raise ConfigError("star2d center must be a planar point")
        if len(self.cos) == 0:
            raise ConfigError("star2d needs at least the mean radius")
        th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        if np.min(self.radius(th)) <= 0:
            raise ConfigError("star2d radius series must stay positive")

    # -- radius series ----------------------------------------------------
    @property
    def order(self) -> int:
        return max(len(self.cos) - 1, len(self.sin))

    def radius(self, theta, deriv: int = 0) -> np.ndarray:
        return trig_series(self.cos, self.sin, theta, deriv)

    def curve(self, theta):
        """Boundary point y(θ) and its first two θ-derivatives."""
        theta = np.asarray(theta, dtype=float)
        R, R1, R2 = (self.radius(theta, d) for d in range(3))
        e = np.stack([np.cos(theta), np.sin(theta)], -1)
        e_perp = np.stack([-np.sin(theta), np.cos(theta)], -1)
        y = np.asarray(self.center) + R[..., None] * e
        y1 = R1[..., None] * e + R[..., None] * e_perp
        y2 = (R2 - R)[..., None] * e + 2 * R1[..., None] * e_perp
        return y, y1, y2

    def normal(self, theta) -> np.ndarray:
        _, y1, _ = self.curve(theta)
        n = np.stack([y1[..., 1], -y1[..., 0]], -1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def polar(self, x):
        x = _as_points(x, 2) - np.asarray(self.center)
        return np.hypot(x[:, 0], x[:, 1]), np.arctan2(x[:, 1], x[:, 0])

    # -- geometry queries -------------------------------------------------
    def contains(self, x) -> np.ndarray:
        r, th = self.polar(x)
        return r < self.radius(th)

    def boundary_distance(self, x, return_foot: bool = False):
        x = _as_points(x, 2)
        dist, foot = closest_on_curve(self.curve, x)
        inside = self.contains(x)
        dist = np.where(inside, dist, 0.0)
        return (dist, foot) if return_foot else dist

    def boundary_quadrature(self, m: int = 256) -> BoundaryQuadrature:
        th = 2 * np.pi * np.arange(m) / m
        y, y1, _ = self.curve(th)
        speed = np.linalg.norm(y1, axis=1)
        n = np.stack([y1[:, 1], -y1[:, 0]], 1) / speed[:, None]
        return BoundaryQuadrature(nodes=y, weights=speed * 2 * np.pi / m, normals=n, theta=th)

    def polygon(self, m: int = 2048) -> np.ndarray:
        th = 2 * np.pi * np.arange(m) / m
        return self.curve(th)[0]

    def max_radius(self) -> float:
        th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        return float(np.max(self.radius(th)))

    def scaled(self, r: float) -> "StarDomain":
        return StarDomain(center=tuple(r * np.asarray(self.center)),
                          cos=tuple(r * np.asarray(self.cos)),
                          sin=tuple(r * np.asarray(self.sin)))

    def norm_samples(self) -> np.ndarray:
        m = int(round(math.sqrt(NORM_SAMPLES)))
        rho = (np.arange(m) + 0.5) / m * NEIGHBOURHOOD
        th = 2 * np.pi * np.arange(m) / m
        P, T = np.meshgrid(rho, th, indexing="ij")
        R = self.radius(T)
        return np.asarray(self.center) + np.stack([P * R * np.cos(T), P * R * np.sin(T)], -1).reshape(-1, 2)

    def to_config(self) -> dict:
        return {"kind": "star2d", "center": list(self.center),
                "radius_cos": list(self.cos), "radius_sin": list(self.sin)}


Domain = Interval | StarDomain


def disk(radius: float = 1.0, center=(0.0, 0.0)) -> StarDomain:
    return StarDomain(center=tuple(center), cos=(float(radius),))


def closest_on_curve(curve, x: np.ndarray, samples: int = 4096, newton: int = 8):
    """Distance from points to a closed parametric curve and the foot parameter.

    ``curve(θ)`` returns (y, y', y''). Dense sampling picks a start, Newton on
    (y - x)·y' = 0 refines it within the sampling bracket.
    """
    th = 2 * np.pi * np.arange(samples) / samples
    y = curve(th)[0]
    best = np.empty(len(x), dtype=int)
    for lo in range(0, len(x), 512):
        d2 = ((x[lo:lo + 512, None, :] - y[None, :, :]) ** 2).sum(-1)
        best[lo:lo + 512] = np.argmin(d2, axis=1)
    t0 = th[best]
    t = t0.copy()
    dt = 2 * np.pi / samples
    for _ in range(newton):
        yt, y1, y2 = curve(t)
        r = yt - x
        g = (r * y1).sum(-1)
        gp = (y1 * y1).sum(-1) + (r * y2).sum(-1)
        step = np.where(gp > 0, g / np.where(gp > 0, gp, 1.0), 0.0)
        t = np.clip(t - step, t0 - dt, t0 + dt)
    dist = np.linalg.norm(curve(t)[0] - x, axis=1)
    return dist, np.mod(t, 2 * np.pi)


def boundary_distance(d: Domain, x):
    """dist(x, complement of d); scalar in, scalar out."""
    out = d.boundary_distance(x)
    if np.ndim(x) == 0 or (d.dim == 2 and np.ndim(x) == 1):
        return float(out[0])
    return out


# --------------------------------------------------------------------------
# perturbation fields
# --------------------------------------------------------------------------

class PerturbationField:
    """C1 vector field ψ = amplitude · (family shape).

    ``domain`` is the region of interest; the C1 bound is sampled on a
    compact neighbourhood of its closure.
    """

    domain: Domain
    amplitude: float
    family: str = "abstract"

    @property
    def dim(self) -> int:
        return self.domain.dim

    def _value(self, x):  # unit amplitude, x of shape (m, n)
        raise NotImplementedError

    def _jacobian(self, x):
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        return self.amplitude * self._value(x)

    def jacobian(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        return self.amplitude * self._jacobian(x)

    def divergence(self, x) -> np.ndarray:
        return np.trace(self.jacobian(x), axis1=1, axis2=2)

    def kinks(self) -> tuple:
        """1-D points where the field is only C1 (quadrature breakpoints)."""
        return ()

    def with_amplitude(self, t: float) -> "PerturbationField":
        return replace(self, amplitude=float(t))

    def scaled_to_norm(self, target: float) -> "PerturbationField":
        unit = self.with_amplitude(1.0)
        return unit.with_amplitude(target / unit.c1_norm_bound)

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    @cached_property
    def c1_norm_bound(self) -> float:
        """1.05 · (sup|ψ| + sup‖Dψ‖₂) over a neighbourhood of the closure."""
        if self.is_zero:
            return 0.0
        x = self.domain.norm_samples()
        v = np.linalg.norm(self(x), axis=1).max()
        J = self.jacobian(x)
        if self.dim == 1:
            dj = np.abs(J[:, 0, 0]).max()
        else:
            dj = np.linalg.norm(J, ord=2, axis=(1, 2)).max()
        return float(NORM_SAFETY * (v + dj))

    def __add__(self, other: "PerturbationField") -> "SumField":
        return SumField(self.domain, (self, other))

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class AffineField(PerturbationField):
    """x ↦ amplitude·(c + A x)."""

    domain: Domain
    c: tuple = (0.0,)
    A: tuple = ((0.0,),)
    amplitude: float = 1.0
    family: str = "affine"

    def __post_init__(self):
        n = self.domain.dim
        c = np.asarray(self.c, dtype=float).reshape(n)
        A = np.asarray(self.A, dtype=float).reshape(n, n)
        object.__setattr__(self, "c", tuple(c))
        object.__setattr__(self, "A", tuple(map(tuple, A)))

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0 or (not np.any(self.c) and not np.any(self.A))

    def _value(self, x):
        return np.asarray(self.c) + x @ np.asarray(self.A).T

    def _jacobian(self, x):
        return np.broadcast_to(np.asarray(self.A), (len(x), self.dim, self.dim)).copy()

    def to_config(self) -> dict:
        return {"family": "affine", "c": list(self.c), "A": [list(r) for r in self.A],
                "amplitude": self.amplitude}


def dilation(domain: Domain, t: float = 1.0) -> AffineField:
    n = domain.dim
    return AffineField(domain, c=np.zeros(n), A=np.eye(n), amplitude=t)


def translation(domain: Domain, direction, t: float = 1.0) -> AffineField:
    n = domain.dim
    return AffineField(domain, c=direction, A=np.zeros((n, n)), amplitude=t)


def _bump(rho):
    """cos² cutoff on |ρ-1| < w, with derivative."""
    w = CUTOFF_WIDTH
    u = np.pi * (rho - 1.0) / (2 * w)
    inside = np.abs(rho - 1.0) < w
    eta = np.where(inside, np.cos(u) ** 2, 0.0)
    deta = np.where(inside, -np.sin(2 * u) * np.pi / (2 * w), 0.0)
    return eta, deta


@dataclass(frozen=True, eq=False)
class NormalFourierField(PerturbationField):
    """ψ = amplitude · g(θ) η(ρ) N̂(θ), ρ = |x - c|/R(θ).

    g(θ) = Σ_k gc_k cos kθ + gs_k sin kθ (gc indexed from k=0, gs from k=1);
    η is a cos² bump supported on |ρ - 1| < 0.4, equal to 1 on ∂Ω.
    """

    domain: StarDomain
    gc: tuple = (0.0,)
    gs: tuple = ()
    amplitude: float = 1.0
    family: str = "normal_fourier"

    def __post_init__(self):
        if not isinstance(self.domain, StarDomain):
            raise ConfigError("normal Fourier fields need a star2d domain")
        object.__setattr__(self, "gc", tuple(float(v) for v in self.gc))
        object.__setattr__(self, "gs", tuple(float(v) for v in self.gs))

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0 or (not any(self.gc) and not any(self.gs))

    def g(self, theta, deriv: int = 0):
        # same series layout as the radius
        return trig_series(self.gc, self.gs, theta, deriv)

    def _parts(self, x):
        d = self.domain
        rel = x - np.asarray(d.center)
        r = np.hypot(rel[:, 0], rel[:, 1])
        th = np.arctan2(rel[:, 1], rel[:, 0])
        R, R1, R2 = (d.radius(th, k) for k in range(3))
        rho = r / R
        eta, deta = _bump(rho)
        c, s_ = np.cos(th), np.sin(th)
        n = np.stack([R * c + R1 * s_, R * s_ - R1 * c], 1)
        nn = np.linalg.norm(n, axis=1)
        nhat = n / nn[:, None]
        return dict(r=np.where(r > 0, r, 1.0), th=th, R=R, R1=R1, R2=R2, rho=rho, eta=eta,
                    deta=deta, c=c, s=s_, nhat=nhat, nn=nn)

    def _value(self, x):
        p = self._parts(x)
        return (self.g(p["th"]) * p["eta"])[:, None] * p["nhat"]

    def _jacobian(self, x):
        p = self._parts(x)
        c, s_, r, R, R1, R2 = p["c"], p["s"], p["r"], p["R"], p["R1"], p["R2"]
        grad_th = np.stack([-s_, c], 1) / r[:, None]
        grad_r = np.stack([c, s_], 1)
        grad_rho = grad_r / R[:, None] - (r * R1 / R ** 2)[:, None] * grad_th
        g, g1 = self.g(p["th"]), self.g(p["th"], 1)
        grad_geta = (g1 * p["eta"])[:, None] * grad_th + (g * p["deta"])[:, None] * grad_rho
        n1 = np.stack([2 * R1 * c + (R2 - R) * s_, 2 * R1 * s_ - (R2 - R) * c], 1)
        nhat = p["nhat"]
        dnhat = (n1 - nhat * (nhat * n1).sum(1)[:, None]) / p["nn"][:, None]
        J = nhat[:, :, None] * grad_geta[:, None, :] \
            + (g * p["eta"])[:, None, None] * dnhat[:, :, None] * grad_th[:, None, :]
        return J

    def to_config(self) -> dict:
        return {"family": "normal_fourier", "g_cos": list(self.gc), "g_sin": list(self.gs),
                "amplitude": self.amplitude}


def normal_mode(domain: StarDomain, k: int, kind: str = "cos", t: float = 1.0) -> NormalFourierField:
    gc = [0.0] * (k + 1)
    gs = [0.0] * max(k, 0)
    if kind == "cos":
        gc[k] = 1.0
    else:
        if k < 1:
            raise ConfigError("sine modes start at k=1")
        gs[k - 1] = 1.0
    return NormalFourierField(domain, gc=tuple(gc), gs=tuple(gs), amplitude=t)


def _outer_cutoff(rho):
    """1 on ρ ≤ 1, cos² decay to 0 on 1 < ρ < 1 + w, with derivative."""
    w = CUTOFF_WIDTH
    u = np.pi * np.clip(rho - 1.0, 0.0, w) / (2 * w)
    chi = np.where(rho < 1.0 + w, np.cos(u) ** 2, 0.0)
    dchi = np.where((rho > 1.0) & (rho < 1.0 + w), -np.sin(2 * u) * np.pi / (2 * w), 0.0)
    return chi, dchi


@dataclass(frozen=True, eq=False)
class FourierField1D(PerturbationField):
    """ψ(x) = amplitude · χ(|ξ|/L) Σ a_k cos(kωξ) + b_k sin(kωξ), ξ = x - center, ω = π/(2L).

    χ is 1 on the interval and decays to 0 within 0.4L outside it, so the
    field is compactly supported near the closure.
    """

    domain: Interval
    gc: tuple = (0.0,)
    gs: tuple = ()
    amplitude: float = 1.0
    family: str = "fourier_1d"

    def _omega(self):
        return np.pi / (2 * self.domain.half_length)

    def _parts(self, x):
        L = self.domain.half_length
        xi = x[:, 0] - self.domain.center[0]
        chi, dchi = _outer_cutoff(np.abs(xi) / L)
        return xi, chi, dchi * np.sign(xi) / L

    def _value(self, x):
        xi, chi, _ = self._parts(x)
        return (trig_series(self.gc, self.gs, xi * self._omega(), 0) * chi)[:, None]

    def _jacobian(self, x):
        xi, chi, dchi = self._parts(x)
        om = self._omega()
        v = trig_series(self.gc, self.gs, xi * om, 0)
        d = trig_series(self.gc, self.gs, xi * om, 1) * om
        return (d * chi + v * dchi)[:, None, None]

    def kinks(self) -> tuple:
        c, L = self.domain.center[0], self.domain.half_length
        w = (1.0 + CUTOFF_WIDTH) * L
        return (c - w, c + w)

    def to_config(self) -> dict:
        return {"family": "fourier_1d", "g_cos": list(self.gc), "g_sin": list(self.gs),
                "amplitude": self.amplitude}


@dataclass(frozen=True, eq=False)
class SumField(PerturbationField):
    domain: Domain
    terms: tuple = ()
    amplitude: float = 1.0
    family: str = "sum"

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0 or all(f.is_zero for f in self.terms)

    def _value(self, x):
        return sum(f(x) for f in self.terms) if self.terms else np.zeros_like(x)

    def _jacobian(self, x):
        if not self.terms:
            return np.zeros((len(x), self.dim, self.dim))
        return sum(f.jacobian(x) for f in self.terms)

    def kinks(self) -> tuple:
        return tuple(sorted({k for f in self.terms for k in f.kinks()}))

    def to_config(self) -> dict:
        return {"family": "sum", "terms": [f.to_config() for f in self.terms],
                "amplitude": self.amplitude}


def zero_field(domain: Domain) -> AffineField:
    return AffineField(domain, amplitude=0.0, c=np.zeros(domain.dim), A=np.zeros((domain.dim,) * 2))


def jacobian_determinant(psi: PerturbationField, x) -> np.ndarray | float:
    """det(I + Dψ(x))."""
    J = psi.jacobian(x)
    n = J.shape[-1]
    out = np.linalg.det(np.eye(n) + J)
    if np.ndim(x) == 0 or (n == 2 and np.ndim(x) == 1):
        return float(out[0])
    return out


def _check_invertible(psi: PerturbationField):
    if psi.c1_norm_bound >= 1.0:
        raise TooLarge(f"C1 bound {psi.c1_norm_bound:.3g} >= 1; I + psi may not be invertible",
                       {"c1_norm_bound": psi.c1_norm_bound})


def apply_perturbation(d: Domain, psi: PerturbationField, order: int | None = None) -> Domain:
    """(I + ψ)Ω refit to the same representation."""
    if psi.is_zero:
        return d
    _check_invertible(psi)
    if isinstance(d, Interval):
        ends = np.array([[d.a], [d.b]])
        a, b = (ends + psi(ends))[:, 0]
        return Interval(float(a), float(b))
    th = 2 * np.pi * np.arange(REFIT_SAMPLES) / REFIT_SAMPLES
    p = d.curve(th)[0]
    q = p + psi(p)
    rel = q - np.asarray(d.center)
    phi = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    r = np.hypot(rel[:, 0], rel[:, 1])
    steps = np.diff(np.concatenate([phi, [phi[0] + 2 * np.pi]]))
    if np.any(steps <= 0) or np.min(r) <= 0:
        raise NotStarShaped("perturbed boundary is not star-shaped about the center")
    K = max(d.order, REFIT_ORDER) if order is None else order
    cols = [np.ones_like(phi)]
    for k in range(1, K + 1):
        cols += [np.cos(k * phi), np.sin(k * phi)]
    coef = np.linalg.lstsq(np.stack(cols, 1), r, rcond=None)[0]
    a = np.concatenate([[coef[0]], coef[1::2]])
    b = coef[2::2]
    # trim negligible tail modes beyond the input order
    keep = K
    while keep > d.order and abs(a[keep]) < 1e-14 and abs(b[keep - 1]) < 1e-14:
        keep -= 1
    try:
        return StarDomain(center=d.center, cos=tuple(a[:keep + 1]), sin=tuple(b[:keep]))
    except ConfigError as exc:
        raise NotStarShaped(str(exc)) from exc


# --------------------------------------------------------------------------
# composition of maps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CompositeMap:
    """𝓕_l = F_l ∘ … ∘ F_1 with F_l = I + ψ_l.

    ``step_bounds[i]`` bounds ‖𝓕_{i+1} - 𝓕_i‖_{C¹} by ‖ψ_{i+1}‖·Π_{l≤i}(1 + ‖ψ_l‖);
    ``chain_bounds[i]`` is the budget version σ_{i+1}(1 + σ_1)^i.
    """

    fields: tuple = ()
    budgets: tuple | None = None
    norms: tuple = ()
    step_bounds: tuple = ()
    chain_bounds: tuple | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = x.reshape(-1, x.shape[-1] if x.ndim > 1 else 1).copy() if x.ndim else x.reshape(1, 1)
        for f in self.fields:
            y = y + f(y)
        return y.reshape(x.shape) if x.ndim else float(y[0, 0])

    def jacobian(self, x):
        fields = self.fields
        if not fields:
            x = np.atleast_2d(x)
            return np.broadcast_to(np.eye(x.shape[-1]), (len(x),) + (x.shape[-1],) * 2).copy()
        y = _as_points(x, fields[0].dim)
        D = np.broadcast_to(np.eye(y.shape[1]), (len(y), y.shape[1], y.shape[1])).copy()
        for f in fields:
            D = (np.eye(y.shape[1]) + f.jacobian(y)) @ D
            y = y + f(y)
        return D

    @property
    def distance_to_identity_bound(self) -> float:
        return float(sum(self.step_bounds))

    @property
    def total_norm(self) -> float:
        return float(sum(self.norms))


def compose_maps(fields: Sequence[PerturbationField], budgets: Sequence[float] | None = None) -> CompositeMap:
    fields = tuple(fields)
    norms = tuple(f.c1_norm_bound for f in fields)
    if budgets is not None:
        budgets = tuple(float(b) for b in budgets)
        if len(budgets) < len(fields):
            raise BudgetExceeded("fewer budgets than maps")
        for l, (nrm, sig) in enumerate(zip(norms, budgets), start=1):
            if nrm > sig * (1 + 1e-9):
                raise BudgetExceeded(f"map {l}: C1 norm {nrm:.4g} exceeds budget {sig:.4g}",
                                     {"map": l, "norm": nrm, "budget": sig})
    steps, prod = [], 1.0
    for nrm in norms:
        steps.append(nrm * prod)
        prod *= 1.0 + nrm
    chain = None
    if budgets is not None and budgets:
        chain = tuple(budgets[i] * (1 + budgets[0]) ** i for i in range(len(fields)))
    return CompositeMap(fields=fields, budgets=budgets, norms=norms,
                        step_bounds=tuple(steps), chain_bounds=chain)


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------

def domain_from_config(cfg: dict) -> Domain:
    kind = cfg.get("kind")
    if kind == "interval":
        a, b = cfg.get("endpoints", [-1.0, 1.0])
        return Interval(float(a), float(b))
    if kind in ("star2d", "disk"):
        if kind == "disk":
            return disk(float(cfg.get("radius", 1.0)), tuple(cfg.get("center", (0.0, 0.0))))
        return StarDomain(center=tuple(cfg.get("center", (0.0, 0.0))),
                          cos=tuple(cfg.get("radius_cos", (1.0,))),
                          sin=tuple(cfg.get("radius_sin", ())))
    raise ConfigError(f"domain.kind: unknown kind {kind!r}")


def field_from_config(cfg: dict, domain: Domain) -> PerturbationField:
    fam = cfg.get("family")
    t = float(cfg.get("amplitude", 1.0))
    if fam == "affine":
        n = domain.dim
        return AffineField(domain, c=cfg.get("c", [0.0] * n),
                           A=cfg.get("A", np.zeros((n, n)).tolist()), amplitude=t)
    if fam == "dilation":
        return dilation(domain, t)
    if fam == "translation":
        return translation(domain, cfg.get("direction", [1.0] * domain.dim), t)
    if fam == "normal_fourier":
        return NormalFourierField(domain, gc=tuple(cfg.get("g_cos", (0.0,))),
                                  gs=tuple(cfg.get("g_sin", ())), amplitude=t)
    if fam == "fourier_1d":
        return FourierField1D(domain, gc=tuple(cfg.get("g_cos", (0.0,))),
                              gs=tuple(cfg.get("g_sin", ())), amplitude=t)
    if fam == "sum":
        return SumField(domain, tuple(field_from_config(c, domain) for c in cfg["terms"]), t)
    raise ConfigError(f"field.family: unknown family {fam!r}")
