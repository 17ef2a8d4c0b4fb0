"""Quadrature rules used across the package."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=32)
def tanh_sinh(level: int = 6, tmax: float = 3.2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Double-exponential rule on (0, 1).

    Returns nodes ``x``, complements ``1 - x`` (computed without cancellation)
    and weights. Endpoint algebraic singularities are integrated at an
    exponential rate.
    """
    step = 2.0 ** (-level) * 2
    t = np.arange(-tmax, tmax + 0.5 * step, step)
    u = 0.5 * np.pi * np.sinh(t)
    # x = (1 + tanh u)/2 = 1/(1 + e^{-2u}),  1 - x = 1/(1 + e^{2u})
    x = 1.0 / (1.0 + np.exp(-2.0 * u))
    xc = 1.0 / (1.0 + np.exp(2.0 * u))
    w = step * 0.5 * np.pi * np.cosh(t) / (2.0 * np.cosh(u) ** 2)
    keep = (x > 0) & (xc > 0) & (w > 0)
    out = (x[keep], xc[keep], w[keep])
    for a in out:
        a.flags.writeable = False
    return out


def graded_panels(center: float, width: float, half_range: float = np.pi,
                  m: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on [center - half_range, center + half_range].

    Panels grow geometrically (factor 2) away from ``center``; the innermost
    panel has half-width ``width``. Suited to integrands with a near
    singularity of size ``width`` at ``center``.
    """
    width = min(max(width, 1e-14 * half_range), half_range)
    edges = [width]
    while edges[-1] < half_range:
        edges.append(min(2.0 * edges[-1], half_range))
    edges = np.asarray(edges)
    x, w = gauss_legendre(m)
    lo = np.concatenate([[-width], edges[:-1]])
    hi = np.concatenate([[width], edges[1:]])
    # right side (including centre panel) and mirrored left side
    lo_all = np.concatenate([lo, -hi[1:]])
    hi_all = np.concatenate([hi, -lo[1:]])
    mid = 0.5 * (lo_all + hi_all)
    rad = 0.5 * (hi_all - lo_all)
    nodes = (mid[:, None] + rad[:, None] * x[None, :]).ravel()
    weights = (rad[:, None] * w[None, :]).ravel()
    return center + nodes, weights
