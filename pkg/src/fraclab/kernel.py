"""Constants of the fractional Laplacian."""

from __future__ import annotations

import math

from .errors import InvalidOrder


def check_order(s: float) -> float:
    s = float(s)
    if not (0.0 < s < 1.0):
        raise InvalidOrder(f"s: fractional order must lie in (0, 1), got {s}")
    return s


def frac_constant(n: int, s: float) -> float:
    """C_{n,s} = s 4^s Γ(n/2 + s) / (π^{n/2} Γ(1 - s)), so that (-Δ)^s has symbol |ξ|^{2s}."""
    s = check_order(s)
    return s * 4 ** s * math.gamma(n / 2 + s) / (math.pi ** (n / 2) * math.gamma(1 - s))


def trace_constant(s: float) -> float:
    """Γ(1 + s)², the constant in front of boundary-density integrals."""
    return math.gamma(1 + s) ** 2
