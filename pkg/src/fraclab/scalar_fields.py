"""Scalar fields used as potentials and weights.

Fields are callables on point arrays of shape (m, n). Products of discrete
eigenfunctions live on the discretization: spectral ones evaluate anywhere,
grid ones only at the grid nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigError


class ScalarField:
    kind = "abstract"

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError

    def __add__(self, other: "ScalarField") -> "SumScalar":
        return SumScalar((self, other))

    def scaled(self, c: float) -> "ScalarField":
        return ScaledScalar(self, float(c))


def _points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 1) if x.ndim <= 1 else x


@dataclass(frozen=True)
class ConstantScalar(ScalarField):
    value: float
    kind = "constant"

    def __call__(self, x):
        return np.full(len(_points(x)), float(self.value))

    def to_config(self):
        return {"kind": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class PolynomialScalar(ScalarField):
    """Σ_k c_k Π_d x_d^{e_kd}; ``terms`` is a tuple of (c, exponents)."""

    terms: tuple
    kind = "polynomial"

    def __call__(self, x):
        x = _points(x)
        out = np.zeros(len(x))
        for c, ex in self.terms:
            if len(ex) != x.shape[1]:
                raise ConfigError(f"polynomial exponents {ex} do not match dimension {x.shape[1]}")
            out = out + c * np.prod(x ** np.asarray(ex, dtype=float)[None, :], axis=1)
        return out

    def to_config(self):
        return {"kind": "polynomial", "terms": [[float(c), list(map(int, ex))] for c, ex in self.terms]}


def coordinate(d: int, dim: int, c: float = 1.0) -> PolynomialScalar:
    """c·x_{d+1} in dimension ``dim``."""
    ex = [0] * dim
    ex[d] = 1
    return PolynomialScalar(((float(c), tuple(ex)),))


@dataclass(frozen=True, eq=False)
class EigenProductScalar(ScalarField):
    """u·v for two discrete functions (coefficient vectors) of ``basis``."""

    basis: Any
    u: np.ndarray
    v: np.ndarray
    label: str = ""
    kind = "eigen_product"

    def __call__(self, x):
        x = _points(x)
        if hasattr(self.basis, "evaluate"):
            uv = self.basis.evaluate(np.stack([self.u, self.v], 1), x[:, 0])
            return uv[:, 0] * uv[:, 1]
        return _nodal_lookup(self.basis, x, self.u * self.v)

    def to_config(self):
        return {"kind": "eigen_product", "label": self.label}


def _nodal_lookup(grid, x: np.ndarray, values: np.ndarray) -> np.ndarray:
    k = np.rint((x - grid.origin) / grid.h).astype(int)
    if np.max(np.abs(grid.origin + grid.h * k - x), initial=0.0) > 1e-9 * grid.h:
        raise ConfigError("grid functions can only be evaluated at lattice points")
    table = {tuple(l): i for i, l in enumerate(grid.lattice)}
    out = np.zeros(len(x))
    for m, key in enumerate(map(tuple, k)):
        i = table.get(key)
        if i is not None:
            out[m] = values[i]
    return out


@dataclass(frozen=True, eq=False)
class ScaledScalar(ScalarField):
    field: ScalarField
    c: float
    kind = "scaled"

    def __call__(self, x):
        return self.c * self.field(x)

    def to_config(self):
        return {"kind": "scaled", "c": self.c, "field": self.field.to_config()}


@dataclass(frozen=True, eq=False)
class SumScalar(ScalarField):
    terms: tuple
    kind = "sum"

    def __call__(self, x):
        return sum(t(x) for t in self.terms)

    def to_config(self):
        return {"kind": "sum", "terms": [t.to_config() for t in self.terms]}


def scalar_from_config(cfg, dim: int) -> ScalarField:
    """Constant numbers, {"kind": "constant"|"polynomial"|"coordinate"|"sum"}."""
    if isinstance(cfg, (int, float)):
        return ConstantScalar(float(cfg))
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"scalar field config needs a kind, got {cfg!r}")
    kind = cfg["kind"]
    if kind == "constant":
        return ConstantScalar(float(cfg.get("value", 0.0)))
    if kind == "polynomial":
        terms = tuple((float(c), tuple(int(e) for e in ex)) for c, ex in cfg.get("terms", []))
        for _, ex in terms:
            if len(ex) != dim:
                raise ConfigError(f"polynomial exponents {list(ex)} do not match dimension {dim}")
        return PolynomialScalar(terms)
    if kind == "coordinate":
        d = int(cfg.get("axis", 1)) - 1
        if not 0 <= d < dim:
            raise ConfigError(f"coordinate axis must lie in 1..{dim}")
        return coordinate(d, dim, float(cfg.get("scale", 1.0)))
    if kind == "sum":
        return SumScalar(tuple(scalar_from_config(t, dim) for t in cfg.get("terms", [])))
    raise ConfigError(f"unknown scalar field kind {kind!r}")
