"""A discretized eigenvalue problem: domain, order, method, potential and weight."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .discretization import (DiscreteOperator, assemble_1d_grid, assemble_1d_spectral,
                             assemble_2d_grid, assemble_potential, assemble_weight)
from .discretization.grid import MAX_NODES
from .errors import ConfigError
from .geometry import Interval, StarDomain
from .kernel import check_order
from .scalar_fields import ConstantScalar, ScalarField

METHODS = ("spectral", "grid")


@dataclass(frozen=True, eq=False)
class Problem:
    domain: Interval | StarDomain
    s: float
    method: str = "spectral"
    N: int = 64
    h: float = 1 / 16
    potential: ScalarField | None = None
    weight: ScalarField | None = None
    max_nodes: int = MAX_NODES

    def __post_init__(self):
        object.__setattr__(self, "s", check_order(self.s))
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "spectral" and not isinstance(self.domain, Interval):
            raise ConfigError("the spectral method needs an interval domain")

    @cached_property
    def base_operator(self) -> DiscreteOperator:
        if self.method == "spectral":
            return assemble_1d_spectral(self.s, self.N, self.domain)
        if isinstance(self.domain, Interval):
            return assemble_1d_grid(self.s, self.h, self.domain)
        return assemble_2d_grid(self.s, self.h, self.domain, self.max_nodes)

    @cached_property
    def operator(self) -> DiscreteOperator:
        op = self.base_operator
        if self.potential is not None:
            op = assemble_potential(op, self.potential)
        if self.weight is not None:
            op = assemble_weight(op, self.weight)
        return op

    def with_domain(self, domain) -> "Problem":
        return replace(self, domain=domain)

    def add_potential(self, b: ScalarField) -> "Problem":
        return replace(self, potential=b if self.potential is None else self.potential + b)

    def add_weight(self, beta: ScalarField) -> "Problem":
        base = ConstantScalar(1.0) if self.weight is None else self.weight
        return replace(self, weight=base + beta)

    def sup_norm(self, f) -> float:
        x, _, _ = self.operator.quadrature()
        return float(np.max(np.abs(f(x))))

    def to_config(self) -> dict:
        out = {"domain": self.domain.to_config(), "s": self.s, "method": self.method}
        if self.method == "spectral":
            out["N"] = self.N
        else:
            out["h"] = self.h
        if self.potential is not None:
            out["potential"] = self.potential.to_config()
        if self.weight is not None:
            out["weight"] = self.weight.to_config()
        return out
