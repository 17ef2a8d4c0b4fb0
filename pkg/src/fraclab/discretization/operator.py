"""DiscreteOperator container and matrix export."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..errors import IndefiniteForm, NonPositiveWeight


@dataclass(frozen=True)
class BasisMeta:
    kind: str                 # spectral1d | grid1d | grid2d
    s: float
    N: int | None = None
    h: float | None = None
    domain: dict = field(default_factory=dict)
    transformed: dict | None = None
    potential: bool = False
    weight: bool = False

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "s": self.s, "domain": self.domain}
        if self.N is not None:
            out["N"] = self.N
        if self.h is not None:
            out["h"] = self.h
        if self.transformed is not None:
            out["transformed"] = self.transformed
        if self.potential:
            out["potential"] = True
        if self.weight:
            out["weight"] = True
        return out


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Pencil (stiffness, mass) plus the basis it lives in.

    ``basis`` is a :class:`SpectralBasis` or a :class:`Grid`. Both expose
    ``quadrature()`` returning points ``x``, weights ``w`` and a matrix ``B``
    (or None for the identity) such that ∫ f u v ≈ Σ w f(x) (B u)(B v) for
    discrete functions u, v of this basis, and ``values(c)`` giving the true
    function values at those points.
    """

    stiffness: np.ndarray
    mass: np.ndarray
    meta: BasisMeta
    basis: Any
    field: Any = None            # transform field, if any
    potential_values: np.ndarray | None = None
    weight_values: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.stiffness.shape[0]

    @property
    def s(self) -> float:
        return self.meta.s

    @property
    def domain(self):
        return self.basis.domain

    @property
    def dim(self) -> int:
        return self.basis.domain.dim

    def quadrature(self):
        return self.basis.quadrature()

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        return self.basis.values(coeffs)

    def integrate_products(self, f_values: np.ndarray, U: np.ndarray, V: np.ndarray | None = None) -> np.ndarray:
        """Matrix of ∫ f u_i v_j over columns of U, V."""
        x, w, B = self.quadrature()
        V = U if V is None else V
        BU = U if B is None else B @ U
        BV = V if B is None else B @ V
        return BU.T @ ((w * f_values)[:, None] * BV)

    def field_matrix(self, f_values: np.ndarray) -> np.ndarray:
        """Gram matrix ∫ f φ_m φ_n over basis functions."""
        x, w, B = self.quadrature()
        if B is None:
            return np.diag(w * f_values)
        return B.T @ ((w * f_values)[:, None] * B)


def evaluate_scalar(op: DiscreteOperator, f) -> np.ndarray:
    """Scalar field values at the operator's quadrature points."""
    x, _, _ = op.quadrature()
    if callable(f):
        return np.asarray(f(x), dtype=float).reshape(len(x))
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        return np.full(len(x), float(f))
    if f.shape != (len(x),):
        raise ValueError(f"scalar field has {f.shape} values, expected {(len(x),)}")
    return f


def assemble_potential(base: DiscreteOperator, a) -> DiscreteOperator:
    """Stiffness += ∫ a u v; mass unchanged. ``a`` is callable or point values."""
    av = evaluate_scalar(base, a)
    A = base.stiffness + base.field_matrix(av)
    A = 0.5 * (A + A.T)
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteForm("stiffness with potential is not positive definite",
                             {"min_potential": float(av.min())}) from exc
    total = av if base.potential_values is None else base.potential_values + av
    return replace(base, stiffness=A, potential_values=total,
                   meta=replace(base.meta, potential=True))


def assemble_weight(base: DiscreteOperator, alpha) -> DiscreteOperator:
    """Mass replaced by ∫ α u v; stiffness unchanged."""
    av = evaluate_scalar(base, alpha)
    if np.min(av) <= 0:
        raise NonPositiveWeight(f"weight minimum {np.min(av):.4g} is not positive",
                                {"min_weight": float(np.min(av))})
    M = base.field_matrix(av)
    M = 0.5 * (M + M.T)
    return replace(base, mass=M, weight_values=av, meta=replace(base.meta, weight=True))


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------

def atomic_write_bytes(path: str, data: bytes):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export_matrix(path: str, M: np.ndarray, meta: dict):
    """Text format: '# ' + JSON header line, a 'rows cols' line, then rows."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = ["# " + json.dumps(meta, sort_keys=True), f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in M]
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def import_matrix(path: str) -> tuple[np.ndarray, dict]:
    with open(path) as fh:
        header = fh.readline()
        meta = json.loads(header[2:])
        r, c = map(int, fh.readline().split())
        M = np.loadtxt(fh, ndmin=2) if r else np.zeros((0, c))
    return M.reshape(r, c), meta


def export_operator(prefix: str, op: DiscreteOperator):
    meta = op.meta.to_dict()
    export_matrix(prefix + ".stiffness.txt", op.stiffness, dict(meta, matrix="stiffness"))
    export_matrix(prefix + ".mass.txt", op.mass, dict(meta, matrix="mass"))
