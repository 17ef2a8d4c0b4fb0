"""Generalized symmetric eigenproblems, clusters, normalization and tracking."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from .discretization.operator import DiscreteOperator, export_matrix
from .errors import CholeskyFailure, ConfigError, TrackingAmbiguous

L2 = "l2"
ENERGY = "energy"
TRACK_THRESHOLD = 0.6
DEFAULT_TOLERANCE = {"spectral1d": 1e-8, "grid1d": 1e-3, "grid2d": 2e-2}


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray       # columns
    normalization: str
    operator: DiscreteOperator

    @property
    def meta(self):
        return self.operator.meta

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def gram(self, target: str = L2) -> np.ndarray:
        P = self.operator.mass if target == L2 else self.operator.stiffness
        V = self.eigenvectors
        return V.T @ P @ V

    def residuals(self) -> np.ndarray:
        """‖(A - λM)v‖ / (‖A‖ ‖v‖) per pair."""
        A, M, V = self.operator.stiffness, self.operator.mass, self.eigenvectors
        R = A @ V - (M @ V) * self.eigenvalues[None, :]
        return np.linalg.norm(R, axis=0) / (np.linalg.norm(A, 2) * np.linalg.norm(V, axis=0))


@dataclass(frozen=True)
class Cluster:
    start: int          # 0-based, inclusive
    stop: int           # exclusive
    value: float
    rel_tol: float

    @property
    def size(self) -> int:
        return self.stop - self.start

    @property
    def indices(self) -> range:
        return range(self.start, self.stop)

    def to_dict(self) -> dict:
        return {"indices": [self.start + 1, self.stop], "value": self.value, "rel_tol": self.rel_tol}


def default_tolerance(op: DiscreteOperator) -> float:
    return DEFAULT_TOLERANCE.get(op.meta.kind, 2e-2)


def solve(op: DiscreteOperator, k: int | None = None) -> Spectrum:
    """First k eigenpairs of (stiffness, mass), ascending, L²-orthonormal."""
    n = op.size
    k = n if k is None else int(k)
    if not 1 <= k <= n:
        raise ConfigError(f"k: need 1 <= k <= {n}, got {k}")
    try:
        Lc = linalg.cholesky(op.mass, lower=True)
    except linalg.LinAlgError as exc:
        raise CholeskyFailure("mass matrix is not positive definite") from exc
    Ainv = linalg.solve_triangular(Lc, op.stiffness, lower=True)
    C = linalg.solve_triangular(Lc, Ainv.T, lower=True)
    C = 0.5 * (C + C.T)
    lam, W = linalg.eigh(C, subset_by_index=[0, k - 1])
    V = linalg.solve_triangular(Lc.T, W, lower=False)
    return Spectrum(eigenvalues=lam, eigenvectors=V, normalization=L2, operator=op)


def relative_gap(a: float, b: float) -> float:
    return abs(b - a) / max(abs(a), abs(b), 1e-300)


def cluster(spec: Spectrum | np.ndarray, rel_tol: float | None = None) -> list[Cluster]:
    """Maximal runs of consecutive eigenvalues with relative gaps below rel_tol."""
    lam = spec.eigenvalues if isinstance(spec, Spectrum) else np.asarray(spec, dtype=float)
    if rel_tol is None:
        if not isinstance(spec, Spectrum):
            raise ConfigError("rel_tol is required for bare eigenvalue arrays")
        rel_tol = default_tolerance(spec.operator)
    if not rel_tol > 0:
        raise ConfigError(f"rel_tol must be positive, got {rel_tol}")
    out, start = [], 0
    for i in range(1, len(lam) + 1):
        if i == len(lam) or relative_gap(lam[i - 1], lam[i]) >= rel_tol:
            out.append(Cluster(start, i, float(np.mean(lam[start:i])), float(rel_tol)))
            start = i
    return out


def cluster_ids(clusters: Sequence[Cluster]) -> np.ndarray:
    ids = np.zeros(clusters[-1].stop if clusters else 0, dtype=int)
    for c, cl in enumerate(clusters):
        ids[cl.start:cl.stop] = c + 1
    return ids


def isolating_intervals(lam: np.ndarray, q: int, rel_tol: float) -> list[tuple[float, float]] | None:
    """Intervals around λ_1..λ_q with pairwise disjoint closures, or None.

    Each λ_i needs a relative gap ≥ rel_tol to its neighbours (λ_{q+1}
    included when available); the interval radius is 0.45 of the smaller gap.
    """
    lam = np.asarray(lam, dtype=float)
    m = min(q + 1, len(lam))
    if q > len(lam):
        return None
    out = []
    for i in range(q):
        gaps = []
        for j in (i - 1, i + 1):
            if 0 <= j < m:
                if relative_gap(lam[i], lam[j]) < rel_tol:
                    return None
                gaps.append(abs(lam[j] - lam[i]))
        r = 0.45 * min(gaps) if gaps else rel_tol * abs(lam[i])
        out.append((float(lam[i] - r), float(lam[i] + r)))
    return out


def renormalize(spec: Spectrum, target: str) -> Spectrum:
    """Orthonormalize eigenvectors in the mass (l2) or stiffness (energy) product.

    Symmetric orthonormalization V G^{-1/2}: a pure rescaling for well
    separated pairs, a minimal rotation inside numerical clusters.
    """
    if target not in (L2, ENERGY):
        raise ConfigError(f"normalization must be {L2!r} or {ENERGY!r}, got {target!r}")
    G = spec.gram(target)
    w, U = np.linalg.eigh(0.5 * (G + G.T))
    V = spec.eigenvectors @ (U @ np.diag(w ** -0.5) @ U.T)
    return replace(spec, eigenvectors=V, normalization=target)


# --------------------------------------------------------------------------
# tracking
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackResult:
    params: np.ndarray
    paths: np.ndarray          # (steps, k) eigenvalue of path j at step i
    order: np.ndarray          # (steps, k) eigen-index of path j at step i
    overlaps: np.ndarray       # (steps-1, k) matched overlap
    crossings: list            # (step, path a, path b) where the order of two paths flips

    def slopes(self, center: float = 0.0) -> np.ndarray:
        """Path derivatives at ``center`` from symmetric parameter pairs.

        With pairs ±t and ±2t available the two central differences are
        combined by Richardson extrapolation.
        """
        t = self.params - center
        pos = sorted(x for x in t if x > 0)
        pairs = [x for x in pos if np.any(np.isclose(t, -x, rtol=1e-12, atol=0))]
        if not pairs:
            raise ConfigError("slopes need parameters symmetric about the center")
        D = []
        for x in pairs[:2]:
            ip = int(np.argmin(np.abs(t - x)))
            im = int(np.argmin(np.abs(t + x)))
            D.append((self.paths[ip] - self.paths[im]) / (2 * x))
        if len(D) == 2 and np.isclose(pairs[1], 2 * pairs[0]):
            return (4 * D[0] - D[1]) / 3
        return D[0]


def _overlap(prev: Spectrum, cur: Spectrum, M: np.ndarray) -> np.ndarray:
    return np.abs(prev.eigenvectors.T @ M @ cur.eigenvectors)


def track(pencils: Sequence[DiscreteOperator], k: int, params: Sequence[float] | None = None,
          threshold: float = TRACK_THRESHOLD, rel_tol: float | None = None, extra: int = 2) -> TrackResult:
    """Follow the first k eigenvalues through a pencil sequence by eigenvector overlap.

    Overlaps are mass-weighted. Paths inside a cluster of the previous step
    are compared through the cluster subspace, so a degenerate start is
    matched by subspace overlap rather than by an arbitrary basis.
    """
    if len(pencils) == 0:
        raise ConfigError("track needs at least one pencil")
    params = np.arange(len(pencils), dtype=float) if params is None else np.asarray(params, dtype=float)
    specs = [solve(op, min(k + extra, op.size)) for op in pencils]
    steps = len(specs)
    order = np.zeros((steps, k), dtype=int)
    order[0] = np.arange(k)
    paths = np.zeros((steps, k))
    paths[0] = specs[0].eigenvalues[:k]
    ov = np.zeros((max(steps - 1, 0), k))
    for i in range(1, steps):
        prev, cur = specs[i - 1], specs[i]
        M = 0.5 * (pencils[i - 1].mass + pencils[i].mass)
        O2 = _overlap(prev, cur, M) ** 2
        # subspace overlap for previous-step clusters
        tol = default_tolerance(pencils[i - 1]) if rel_tol is None else rel_tol
        S = O2.copy()
        for cl in cluster(prev.eigenvalues, tol):
            S[cl.start:cl.stop] = O2[cl.start:cl.stop].sum(0)[None, :]
        rows = order[i - 1]
        # subspace overlaps decide; plain overlaps break ties inside clusters
        cost = -S[rows] - 1e-6 * O2[rows]
        r, c = linear_sum_assignment(cost)
        assign = np.empty(k, dtype=int)
        assign[r] = c
        score = np.sqrt(S[rows, assign])
        if np.any(score < threshold):
            j = int(np.argmin(score))
            raise TrackingAmbiguous(f"overlap {score[j]:.3f} below {threshold} at step {i} for path {j + 1}",
                                    {"step": i, "path": j + 1, "overlap": float(score[j])})
        if len(set(assign.tolist())) != k:
            raise TrackingAmbiguous(f"overlap matching not injective at step {i}", {"step": i})
        order[i] = assign
        paths[i] = cur.eigenvalues[assign]
        ov[i - 1] = score
    crossings = []
    for i in range(1, steps):
        for a in range(k):
            for b in range(a + 1, k):
                if np.sign(order[i, a] - order[i, b]) != np.sign(order[i - 1, a] - order[i - 1, b]):
                    crossings.append((i, a + 1, b + 1))
    return TrackResult(params=params, paths=paths, order=order, overlaps=ov, crossings=crossings)


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------

def spectrum_rows(spec: Spectrum, rel_tol: float | None = None, s: float | None = None) -> list[list]:
    ids = cluster_ids(cluster(spec, rel_tol))
    s = spec.operator.s if s is None else s
    return [[s, i + 1, float(lam), int(ids[i])] for i, lam in enumerate(spec.eigenvalues)]


def spectrum_csv(spec: Spectrum, rel_tol: float | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "k", "lambda", "cluster"])
    for row in spectrum_rows(spec, rel_tol):
        w.writerow([repr(row[0]), row[1], repr(row[2]), row[3]])
    return buf.getvalue()


def export_eigenvectors(path: str, spec: Spectrum):
    meta = dict(spec.meta.to_dict(), matrix="eigenvectors", normalization=spec.normalization,
                eigenvalues=[float(x) for x in spec.eigenvalues])
    export_matrix(path, spec.eigenvectors, meta)
