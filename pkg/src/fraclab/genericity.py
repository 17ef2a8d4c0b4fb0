"""Perturb a domain, potential or weight until the first q eigenvalues are simple.

Each iteration attacks the first non-simple cluster: every dictionary
candidate (normalized to unit size) gets a splitting matrix, the one with
the largest deviation from a scalar matrix is applied with amplitude
t ≤ σ_l = ε 4^{-l}, halving t until the cluster opens while every
previously certified simple eigenvalue stays in its isolating interval.
"""

from __future__ import annotations

import logging
from itertools import product
from math import comb
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (AmplitudeExhausted, ConfigError, FraclabError, MaxIterations,
                     NoSplittingCandidate)
from .geometry import (AffineField, FourierField1D, PerturbationField, StarDomain,
                       apply_perturbation, compose_maps, dilation, normal_mode, translation)
from .output import format_json
from .problem import Problem
from .scalar_fields import EigenProductScalar, PolynomialScalar, ScalarField
from .shape_calculus import (SplittingMatrix, splitting_matrix_domain, splitting_matrix_potential,
                             splitting_matrix_weight)
from .spectrum import (Cluster, Spectrum, cluster, isolating_intervals,
                       relative_gap, solve)

log = logging.getLogger("fraclab.genericity")

MODES = ("domain", "potential", "weight")
EXTRA_EIGENVALUES = 3
# a 2-D lattice splits near-degenerate pairs by about 2e-3, so the plan
# resolves clusters more finely than the spectrum default
PLAN_TOLERANCE = {"spectral1d": 1e-8, "grid1d": 1e-3, "grid2d": 1e-3}


@dataclass(frozen=True)
class SimplificationPlan:
    mode: str = "domain"
    q: int = 5
    eps: float = 0.1
    rel_tol: float | None = None        # None: PLAN_TOLERANCE for the operator family
    max_iterations: int = 10
    max_halvings: int = 12
    fourier_modes: int = 6
    include_affine: bool = True
    poly_degree: int = 2
    cluster_products: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if not 0 < self.eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.rel_tol is not None and not self.rel_tol > 0:
            raise ConfigError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iterations < 0 or self.max_halvings < 0:
            raise ConfigError("iteration limits must be nonnegative")

    def budget(self, l: int) -> float:
        """σ_l = ε 4^{-l}, l ≥ 1."""
        return self.eps * 4.0 ** (-l)

    def budget_sum(self) -> float:
        return self.eps / 3.0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class Candidate:
    """A dictionary element normalized to unit size (C1 bound or sup norm)."""

    label: str
    item: Any                    # PerturbationField or ScalarField
    size: float = 1.0

    def to_dict(self) -> dict:
        return {"label": self.label, "config": self.item.to_config()}


@dataclass
class SimplificationReport:
    mode: str
    plan: dict
    iterations: list = field(default_factory=list)
    success: bool = False
    final_problem: dict | None = None
    eigenvalues: list = field(default_factory=list)
    intervals: list | None = None
    min_relative_gap: float | None = None
    rel_tol: float | None = None
    total_norm: float = 0.0
    composite: dict | None = None
    failure: dict | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self) -> str:
        return format_json(self.to_dict())


# --------------------------------------------------------------------------
# dictionary
# --------------------------------------------------------------------------

def _domain_candidates(domain, plan: SimplificationPlan) -> list[Candidate]:
    raw: list[tuple[str, PerturbationField]] = []
    if isinstance(domain, StarDomain):
        for k in range(1, plan.fourier_modes + 1):
            raw.append((f"normal cos {k}", normal_mode(domain, k, "cos")))
            raw.append((f"normal sin {k}", normal_mode(domain, k, "sin")))
        if plan.include_affine:
            raw += [("translation x1", translation(domain, [1.0, 0.0])),
                    ("translation x2", translation(domain, [0.0, 1.0])),
                    ("dilation", dilation(domain)),
                    ("shear diag", AffineField(domain, (0.0, 0.0), ((1.0, 0.0), (0.0, -1.0)))),
                    ("shear offdiag", AffineField(domain, (0.0, 0.0), ((0.0, 1.0), (1.0, 0.0))))]
    else:
        for k in range(1, plan.fourier_modes + 1):
            raw.append((f"fourier cos {k}", FourierField1D(domain, tuple([0.0] * k + [1.0]), ())))
            raw.append((f"fourier sin {k}", FourierField1D(domain, (0.0,), tuple([0.0] * (k - 1) + [1.0]))))
        if plan.include_affine:
            raw += [("translation", translation(domain, [1.0])), ("dilation", dilation(domain))]
    return [Candidate(lbl, f.scaled_to_norm(1.0)) for lbl, f in raw if not f.is_zero]


def _scalar_candidates(problem: Problem, spec: Spectrum, cl: Cluster, plan: SimplificationPlan) -> list[Candidate]:
    dim = problem.domain.dim
    c = np.asarray(problem.domain.center, dtype=float)
    raw: list[tuple[str, ScalarField]] = []
    exps = [e for e in np.ndindex(*([plan.poly_degree + 1] * dim)) if 1 <= sum(e) <= plan.poly_degree]
    for e in sorted(exps, key=lambda e: (sum(e), e)):
        # monomials in coordinates relative to the center
        raw.append(("x^" + "".join(map(str, e)), _shifted_monomial(c, e)))
    if plan.cluster_products:
        basis = spec.operator.basis
        for i in cl.indices:
            for j in cl.indices:
                if j >= i:
                    raw.append((f"phi{i + 1}*phi{j + 1}",
                                EigenProductScalar(basis, spec.eigenvectors[:, i].copy(),
                                                   spec.eigenvectors[:, j].copy(), f"phi{i + 1}*phi{j + 1}")))
    out = []
    for lbl, f in raw:
        nrm = problem.sup_norm(f)
        if nrm > 0:
            out.append(Candidate(lbl, f.scaled(1.0 / nrm)))
    return out


def _shifted_monomial(c: np.ndarray, e: tuple) -> ScalarField:
    """Π (x_d - c_d)^{e_d} expanded into plain monomials."""
    terms: dict = {}
    for ks in product(*[range(ed + 1) for ed in e]):
        coef = 1.0
        for ed, k, cd in zip(e, ks, c):
            coef *= comb(ed, k) * (-cd) ** (ed - k)
        if coef != 0.0:
            terms[tuple(ks)] = terms.get(tuple(ks), 0.0) + coef
    return PolynomialScalar(tuple((v, k) for k, v in sorted(terms.items())))


def candidates(problem: Problem, spec: Spectrum, cl: Cluster, plan: SimplificationPlan) -> list[Candidate]:
    if plan.mode == "domain":
        return _domain_candidates(problem.domain, plan)
    return _scalar_candidates(problem, spec, cl, plan)


def splitting_for(cand: Candidate, cl: Cluster, spec: Spectrum, mode: str) -> SplittingMatrix:
    if mode == "domain":
        return splitting_matrix_domain(cl, spec, cand.item)
    if mode == "potential":
        return splitting_matrix_potential(cl, spec, cand.item)
    return splitting_matrix_weight(cl, spec, cand.item)


def select_perturbation(cl: Cluster, spec: Spectrum, plan: SimplificationPlan, problem: Problem):
    """Dictionary element with the largest deviation per unit size."""
    if cl.size < 2:
        raise ConfigError("select_perturbation needs a cluster of size >= 2")
    best, scores = None, []
    for cand in candidates(problem, spec, cl, plan):
        M = splitting_for(cand, cl, spec, plan.mode)
        score = M.deviation / cand.size
        scores.append({"label": cand.label, "deviation": M.deviation})
        if best is None or score > best[2]:
            best = (cand, M, score)
    floor = 1e-10 * max(abs(cl.value), 1.0)
    if best is None or best[2] <= floor:
        raise NoSplittingCandidate("no dictionary element splits the cluster",
                                   {"cluster": cl.to_dict(), "scores": scores})
    log.info("cluster %s: selected %s (deviation %.4g)", cl.to_dict()["indices"], best[0].label, best[1].deviation)
    return best[0], best[1], scores


# --------------------------------------------------------------------------
# amplitude search
# --------------------------------------------------------------------------

def apply_candidate(problem: Problem, cand: Candidate, t: float, mode: str) -> Problem:
    if mode == "domain":
        psi = cand.item.with_amplitude(cand.item.amplitude * t)
        return problem.with_domain(apply_perturbation(problem.domain, psi))
    f = cand.item.scaled(t)
    return problem.add_potential(f) if mode == "potential" else problem.add_weight(f)


def _cluster_opened(lam: np.ndarray, cl: Cluster, tol: float) -> bool:
    gaps = [relative_gap(lam[i], lam[i + 1]) for i in range(cl.start, cl.stop - 1)]
    return bool(gaps) and bool(max(gaps) >= tol)


def _inside(lam: np.ndarray, certified: dict) -> bool:
    return all(lo < lam[i] < hi for i, (lo, hi) in certified.items())


def amplitude_search(cand: Candidate, cl: Cluster, plan: SimplificationPlan, problem: Problem,
                     sigma: float, certified: dict, tol: float):
    """Largest t = σ/2^j (j ≤ max_halvings) that opens the cluster and keeps
    certified eigenvalues inside their intervals. Returns (t, problem, spectrum, halvings)."""
    t = sigma
    tried = []
    k = min(plan.q + EXTRA_EIGENVALUES, problem.operator.size)
    for j in range(plan.max_halvings + 1):
        try:
            new = apply_candidate(problem, cand, t, plan.mode)
            spec = solve(new.operator, min(k, new.operator.size))
        except FraclabError as exc:
            tried.append({"t": t, "error": str(exc)})
            t *= 0.5
            continue
        lam = spec.eigenvalues
        opened = _cluster_opened(lam, cl, tol)
        kept = bool(_inside(lam, certified))
        tried.append({"t": t, "opened": opened, "kept": kept,
                      "eigenvalues": lam[cl.start:cl.stop].tolist()})
        if opened and kept:
            return t, new, spec, j
        t *= 0.5
    raise AmplitudeExhausted(f"no amplitude up to {sigma:.3g} opens cluster {cl.to_dict()['indices']}",
                             {"attempts": tried, "budget": sigma})


# --------------------------------------------------------------------------
# loop
# --------------------------------------------------------------------------

def _certify(lam: np.ndarray, q: int, tol: float) -> dict:
    """Isolating intervals of the eigenvalues among the first q that are simple."""
    out = {}
    m = min(q + 1, len(lam))
    for i in range(min(q, len(lam))):
        nb = [j for j in (i - 1, i + 1) if 0 <= j < m]
        if all(relative_gap(lam[i], lam[j]) >= tol for j in nb):
            r = 0.45 * min(abs(lam[j] - lam[i]) for j in nb) if nb else tol * abs(lam[i])
            out[i] = (float(lam[i] - r), float(lam[i] + r))
    return out


def first_nonsimple(lam: np.ndarray, q: int, tol: float) -> Cluster | None:
    for cl in cluster(lam[:min(q + 1, len(lam))], tol):
        if cl.start < q and cl.size > 1:
            return cl
    return None


def simplify(problem: Problem, plan: SimplificationPlan) -> SimplificationReport:
    report = SimplificationReport(mode=plan.mode, plan=plan.to_dict())
    fields, budgets = [], []
    op = problem.operator
    tol = plan.rel_tol if plan.rel_tol is not None else PLAN_TOLERANCE.get(op.meta.kind, 1e-3)
    report.rel_tol = tol
    k = min(plan.q + EXTRA_EIGENVALUES, op.size)
    if plan.q > op.size:
        raise ConfigError(f"q={plan.q} exceeds the discrete problem size {op.size}")
    spec = solve(op, k)
    it = 0
    try:
        while True:
            lam = spec.eigenvalues
            cl = first_nonsimple(lam, plan.q, tol)
            if cl is None:
                break
            if it >= plan.max_iterations:
                raise MaxIterations(f"{plan.max_iterations} iterations without simplifying the first {plan.q}")
            l = it + 1
            sigma = plan.budget(l)
            certified = _certify(lam, plan.q, tol)
            simple_before = len(certified)
            cand, M, scores = select_perturbation(cl, spec, plan, problem)
            t, new_problem, new_spec, halvings = amplitude_search(cand, cl, plan, problem, sigma, certified, tol)
            new_lam = new_spec.eigenvalues
            record = {
                "iteration": l,
                "cluster": cl.to_dict(),
                "candidate": cand.to_dict(),
                "amplitude": t,
                "budget": sigma,
                "halvings": halvings,
                "deviation": M.deviation,
                "splitting_slopes": M.slopes.tolist(),
                "predicted_gap": float(t * np.ptp(M.slopes)),
                "observed_gap": float(np.max(np.diff(new_lam[cl.start:cl.stop]))),
                "scores": scores,
                "eigenvalues_before": lam[:plan.q + 1].tolist(),
                "eigenvalues_after": new_lam[:plan.q + 1].tolist(),
                "certified_before": {str(i + 1): v for i, v in certified.items()},
                "simple_before": simple_before,
                "simple_after": len(_certify(new_lam, plan.q, tol)),
            }
            report.iterations.append(record)
            log.info("iteration %d: %s at t=%.4g (budget %.4g), eigenvalues %s", l, cand.label, t, sigma,
                     np.array2string(new_lam[:plan.q + 1], precision=6))
            if plan.mode == "domain":
                fields.append(cand.item.with_amplitude(cand.item.amplitude * t))
                budgets.append(sigma)
            problem, spec = new_problem, new_spec
            it += 1
    except FraclabError as exc:
        report.failure = {"error": type(exc).__name__, "message": str(exc), "diagnostics": exc.diagnostics}
        exc.diagnostics = dict(exc.diagnostics, report=report.to_dict())
        raise
    lam = spec.eigenvalues
    intervals = isolating_intervals(lam, plan.q, tol)
    report.success = intervals is not None
    report.intervals = intervals
    report.eigenvalues = lam[:plan.q].tolist()
    top = lam[:min(plan.q + 1, len(lam))]
    report.min_relative_gap = float(min(relative_gap(a, b) for a, b in zip(top[:-1], top[1:]))) if len(top) > 1 else None
    report.final_problem = problem.to_config()
    if fields:
        comp = compose_maps(fields, budgets)
        report.total_norm = comp.total_norm
        report.composite = {"norms": list(comp.norms), "budgets": list(budgets),
                            "step_bounds": list(comp.step_bounds), "chain_bounds": list(comp.chain_bounds),
                            "distance_to_identity_bound": comp.distance_to_identity_bound,
                            "budget_sum_bound": plan.budget_sum()}
    elif plan.mode != "domain":
        report.total_norm = float(sum(r["amplitude"] for r in report.iterations))
    return report
