import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclab import (AmplitudeExhausted, ConfigError, Interval, Problem, SimplificationPlan, cluster,
                     disk, simplify, solve)
from fraclab.genericity import (PLAN_TOLERANCE, _certify, amplitude_search, candidates,
                                first_nonsimple, select_perturbation)

COARSE_H = 1 / 8


@pytest.fixture(scope="module")
def coarse_disk():
    p = Problem(disk(), 0.5, "grid", h=COARSE_H)
    return p, solve(p.operator, 8)


def test_plan_validation_and_budgets():
    plan = SimplificationPlan(eps=0.2)
    assert [plan.budget(l) for l in (1, 2, 3)] == pytest.approx([0.05, 0.0125, 0.003125])
    assert plan.budget_sum() == pytest.approx(sum(plan.budget(l) for l in range(1, 60)))
    for bad in (dict(mode="shape"), dict(q=0), dict(eps=1.0), dict(rel_tol=0.0), dict(max_halvings=-1)):
        with pytest.raises(ConfigError):
            SimplificationPlan(**bad)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.5, 20), min_size=3, max_size=9), st.integers(1, 6), st.floats(1e-6, 1e-2))
def test_first_nonsimple_and_certify_agree(vals, q, tol):
    lam = np.sort(vals)
    q = min(q, len(lam) - 1)
    cl = first_nonsimple(lam, q, tol)
    cert = _certify(lam, q, tol)
    if cl is None:
        assert sorted(cert) == list(range(q))
    else:
        assert cl.size > 1 and cl.start < q
        assert all(i not in cert for i in cl.indices)
    for i, (a, b) in cert.items():
        assert a < lam[i] < b


def test_interval_needs_no_iterations():
    rep = simplify(Problem(Interval(-1, 1), 0.3, N=48), SimplificationPlan(q=10))
    assert rep.success and rep.iterations == [] and len(rep.intervals) == 10
    assert rep.rel_tol == PLAN_TOLERANCE["spectral1d"]


def test_domain_candidates_have_unit_c1_size(coarse_disk):
    p, spec = coarse_disk
    cl = cluster(spec)[1]
    cands = candidates(p, spec, cl, SimplificationPlan(mode="domain"))
    assert len(cands) == 2 * 6 + 5
    assert all(c.item.c1_norm_bound == pytest.approx(1.0) for c in cands)


def test_scalar_candidates_have_unit_sup_norm(coarse_disk):
    p, spec = coarse_disk
    cl = cluster(spec)[1]
    for mode in ("potential", "weight"):
        cands = candidates(p, spec, cl, SimplificationPlan(mode=mode))
        labels = [c.label for c in cands]
        assert "phi2*phi3" in labels and "x^11" in labels
        assert all(p.sup_norm(c.item) == pytest.approx(1.0) for c in cands)


def test_select_prefers_mixed_eigenproduct_for_potential(coarse_disk):
    p, spec = coarse_disk
    cl = cluster(spec)[1]
    cand, M, scores = select_perturbation(cl, spec, SimplificationPlan(mode="potential"), p)
    assert cand.label == "phi2*phi3"
    assert M.deviation == max(s["deviation"] for s in scores)
    with pytest.raises(ConfigError):
        select_perturbation(cluster(spec)[0], spec, SimplificationPlan(mode="potential"), p)


@pytest.mark.parametrize("mode", ["domain", "potential", "weight"])
def test_simplify_coarse_disk(mode):
    p = Problem(disk(), 0.5, "grid", h=COARSE_H)
    plan = SimplificationPlan(mode=mode, q=3)
    rep = simplify(p, plan)
    assert rep.success and len(rep.iterations) >= 1
    it = rep.iterations[0]
    assert it["amplitude"] <= it["budget"] == plan.budget(1)
    assert it["simple_after"] > it["simple_before"]
    assert rep.min_relative_gap >= rep.rel_tol
    d = json.loads(rep.to_json())
    assert d["mode"] == mode and d["success"] is True
    if mode == "domain":
        assert rep.total_norm <= plan.budget_sum()


def test_amplitude_exhausted_carries_attempts(coarse_disk):
    p, spec = coarse_disk
    plan = SimplificationPlan(mode="potential", q=3, max_halvings=2)
    cl = cluster(spec)[1]
    cand, _, _ = select_perturbation(cl, spec, plan, p)
    # a tolerance no admissible amplitude can reach
    with pytest.raises(AmplitudeExhausted) as err:
        amplitude_search(cand, cl, plan, p, plan.budget(1), _certify(spec.eigenvalues, 3, 0.5), 0.5)
    assert len(err.value.diagnostics["attempts"]) == 3


def test_simplify_failure_attaches_report():
    p = Problem(disk(), 0.5, "grid", h=COARSE_H)
    with pytest.raises(AmplitudeExhausted) as err:
        simplify(p, SimplificationPlan(mode="potential", q=3, rel_tol=0.5, max_halvings=1))
    assert err.value.diagnostics["report"]["failure"]["error"] == "AmplitudeExhausted"
