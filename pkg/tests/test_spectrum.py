import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from fraclab import (ConfigError, Interval, TrackingAmbiguous, assemble_1d_spectral, cluster,
                     isolating_intervals, renormalize, solve, spectrum_csv, track)
from fraclab.discretization.operator import BasisMeta, DiscreteOperator
from fraclab.spectrum import ENERGY, cluster_ids, relative_gap


def _pencil(A, M=None):
    A = np.asarray(A, dtype=float)
    M = np.eye(len(A)) if M is None else M
    return DiscreteOperator(A, M, BasisMeta("grid1d", 0.5), basis=None)


def test_solve_matches_scipy_and_is_mass_orthonormal():
    op = assemble_1d_spectral(0.4, 24, Interval(-1, 2))
    spec = solve(op, 6)
    ref = linalg.eigh(op.stiffness, op.mass, eigvals_only=True)[:6]
    assert spec.eigenvalues == pytest.approx(ref, rel=1e-10)
    assert np.allclose(spec.gram(), np.eye(6), atol=1e-10)
    assert spec.residuals().max() < 1e-12


def test_solve_rejects_bad_k():
    op = assemble_1d_spectral(0.4, 8, Interval(-1, 1))
    with pytest.raises(ConfigError):
        solve(op, 9)


def test_energy_normalization():
    spec = renormalize(solve(assemble_1d_spectral(0.6, 16, Interval(-1, 1)), 4), ENERGY)
    assert np.allclose(spec.gram(ENERGY), np.eye(4), atol=1e-10)
    with pytest.raises(ConfigError):
        renormalize(spec, "h1")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=12), st.floats(1e-6, 0.5))
def test_clusters_partition_sorted_values(vals, tol):
    lam = np.sort(vals)
    cls = cluster(lam, tol)
    assert cls[0].start == 0 and cls[-1].stop == len(lam)
    for a, b in zip(cls[:-1], cls[1:]):
        assert a.stop == b.start
        assert relative_gap(lam[a.stop - 1], lam[b.start]) >= tol
    for c in cls:
        for i in range(c.start, c.stop - 1):
            assert relative_gap(lam[i], lam[i + 1]) < tol
    ids = cluster_ids(cls)
    assert ids.min() == 1 and ids.max() == len(cls)


def test_cluster_needs_tolerance_for_arrays():
    with pytest.raises(ConfigError):
        cluster(np.array([1.0, 2.0]))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.1, 10), min_size=2, max_size=10, unique=True), st.floats(1e-6, 1e-2))
def test_isolating_intervals_are_disjoint_and_contain(vals, tol):
    lam = np.sort(vals)
    q = len(lam) - 1
    iv = isolating_intervals(lam, q, tol)
    simple = all(relative_gap(a, b) >= tol for a, b in zip(lam[:q], lam[1:q + 1]))
    assert (iv is not None) == simple
    if iv is not None:
        for (a, b), l in zip(iv, lam):
            assert a < l < b
        for (a0, b0), (a1, b1) in zip(iv[:-1], iv[1:]):
            assert b0 < a1


def test_track_follows_a_crossing():
    # λ₁(t) = 1 + t, λ₂(t) = 1.5 - t cross at t = 0.25 with fixed eigenvectors
    ts = np.linspace(0, 0.5, 11)
    pencils = [_pencil(np.diag([1 + t, 1.5 - t, 3.0])) for t in ts]
    tr = track(pencils, 2, ts, rel_tol=1e-9, extra=1)
    assert np.allclose(tr.paths[:, 0], 1 + ts)
    assert np.allclose(tr.paths[:, 1], 1.5 - ts)
    assert tr.crossings and tr.crossings[0][1:] == (1, 2)


def test_track_slopes_richardson_exact_for_cubic_paths():
    ts = np.array([-0.2, -0.1, 0.1, 0.2])
    pencils = [_pencil(np.diag([2 + 3 * t + t ** 2 + 5 * t ** 3, 7.0])) for t in ts]
    tr = track(pencils, 1, ts, rel_tol=1e-9, extra=1)
    assert tr.slopes(0.0)[0] == pytest.approx(3.0, rel=1e-12)


def test_track_through_degenerate_start_uses_subspace():
    # a degenerate pair at t = 0 split by a rotated perturbation
    R = np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]])
    P = R @ np.diag([1.0, -1.0]) @ R.T
    ts = np.array([0.0, 0.01, 0.02])
    pencils = [_pencil(np.block([[2 * np.eye(2) + t * P, np.zeros((2, 1))], [np.zeros((1, 2)), 5 * np.eye(1)]]))
               for t in ts]
    tr = track(pencils, 2, ts, rel_tol=1e-6, extra=1)
    assert tr.overlaps.min() > 0.99


def test_track_ambiguous_raises():
    # a reflection sending e1 to (1, 1, 1)/√3 leaves every overlap at 0.577
    A0 = np.diag([1.0, 2.0, 3.0])
    v = np.array([1.0, 0.0, 0.0]) - np.ones(3) / np.sqrt(3)
    v /= np.linalg.norm(v)
    Q = np.eye(3) - 2 * np.outer(v, v)
    with pytest.raises(TrackingAmbiguous):
        track([_pencil(A0), _pencil(Q @ A0 @ Q.T)], 1, extra=1, threshold=0.6)


def test_spectrum_csv_header_and_rows():
    spec = solve(assemble_1d_spectral(0.5, 16, Interval(-1, 1)), 3)
    lines = spectrum_csv(spec).splitlines()
    assert lines[0] == "s,k,lambda,cluster"
    assert [l.split(",")[1] for l in lines[1:]] == ["1", "2", "3"]
    assert float(lines[1].split(",")[2]) == spec.eigenvalues[0]
