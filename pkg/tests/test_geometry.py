import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclab import (AffineField, BudgetExceeded, ConfigError, FourierField1D, Interval,
                     NormalFourierField, StarDomain, apply_perturbation, compose_maps, dilation,
                     disk, domain_from_config, field_from_config, normal_mode, translation)
from fraclab.geometry import CUTOFF_WIDTH, boundary_distance

finite = st.floats(-3, 3, allow_nan=False)


def test_interval_validation():
    with pytest.raises(ConfigError):
        Interval(1.0, 1.0)
    with pytest.raises(ConfigError):
        Interval(0.0, np.inf)


def test_star_domain_rejects_nonpositive_radius():
    with pytest.raises(ConfigError):
        StarDomain(cos=(0.5, 0.8))


def test_disk_boundary_quadrature_perimeter_and_normals():
    d = disk(1.5, (0.2, -0.1))
    bq = d.boundary_quadrature(128)
    assert bq.integrate(np.ones(len(bq.weights))) == pytest.approx(2 * np.pi * 1.5, rel=1e-12)
    assert np.allclose(np.linalg.norm(bq.normals, axis=1), 1.0)
    radial = (bq.nodes - np.array([0.2, -0.1])) / 1.5
    assert np.allclose(radial, bq.normals)


def test_star_boundary_distance_matches_disk():
    d = disk()
    x = np.array([[0.0, 0.0], [0.5, 0.1], [0.9, -0.3]])
    assert np.allclose(boundary_distance(d, x), 1 - np.linalg.norm(x, axis=1), atol=1e-10)


def test_dilation_and_translation_images():
    I = Interval(-1.0, 2.0)
    assert apply_perturbation(I, dilation(I, 0.1)) == Interval(-1.1, 2.2)
    out = apply_perturbation(I, translation(I, [1.0], 0.25))
    assert (out.a, out.b) == pytest.approx((-0.75, 2.25))
    d = disk(1.0)
    big = apply_perturbation(d, dilation(d, 0.2))
    assert big.cos[0] == pytest.approx(1.2, abs=1e-12)
    assert max(map(abs, big.cos[1:] + big.sin), default=0.0) < 1e-12


def test_normal_mode_moves_boundary_along_normal():
    d = disk()
    t = 0.01
    out = apply_perturbation(d, normal_mode(d, 3, "sin", t))
    th = np.linspace(0, 2 * np.pi, 50)
    assert np.allclose(out.radius(th), 1 + t * np.sin(3 * th), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(finite, min_size=2, max_size=4), st.lists(finite, min_size=1, max_size=3),
       st.floats(-0.9, 0.9))
def test_fourier_1d_jacobian_matches_finite_difference(gc, gs, x0):
    I = Interval(-1.0, 1.0)
    f = FourierField1D(I, gc=tuple(gc), gs=tuple(gs), amplitude=0.3)
    e = 1e-6
    fd = (f(np.array([[x0 + e]])) - f(np.array([[x0 - e]])))[0, 0] / (2 * e)
    assert f.jacobian(np.array([[x0]]))[0, 0, 0] == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_fourier_1d_is_compactly_supported():
    I = Interval(0.0, 2.0)
    f = FourierField1D(I, gc=(0.3, 1.0), gs=(0.5,))
    far = np.array([[-1.0 - CUTOFF_WIDTH - 1e-9], [3.0 + CUTOFF_WIDTH + 1e-9], [10.0]])
    assert np.all(f(far) == 0.0)
    assert sorted(f.kinks()) == pytest.approx([1 - 1.4, 1 + 1.4])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 2 * np.pi))
def test_normal_field_jacobian_matches_finite_difference(rho, th):
    d = StarDomain(cos=(1.0, 0.0, 0.1), sin=(0.0, 0.05))
    f = NormalFourierField(d, gc=(0.2, 0.0, 1.0), gs=(0.4,))
    x = d.center + rho * d.radius(th) * np.array([np.cos(th), np.sin(th)])
    e = 1e-6
    J = np.stack([(f(x + e * v) - f(x - e * v))[0] / (2 * e) for v in np.eye(2)], 1)
    assert np.allclose(f.jacobian(x[None])[0], J, atol=1e-6)


def test_scaled_to_norm_and_linearity():
    d = disk()
    f = normal_mode(d, 2).scaled_to_norm(0.05)
    assert f.c1_norm_bound == pytest.approx(0.05, rel=1e-12)
    x = np.array([[0.9, 0.1]])
    assert np.allclose(f.with_amplitude(2 * f.amplitude)(x), 2 * f(x))


def test_compose_maps_budget_and_bounds():
    d = disk()
    fs = [normal_mode(d, k).scaled_to_norm(0.1 * 4.0 ** -(k)) for k in (1, 2, 3)]
    comp = compose_maps(fs, [0.1 * 4.0 ** -k for k in (1, 2, 3)])
    assert comp.total_norm <= 0.1 / 3
    assert comp.distance_to_identity_bound >= comp.total_norm
    x = np.array([[0.3, 0.2]])
    y = x + fs[0](x)
    y = y + fs[1](y)
    y = y + fs[2](y)
    assert np.allclose(comp(x), y)
    with pytest.raises(BudgetExceeded):
        compose_maps(fs, [0.001, 0.1, 0.1])


def test_affine_c1_norm_is_bounded_on_neighbourhood():
    I = Interval(-1.0, 1.0)
    f = AffineField(I, c=(0.5,), A=((2.0,),))
    # sup |c + A x| + |A| over |x| <= 1.45, times the 1.05 safety factor
    assert f.c1_norm_bound == pytest.approx(1.05 * (0.5 + 2 * 1.45 + 2.0), rel=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 5))
def test_domain_config_round_trip(a, L):
    I = Interval(a, a + L)
    assert domain_from_config(I.to_config()) == I
    d = StarDomain(center=(a, 0.0), cos=(L, 0.1 * L), sin=(0.05 * L,))
    assert domain_from_config(d.to_config()) == d


def test_field_config_round_trip():
    d = disk()
    for f in (normal_mode(d, 2, t=0.3), dilation(d, 0.2), translation(d, [1.0, 2.0]),
              normal_mode(d, 1) + dilation(d)):
        g = field_from_config(f.to_config(), d)
        x = np.array([[0.2, 0.7], [-0.5, 0.1]])
        assert np.allclose(f(x), g(x))
    with pytest.raises(ConfigError, match="field.family"):
        field_from_config({"family": "nope"}, d)
