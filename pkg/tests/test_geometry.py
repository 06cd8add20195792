"""Domains, frames, distances and convexity checks."""
import numpy as np
import pytest

from quotient_transport import geometry as geo
from quotient_transport.cost import QuadraticCost


def three_lobe():
    return geo.radial_fourier(a0=1.0, cos=[0.0, 0.0, 0.5])


def test_disc_frame():
    d = geo.disc(radius=2.0)
    fr = geo.boundary_frame(d, np.array([0.0, np.pi / 2]))
    np.testing.assert_allclose(fr.point, [[2, 0], [0, 2]], atol=1e-15)
    np.testing.assert_allclose(fr.normal, [[1, 0], [0, 1]], atol=1e-15)
    np.testing.assert_allclose(fr.curvature, 0.5)


def test_ellipse_curvature_at_vertices():
    e = geo.ellipse(semiaxes=(2.0, 1.0))
    fr = geo.boundary_frame(e, np.array([0.0, np.pi / 2]))
    # a/b^2 at the end of the major axis, b/a^2 at the minor one
    np.testing.assert_allclose(fr.curvature, [2.0, 0.25], rtol=1e-12)


def test_radial_derivatives_against_differences():
    dom = three_lobe()
    th = np.linspace(0, 2 * np.pi, 17)
    h = 1e-5
    np.testing.assert_allclose(dom.rho(th, 1), (dom.rho(th + h) - dom.rho(th - h)) / (2 * h), atol=1e-8)
    np.testing.assert_allclose(dom.rho(th, 2), (dom.rho(th + h, 1) - dom.rho(th - h, 1)) / (2 * h), atol=1e-8)
    e = geo.ellipse(semiaxes=(1.5, 0.7))
    np.testing.assert_allclose(e.rho(th, 2), (e.rho(th + h, 1) - e.rho(th - h, 1)) / (2 * h), atol=1e-6)


def test_signed_distance_disc():
    d = geo.disc()
    x = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 2.0], [0.6, 0.8]])
    np.testing.assert_allclose(geo.signed_distance(d, x), [-1.0, -0.5, 1.0, 0.0], atol=1e-12)
    sd, n = geo.signed_distance(d, np.array([[3.0, 4.0]]), with_normal=True)
    np.testing.assert_allclose(n, [[0.6, 0.8]], atol=1e-12)
    coarse = geo.signed_distance(d, np.array([[0.3, 0.2]]), refine=False)
    assert coarse[0] == pytest.approx(np.hypot(0.3, 0.2) - 1.0, abs=1e-4)


def test_defining_function_barrier_on_disc():
    d = geo.disc()
    y = np.array([[0.3, 0.4], [0.0, 0.0], [0.6, 0.8]])
    phi, grad = geo.defining_function(d, y, geo.BarrierParams(1.0, 2.0))
    # a d^2 - b d with d = 1 - |y| equals |y|^2 - 1
    np.testing.assert_allclose(phi, np.sum(y * y, axis=1) - 1.0, atol=1e-12)
    np.testing.assert_allclose(grad[2], 2 * y[2], atol=1e-12)
    with pytest.raises(ValueError):
        geo.BarrierParams(0.0, 1.0)


def test_containment_and_sampling(rng):
    dom = three_lobe()
    pts = dom.sample_interior(rng, 500)
    assert np.all(dom.contains(pts))
    assert not dom.contains(np.array([5.0, 0.0]))
    assert np.all(dom.contains(dom.interior_grid(4, 8)))


def test_relative_convexity_of_discs():
    rep = geo.relative_c_convexity(geo.disc(), geo.disc(), QuadraticCost())
    assert 0.99 <= rep.delta0 <= 1.01
    rep2 = geo.relative_c_convexity(geo.disc(radius=2.0), geo.disc(), QuadraticCost(), role="c-star")
    assert rep2.delta0 == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(ValueError):
        geo.relative_c_convexity(geo.disc(), geo.disc(), QuadraticCost(), role="other")


def test_three_lobe_is_not_convex():
    dom = three_lobe()
    rep = geo.relative_c_convexity(dom, geo.disc(), QuadraticCost())
    assert rep.delta0 < 0
    # oracle: minimum of the parametric curvature on a fine parameter grid
    th = np.linspace(0, 2 * np.pi, 20001)
    kmin = np.min(geo.boundary_frame(dom, th).curvature)
    assert rep.delta0 == pytest.approx(kmin, rel=1e-3)
    assert dom.contains(rep.witness_y) or np.allclose(rep.witness_y, dom.center)
    assert np.linalg.norm(rep.witness_x - dom.point(rep.witness_theta)) < 1e-12


def test_blend_and_reflected_copy():
    a = geo.disc(radius=1.0)
    b = geo.ellipse(semiaxes=(2.0, 1.0))
    mid = geo.blend(a, b, 0.5)
    th = np.linspace(0, 2 * np.pi, 9)
    np.testing.assert_allclose(mid.rho(th), 0.5 * (a.rho(th) + b.rho(th)))
    r = geo.reflected_copy(b, 0.5, [1.0, 0.0])
    # x -> c - k (x - c0): the vertex (2, 0) lands at angle pi, (-2, 0) at angle 0
    np.testing.assert_allclose(r.point(np.pi), [1.0 - 0.5 * 2.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(r.point(0.0), [1.0 + 0.5 * 2.0, 0.0], atol=1e-14)
    with pytest.raises(ValueError):
        geo.blend(geo.disc(center=(1.0, 0.0)), b, 0.5)


def test_fitted_domain_recovers_ellipse():
    e = geo.ellipse(semiaxes=(1.3, 0.9))
    fit = geo.fitted_domain([0.0, 0.0], e.boundary_nodes(256), modes=40)
    th = np.linspace(0, 2 * np.pi, 101)
    np.testing.assert_allclose(fit.rho(th), e.rho(th), atol=1e-6)
    assert fit.kind == "fitted"


def test_make_domain_and_invalid_radius():
    d = geo.make_domain({"kind": "ellipse", "semiaxes": [2.0, 1.0], "center": [0.5, 0.0]})
    np.testing.assert_allclose(d.point(0.0), [2.5, 0.0])
    with pytest.raises(ValueError):
        geo.make_domain({"kind": "square"})
    with pytest.raises(ValueError):
        geo.radial_fourier(a0=0.5, cos=[1.0])


def test_barrier_condition_check_disc():
    d = geo.disc()
    rep = geo.barrier_condition_check(d, QuadraticCost(), lambda x: np.sum(x * x, axis=-1) - 1.0, 50)
    # D^2 phi = 2 I and D_p A = 0 for the quadratic cost
    assert rep["delta_tilde"] == pytest.approx(2.0, abs=1e-5)
