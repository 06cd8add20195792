"""Boundary diagnostics on fields with known closed-form values."""
import numpy as np
import pytest

from manufactured import radial_problem
from quotient_transport import estimates as est
from quotient_transport.errors import SingularW
from quotient_transport.geometry import BarrierParams
from quotient_transport.solver.grid import GridField, PolarGrid


def field_of(spec, func):
    g = PolarGrid(spec.source, spec.nr, spec.nt)
    return GridField(g, g.sample(func))


@pytest.fixture
def exact_field():
    spec = radial_problem(17, 32)
    return spec, field_of(spec, spec.exact)


def test_obliqueness_is_two_on_the_exact_solution(exact_field):
    """T(x) = -x, beta = 2x and gamma = x on the unit circle."""
    spec, u = exact_field
    rep = est.obliqueness_report(u, spec)
    np.testing.assert_allclose(rep["values"], 2.0, atol=1e-10)
    assert len(rep["nodes"]) == spec.nt
    assert rep["argmin_node"] in rep["nodes"]
    # the barrier slope scales the result linearly
    assert est.obliqueness_report(u, spec, BarrierParams(1.0, 3.0))["min"] == pytest.approx(3.0)


def test_urbas_identity_holds_for_identity_w(exact_field):
    spec, u = exact_field
    assert est.urbas_identity_check(u, spec) < 1e-14
    worst, table = est.urbas_identity_check(u, spec, per_node=True)
    np.testing.assert_allclose(table["lhs"], 4.0)
    np.testing.assert_allclose(table["rhs"], 4.0)


def test_urbas_identity_residual_for_anisotropic_w():
    """u = 1.5 x^2 + y^2: w = diag(2, 1), Y = (-2x, -y), beta = -2Y = (4 g1, 2 g2).

    The barrier gradient on the disc is 2Y at every point, so both sides
    have closed forms in the normal ``gamma = (g1, g2)``. The grid gradient
    of a non-radial quadratic carries an ``O(h_theta^2)`` angular error, so
    a fine angular resolution and a matching tolerance are used.
    """
    spec = radial_problem(9, 256)
    u = field_of(spec, lambda x: 1.5 * x[:, 0] ** 2 + x[:, 1] ** 2)
    _, table = est.urbas_identity_check(u, spec, per_node=True)
    g = u.grid
    th = g.theta[g.boundary]
    g1, g2 = np.cos(th), np.sin(th)
    lhs = (4 * g1 ** 2 + 2 * g2 ** 2) ** 2
    rhs = (g1 ** 2 / 2 + g2 ** 2) * (32 * g1 ** 2 + 4 * g2 ** 2)
    np.testing.assert_allclose(table["lhs"], lhs, rtol=2e-3)
    np.testing.assert_allclose(table["rhs"], rhs, rtol=2e-3)
    # e.g. 45 degrees: lhs 9, rhs 13.5; Cauchy-Schwarz keeps rhs >= lhs
    assert np.all(rhs >= lhs - 1e-12)
    assert max(table["residual"]) == pytest.approx(np.max((rhs - lhs) / lhs), rel=2e-3)


def test_singular_w_is_reported_not_raised_in_report():
    spec = radial_problem(17, 32)
    u = field_of(spec, lambda x: 0.5 * np.sum(x * x, axis=1))  # w = 0
    with pytest.raises(SingularW):
        est.urbas_identity_check(u, spec)
    rep = est.bounds_report(u, spec)
    assert rep.urbas_residual_max is None
    assert any(n.startswith("SingularW") for n in rep.notes)
    assert not rep.hard_pass


def test_bounds_report_values_and_thresholds(exact_field):
    spec, u = exact_field
    rep = est.bounds_report(u, spec, {"obliqueness_min": 1.9, "image_hausdorff": 0.1,
                                      "urbas_residual_max": 1e-10, "c2_ratio": 0.5})
    assert rep.hard_pass
    assert rep.lambda_min_w == pytest.approx(1.0)
    assert rep.c0_bounds["sup_abs_u"] == pytest.approx(1.0)
    # |D^2 u| = 2 everywhere: ratio 2 / (1 + 2)
    assert rep.c2_bounds["ratio"] == pytest.approx(2 / 3)
    assert rep.chi_min == pytest.approx(2.0)
    assert rep.checks == {"obliqueness_min": True, "image_hausdorff": True,
                          "urbas_residual_max": True, "c2_ratio": False}
    assert rep.image_hausdorff < 1e-10 + 0.01  # T maps nodes onto the circle; polygon sag only
    js = rep.to_json()
    assert "tables" not in js and "tables" in rep.to_json(tables=True)


def test_image_hausdorff_detects_a_shrunken_image():
    spec = radial_problem(17, 32)
    # u = 0.75 |x|^2 maps the boundary onto the circle of radius 1/2
    u = field_of(spec, lambda x: 0.75 * np.sum(x * x, axis=1))
    # far side: target nodes to the 32-gon inscribed in the radius-1/2 circle
    assert est.image_hausdorff(u, spec) == pytest.approx(1 - 0.5 * np.cos(np.pi / 32), abs=1e-9)


def test_polyline_distance():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    pts = np.array([[0.5, -0.5], [0.5, 0.5], [2.0, 2.0]])
    np.testing.assert_allclose(est._segment_distance(pts, square), [0.5, 0.5, np.sqrt(2)])


def test_refinement_drift():
    spec = radial_problem(9, 16)
    reps = [est.bounds_report(field_of(radial_problem(nr, nt), spec.exact), radial_problem(nr, nt))
            for nr, nt in [(9, 16), (17, 32)]]
    drift = est.refinement_drift(reps)
    assert drift["sup_abs_u"][0] == pytest.approx(0.0, abs=1e-12)
    assert len(drift["urbas_ratio"]) == 1
