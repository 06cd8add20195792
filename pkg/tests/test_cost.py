"""Cost models, the maps Y and T_u, the MTW tensor and the c-transform."""
import numpy as np
import pytest

from quotient_transport import cost as cm
from quotient_transport.errors import EmptySampleSet, NoConvergence, NotOrthogonal, SingularJacobian
from quotient_transport.geometry import disc


def _pts(rng, m=6, scale=0.6):
    return rng.uniform(-scale, scale, (m, 2)), rng.uniform(-scale, scale, (m, 2))


@pytest.mark.parametrize("model", [cm.QuadraticCost(), cm.PerturbedQuadraticCost(0.05)],
                         ids=["quadratic", "perturbed"])
def test_closed_forms_match_finite_differences(model, rng):
    twin = cm.fd_twin(model)
    x, y = _pts(rng)
    tols = {"c_x": 1e-9, "c_y": 1e-9, "c_xx": 1e-6, "c_yy": 1e-6, "c_xy": 1e-6,
            "c_xxy": 1e-4, "c_xyy": 1e-4, "c_xxyy": 2e-3}
    for name, tol in tols.items():
        np.testing.assert_allclose(getattr(model, name)(x, y), getattr(twin, name)(x, y), atol=tol,
                                   err_msg=name)


def test_quadratic_cost_closed_forms():
    q = cm.QuadraticCost()
    x, y = np.array([1.0, 2.0]), np.array([0.5, -1.0])
    assert q.c(x, y) == pytest.approx(0.5 * (0.25 + 9.0))
    np.testing.assert_array_equal(q.c_xy(x, y), -np.eye(2))
    # Y(x, p) = x - p and A = I
    np.testing.assert_allclose(cm.y_map(q, x, np.array([0.3, 0.1])), x - [0.3, 0.1], atol=1e-14)
    np.testing.assert_array_equal(cm.a_matrix(q, x, np.zeros(2)), np.eye(2))
    np.testing.assert_array_equal(cm.a_matrix_dp(q, x, np.zeros(2)), 0.0)


def test_y_map_inverts_c_x(rng):
    model = cm.PerturbedQuadraticCost(0.05)
    x, y = _pts(rng, 20)
    p = model.c_x(x, y)
    np.testing.assert_allclose(cm.y_map(model, x, p), y, atol=1e-9)
    np.testing.assert_allclose(cm.t_map(model, x, p), y, atol=1e-9)


def test_a_matrix_derivative_chain_rule_matches_fd(rng):
    model = cm.PerturbedQuadraticCost(0.05)
    x, y = _pts(rng, 5)
    p = model.c_x(x, y)
    chain = cm.a_matrix_dp(model, x, p, Y=y)
    fd = cm.a_matrix_dp(model, x, p, Y=y, method="fd")
    np.testing.assert_allclose(chain, fd, atol=1e-7)


def test_y_map_failure_modes():
    box = cm.PerturbedQuadraticCost(0.05, box=(np.array([-1.0, -1.0]), np.array([1.0, 1.0])))
    with pytest.raises(NoConvergence):
        cm.y_map(box, np.zeros(2), np.array([50.0, 0.0]))

    class Degenerate(cm.CostModel):
        name = "degenerate"

        def c(self, x, y):
            return np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)

    with pytest.raises(SingularJacobian):
        cm.mixed_inverse(Degenerate(), np.zeros(2), np.zeros(2))


def test_mtw_vanishes_for_quadratic_cost(rng):
    q = cm.QuadraticCost()
    x, y = _pts(rng, 200)
    xi, eta = cm._unit_pairs(rng, 200, 2)
    assert np.max(np.abs(cm.mtw_values(q, x, y, xi, eta))) == 0.0
    s = cm.MtwSample(x[0], y[0], xi[0], eta[0])
    assert cm.mtw_contraction(q, s) == 0.0
    with pytest.raises(NotOrthogonal):
        cm.mtw_values(q, x[:1], y[:1], np.array([[1.0, 0.0]]), np.array([[1.0, 1.0]]))
    with pytest.raises(ValueError):
        cm.mtw_contraction(q, cm.MtwSample(x[0], y[0], [2.0, 0.0], [0.0, 1.0]))


def test_mtw_matches_finite_difference_cost(rng):
    model = cm.PerturbedQuadraticCost(0.05)
    x, y = _pts(rng, 4, 0.5)
    xi, eta = cm._unit_pairs(rng, 4, 2)
    exact = cm.mtw_values(model, x, y, xi, eta)
    approx = cm.mtw_values(cm.fd_twin(model), x, y, xi, eta)
    np.testing.assert_allclose(exact, approx, atol=5e-3)


def test_classification_labels_and_determinism():
    rep = cm.classify_a3(cm.QuadraticCost(), 1000, disc(), disc(), seed=3)
    assert rep.classification == "A3w-only"
    assert rep.min_value == 0.0
    pert = cm.PerturbedQuadraticCost(0.01)
    a = cm.classify_a3(pert, 2000, disc(), disc(), seed=0)
    b = cm.classify_a3(pert, 2000, disc(), disc(), seed=0)
    assert a.to_json() == b.to_json()
    assert a.classification == "violated"
    w = a.witness
    assert cm.mtw_values(pert, w.x, w.y, w.xi, w.eta) == pytest.approx(a.min_value)
    with pytest.raises(EmptySampleSet):
        cm.classify_a3(pert, 0, disc(), disc())


def test_c_transform_of_hemisphere_quadratic():
    """For c = |x-y|^2/2 and the hemisphere over B_r(0), u0(0) = r."""
    q = cm.QuadraticCost()
    r = 0.5
    samples = cm.ball_grid([0.0, 0.0], r, 64, 64)
    assert samples.shape == (1 + 63 * 64, 2)
    val, arg = cm.c_transform(q, cm.hemisphere_psi([0.0, 0.0], r), np.zeros((1, 2)), samples)
    assert val[0] == pytest.approx(r, abs=1e-3)
    assert np.linalg.norm(arg[0]) <= r
    with pytest.raises(EmptySampleSet):
        cm.c_transform(q, cm.hemisphere_psi([0.0, 0.0], r), np.zeros((1, 2)), np.empty((0, 2)))


def test_c_segment_is_straight_for_quadratic_cost():
    q = cm.QuadraticCost()
    anchor = np.array([0.2, -0.1])
    seg = cm.c_segment(q, anchor, np.array([0.0, 0.0]), np.array([1.0, 0.5]), 5)
    # D_y c(x, anchor) = anchor - x  =>  x = anchor - z
    z = np.linspace(0, 1, 5)[:, None] * np.array([1.0, 0.5])
    np.testing.assert_allclose(seg, anchor - z, atol=1e-12)
    star = cm.c_segment(q, anchor, np.array([0.0, 0.0]), np.array([1.0, 0.5]), 5, star=True)
    np.testing.assert_allclose(star, anchor - z, atol=1e-9)
    with pytest.raises(ValueError):
        cm.c_segment(q, anchor, anchor, anchor, 1)


def test_make_cost_and_describe():
    assert cm.make_cost({"kind": "quadratic"}).describe() == {"kind": "quadratic"}
    assert cm.make_cost({"kind": "perturbed", "epsilon": 0.02}).describe()["epsilon"] == 0.02
    with pytest.raises(ValueError):
        cm.make_cost({"kind": "log"})
