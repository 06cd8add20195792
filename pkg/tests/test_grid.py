"""Polar grid indexing and accuracy of the sparse derivative operators."""
import numpy as np
import pytest

from quotient_transport.geometry import disc, ellipse
from quotient_transport.solver.grid import GridField, PolarGrid

LEVELS = [(17, 32), (33, 64), (65, 128)]


def f(x):
    a, b = x[..., 0], x[..., 1]
    return np.sin(a + 0.3 * b) + np.exp(0.5 * b) * a * a


def exact_derivatives(x):
    a, b = x[..., 0], x[..., 1]
    s, c, e = np.sin(a + 0.3 * b), np.cos(a + 0.3 * b), np.exp(0.5 * b)
    return {
        "Dx": c + 2 * a * e,
        "Dy": 0.3 * c + 0.5 * e * a * a,
        "Dxx": -s + 2 * e,
        "Dxy": -0.3 * s + a * e,
        "Dyy": -0.09 * s + 0.25 * e * a * a,
    }


def test_indexing_layout():
    g = PolarGrid(disc(), 5, 8)
    assert g.size == 1 + 4 * 8
    assert int(g.idx(0, 3)) == 0
    assert int(g.idx(1, 0)) == 1
    assert int(g.idx(2, 9)) == 1 + 8 + 1  # angle index wraps
    assert np.all(g.r[g.boundary] == 1.0)
    np.testing.assert_allclose(g.x[int(g.idx(4, 2))], [0.0, 1.0], atol=1e-15)
    with pytest.raises(ValueError):
        PolarGrid(disc(), 3, 8)
    with pytest.raises(ValueError):
        PolarGrid(disc(), 5, 9)


def test_exact_cases():
    """|x|^2 on a disc is reproduced at every node; any quadratic at the pole."""
    g = PolarGrid(disc(), 9, 16)
    u = g.sample(lambda x: np.sum(x * x, axis=1))
    np.testing.assert_allclose(g.hessian(u), np.broadcast_to(2 * np.eye(2), (g.size, 2, 2)), atol=1e-10)
    np.testing.assert_allclose(g.gradient(u), 2 * g.x, atol=1e-12)
    g = PolarGrid(ellipse(semiaxes=(1.3, 0.8)), 9, 16)
    u = g.sample(lambda x: 1.5 * x[:, 0] ** 2 - 0.7 * x[:, 0] * x[:, 1] + 0.4 * x[:, 1] ** 2 + x[:, 1])
    np.testing.assert_allclose(g.hessian(u)[0], [[3.0, -0.7], [-0.7, 0.8]], atol=1e-12)
    np.testing.assert_allclose(g.gradient(u)[0], [0.0, 1.0], atol=1e-12)


@pytest.mark.parametrize("dom", [disc(), ellipse(semiaxes=(1.3, 0.8))], ids=["disc", "ellipse"])
def test_second_order_away_from_the_pole_rings(dom):
    far, full = [], []
    for nr, nt in LEVELS:
        g = PolarGrid(dom, nr, nt)
        u = g.sample(f)
        ex = exact_derivatives(g.x)
        mask = (g.r >= 0.25) | (g.r_index == 0)
        errs = {k: np.abs(getattr(g, k) @ u - v) for k, v in ex.items()}
        far.append([np.max(e[mask]) for e in errs.values()])
        full.append([np.max(e) for e in errs.values()])
    far, full = np.array(far), np.array(full)
    order_far = np.log2(far[:-1] / far[1:])
    order_full = np.log2(full[:-1] / full[1:])
    assert np.all(order_far >= 1.7), order_far
    # the rings next to the pole see an h_theta^2 / r error: first order in sup norm
    assert np.all(order_full >= 0.9), order_full
    assert np.all(order_full[:, :2] >= 1.8)  # gradients are second order everywhere


def test_grid_field_validation():
    g = PolarGrid(disc(), 5, 8)
    fld = GridField(g, np.zeros(g.size))
    assert fld.du.shape == (g.size, 2) and fld.d2u.shape == (g.size, 2, 2)
    with pytest.raises(ValueError):
        GridField(g, np.zeros(3))
    with pytest.raises(ValueError):
        GridField(g, np.full(g.size, np.nan))
    assert fld.copy().u is not fld.u
