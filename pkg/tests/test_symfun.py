"""Elementary symmetric functions, the Hessian quotient and its derivatives."""
import itertools
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quotient_transport import _compensated, _kernels_py, symfun
from quotient_transport.errors import ConeViolation
from quotient_transport.symfun import QuotientParams

try:
    from quotient_transport import _kernels
except ImportError:  # pure-Python install
    _kernels = None


def brute_sym(lam, k):
    """S_k by explicit enumeration of k-subsets."""
    return sum(math.prod(c) for c in itertools.combinations(lam, k)) if k >= 0 else 0.0


spectra = st.lists(st.floats(0.1, 10.0), min_size=2, max_size=8)


# --------------------------------------------------------------------------
# worked values
# --------------------------------------------------------------------------

def test_elem_sym_small_examples():
    assert symfun.elem_sym([1, 2, 3], 2) == pytest.approx(11.0, abs=1e-14)
    assert symfun.elem_sym([1, 2, 3], 3) == pytest.approx(6.0, abs=1e-14)
    assert symfun.elem_sym([1, 2, 3], 0) == 1.0
    assert symfun.elem_sym([1, 2, 3], 4) == 0.0
    assert symfun.elem_sym([1, 2, 3], -1) == 0.0


def test_restricted_zeroes_entries():
    # omit the first entry: S_1(0, 2, 3) = 5, S_2(0, 2, 3) = 6
    assert symfun.elem_sym_restricted([1, 2, 3], 1, {0}) == pytest.approx(5.0)
    assert symfun.elem_sym_restricted([1, 2, 3], 2, {0}) == pytest.approx(6.0)
    assert symfun.elem_sym_restricted([1, 2, 3], 1, {0, 2}) == pytest.approx(2.0)
    with pytest.raises(IndexError):
        symfun.elem_sym_restricted([1, 2, 3], 1, {3})


@given(spectra, st.data())
@settings(max_examples=60, deadline=None)
def test_elem_sym_matches_enumeration(lam, data):
    k = data.draw(st.integers(0, len(lam)))
    ref = brute_sym(lam, k)
    assert symfun.elem_sym(lam, k) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_quotient_closed_forms():
    p21 = QuotientParams(2, 1)
    # sigma_{2,1} = l1 l2 / (l1 + l2)
    assert symfun.sigma_quotient([1, 2], p21) == pytest.approx(2 / 3, abs=1e-15)
    np.testing.assert_allclose(symfun.sigma_grad([1, 2], p21), [4 / 9, 1 / 9], atol=1e-15)
    s = 3.0
    expected = np.array([[-2 * 4 / s ** 3, 2 * 2 / s ** 3], [2 * 2 / s ** 3, -2 * 1 / s ** 3]])
    np.testing.assert_allclose(symfun.sigma_hess([1, 2], p21), expected, atol=1e-14)
    assert symfun.sigma_hess([1, 1], p21)[0, 0] == pytest.approx(-0.25, abs=1e-15)
    # geometric mean for l = 0
    assert symfun.sigma_quotient([1, 2, 4], QuotientParams(3, 0)) == pytest.approx(2.0, abs=1e-14)
    assert symfun.sigma_quotient([1, 2, 3], QuotientParams(3, 1)) == pytest.approx(1.0, abs=1e-14)
    assert symfun.sigma_quotient([1, 2, 3], QuotientParams(3, 2)) == pytest.approx(6 / 11, abs=1e-14)


def test_cone_violation_and_param_checks():
    with pytest.raises(ConeViolation):
        symfun.sigma_quotient([1.0, -0.5], QuotientParams(2, 1))
    with pytest.raises(ConeViolation):
        symfun.sigma_quotient([1.0, 0.0], QuotientParams(2, 0))
    with pytest.raises(ValueError):
        QuotientParams(1, 0)
    with pytest.raises(ValueError):
        QuotientParams(3, 3)
    with pytest.raises(ValueError):
        symfun.sigma_quotient([1, 2, 3], QuotientParams(2, 1))
    with pytest.raises(ValueError):
        symfun.Spectrum(np.ones(13))


# --------------------------------------------------------------------------
# properties
# --------------------------------------------------------------------------

@given(spectra, st.data(), st.floats(0.1, 10.0))
@settings(max_examples=80, deadline=None)
def test_degree_one_homogeneity_and_symmetry(lam, data, scale):
    n = len(lam)
    p = QuotientParams(n, data.draw(st.integers(0, n - 1)))
    f = symfun.sigma_quotient(lam, p)
    assert symfun.sigma_quotient(np.multiply(lam, scale), p) == pytest.approx(scale * f, rel=1e-12)
    perm = data.draw(st.permutations(range(n)))
    assert symfun.sigma_quotient(np.asarray(lam)[list(perm)], p) == pytest.approx(f, rel=1e-13)


@given(spectra, st.data())
@settings(max_examples=80, deadline=None)
def test_gradient_positive_and_hessian_concave(lam, data):
    n = len(lam)
    p = QuotientParams(n, data.draw(st.integers(0, n - 1)))
    g = symfun.sigma_grad(lam, p)
    h = symfun.sigma_hess(lam, p)
    assert np.all(g > 0)
    assert np.sum(g * lam) == pytest.approx(symfun.sigma_quotient(lam, p), rel=1e-12)
    assert np.max(np.linalg.eigvalsh(h)) <= 1e-10 * max(1.0, np.max(np.abs(h)))


def test_gradient_and_hessian_against_differences(rng):
    for n in range(2, 7):
        for l in range(n):
            p = QuotientParams(n, l)
            lam = rng.uniform(0.5, 5.0, n)
            step = 1e-6 * lam
            g = symfun.sigma_grad(lam, p)
            h = symfun.sigma_hess(lam, p)
            for i in range(n):
                e = np.zeros(n)
                e[i] = step[i]
                fd = (symfun.sigma_quotient(lam + e, p) - symfun.sigma_quotient(lam - e, p)) / (2 * step[i])
                assert g[i] == pytest.approx(fd, rel=1e-7)
                gd = (symfun.sigma_grad(lam + e, p) - symfun.sigma_grad(lam - e, p)) / (2 * step[i])
                np.testing.assert_allclose(h[i], gd, rtol=1e-6, atol=1e-9)


def test_divided_differences_use_limit_on_ties():
    lam = np.array([[3.0, 3.0, 1.0]])
    f, g, h = symfun.quotient_batch(lam, 1)
    dd, deg = symfun.divided_differences(lam, g, h)
    assert deg[0, 0, 1] and not deg[0, 0, 2]
    assert dd[0, 0, 1] == pytest.approx(h[0, 0, 0] - h[0, 0, 1])
    assert dd[0, 0, 2] == pytest.approx((g[0, 0] - g[0, 2]) / 2.0)
    # continuity of the limit: a tiny split approaches it
    lam2 = np.array([[3.0 + 1e-6, 3.0, 1.0]])
    _, g2, h2 = symfun.quotient_batch(lam2, 1)
    dd2, _ = symfun.divided_differences(lam2, g2, h2)
    assert dd2[0, 0, 1] == pytest.approx(dd[0, 0, 1], rel=1e-5)


# --------------------------------------------------------------------------
# identities and inequalities
# --------------------------------------------------------------------------

def test_identity_residuals_vanish_at_worked_example():
    res = symfun.verify_identities([1.0, 2.0, 3.0], QuotientParams(3, 1))
    assert set(res) == set(symfun.IDENTITY_NAMES)
    assert max(res.values()) < 1e-13


def test_injected_identity_is_detected(rng):
    lam = rng.uniform(0.1, 10.0, (50, 4))
    res = symfun.identity_residuals_batch(lam, 1, inject="euler")
    assert np.max(res["euler"]) > 1e-3
    assert np.max(res["second_moment"]) < 1e-10


def test_compensated_tables_beat_float64(rng):
    lam = rng.uniform(0.1, 10.0, (200, 8))
    plain = symfun.identity_residuals_batch(lam, 0, compensated=False)
    comp = symfun.identity_residuals_batch(lam, 0, compensated=True)
    for name in ("restricted_sum", "omit_decomposition", "weighted_restricted_sum"):
        assert np.max(comp[name]) <= 1e-10
        assert np.max(comp[name]) <= np.max(plain[name])
    assert np.max(symfun.kernel_table_error(lam)) < 1e-13


def test_double_double_primitives_are_error_free():
    a, b = 1.0, 1e-17
    s, e = _compensated.two_sum(a, b)
    assert s == 1.0 and e == 1e-17
    x = 1.0 + 2.0 ** -30
    p, e = _compensated.two_prod(x, x)
    # exact square is 1 + 2^-29 + 2^-60; the low word carries 2^-60
    assert p == 1.0 + 2.0 ** -29 and e == 2.0 ** -60
    hi, lo = _compensated.prefix(np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(hi[0], [1.0, 6.0, 11.0, 6.0])
    np.testing.assert_array_equal(lo[0], 0.0)


def test_inequality_margins_nonnegative(rng):
    for n in (2, 3, 5):
        for l in range(n):
            lam = -np.sort(-rng.uniform(0.1, 10.0, (500, n)), axis=1)
            margins, _ = symfun.inequality_margins_batch(lam, l)
            for name, vals in margins.items():
                vals = vals[np.isfinite(vals)]
                assert vals.size == 0 or np.min(vals) >= -1e-12, (name, n, l)


def test_newton_inequality_terms_worked_example():
    lhs, rhs = symfun.newton_inequality_terms([1.0, 2.0, 3.0], 2)
    # (n-l+1) S3 S1 = 2*6*6 ; (l/n) S2 S2 = (2/3) 121
    assert lhs == pytest.approx(72.0) and rhs == pytest.approx(2 / 3 * 121)
    assert lhs <= rhs
    assert symfun.newton_general([1.0, 2.0, 3.0], 2, 1) >= 0


def test_band_helpers():
    band = symfun.ConeBand(1.0, 3.0)
    lam = symfun.rescale_into_band([1.0, 4.0], 1, band)
    assert symfun.sigma_quotient(lam, QuotientParams(2, 1)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        symfun.ConeBand(0.0, 1.0)
    trace_inf, gap_inf = symfun.measured_band_constants(np.array([[1.0, 2.0], [2.0, 5.0]]), 1)
    assert trace_inf > 0 and gap_inf > 0


# --------------------------------------------------------------------------
# backends
# --------------------------------------------------------------------------

@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
def test_compiled_and_numpy_kernels_agree(rng):
    for n in (2, 3, 5, 8):
        lam = rng.uniform(0.1, 10.0, (300, n))
        for a, b in zip(_kernels_py.sym_tables(lam, True), _kernels.sym_tables(lam, True)):
            np.testing.assert_allclose(a, b, rtol=1e-14, atol=0)


def test_pair_omit_table_matches_enumeration(rng):
    lam = rng.uniform(0.1, 10.0, (1, 5))
    S, S1, S2 = symfun.sym_tables(lam)
    v = lam[0]
    for i, j in [(0, 1), (2, 4)]:
        z = v.copy()
        z[[i, j]] = 0
        for k in range(6):
            assert S2[0, i, j, k] == pytest.approx(brute_sym(z, k), rel=1e-13, abs=1e-13)
    z = v.copy()
    z[3] = 0
    np.testing.assert_allclose(S1[0, 3], [brute_sym(z, k) for k in range(6)], rtol=1e-13)


def test_pure_python_fallback_selected_by_environment():
    code = ("import numpy as np, quotient_transport as q; from quotient_transport import symfun;"
            "print(q.BACKEND, symfun.elem_sym([1.0, 2.0, 3.0], 2))")
    env = dict(os.environ, QT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    assert out.stdout.split() == ["python", "11.0"]
