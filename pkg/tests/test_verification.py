"""The property-suite harness itself (reduced sample counts)."""
import json

import numpy as np
import pytest

from quotient_transport import verification as ver
from quotient_transport.symfun import QuotientParams

SMALL = {name: 40 for name in ver.SUITES}


def test_every_suite_passes_on_small_samples():
    results = ver.run_suites(seed=7, samples=SMALL, dims=(2, 3, 5))
    assert [r.suite for r in results] == list(ver.SUITES)
    bad = [(r.suite, r.worst_value) for r in results if not r.passed]
    assert not bad
    for r in results:
        assert r.worst_margin >= 0
        json.dumps(r.to_json())
        assert r.to_json()["pass"] is True


def test_seeded_runs_are_reproducible():
    a = ver.run_suites(seed=3, samples=SMALL, only=["identities", "gradient_fd"], dims=(2, 4))
    b = ver.run_suites(seed=3, samples=SMALL, only=["identities", "gradient_fd"], dims=(2, 4))
    assert [r.worst_value for r in a] == [r.worst_value for r in b]
    assert [r.worst_sample for r in a] == [r.worst_sample for r in b]


@pytest.mark.parametrize("name", ["euler", "second_moment", "trace_formula", "restricted_sum"])
def test_injected_bug_fails_the_identity_suite(name):
    (res,) = ver.run_suites(seed=0, samples=SMALL, only=["identities"], inject=name, dims=(3,))
    assert not res.passed
    assert res.worst_margin < 0


def test_contraction_oracle_on_closed_form():
    """F = l1 l2 / (l1 + l2) on diagonal M with diagonal Xi: second derivative
    along the ray is xi^T H xi with the closed-form Hessian."""
    M = np.diag([1.0, 2.0])
    Xi = np.diag([1.0, -0.5])
    s = 3.0
    H = np.array([[-8 / s ** 3, 4 / s ** 3], [4 / s ** 3, -2 / s ** 3]])
    xi = np.array([1.0, -0.5])
    expected = xi @ H @ xi
    assert ver.contraction_fd(M, QuotientParams(2, 1), Xi) == pytest.approx(expected, rel=1e-8)
