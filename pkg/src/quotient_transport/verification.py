"""Randomised property suites for the symmetric-function and operator layers.

Every suite takes a ``numpy.random.Generator`` and a sample count and
returns a :class:`SuiteResult`. ``worst_margin`` is oriented so that
``>= 0`` means pass; ``worst_value`` is the raw extreme it came from and
``worst_sample`` the input that produced it, so a failure can be replayed.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import operator as op
from . import symfun
from .symfun import QuotientParams

LAMBDA_RANGE = (0.1, 10.0)
DIMENSIONS = tuple(range(2, 9))


@dataclass
class SuiteResult:
    suite: str
    samples: int
    worst_value: float
    tolerance: float
    worst_margin: float
    passed: bool
    seconds: float
    worst_sample: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)

    def to_json(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def _spectra(rng, m, n, lo=LAMBDA_RANGE[0], hi=LAMBDA_RANGE[1]):
    return rng.uniform(lo, hi, size=(m, n))


def _rotation(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def _sym(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def _finish(name, samples, worst, tol, t0, sample, upper=True, **detail):
    """``upper``: the value must stay below ``tol``; else above ``-tol``."""
    margin = tol - worst if upper else worst + tol
    return SuiteResult(name, int(samples), float(worst), float(tol), float(margin), bool(margin >= 0),
                       time.perf_counter() - t0, sample, detail)


# --------------------------------------------------------------------------
# symmetric-function suites
# --------------------------------------------------------------------------

def suite_identities(rng, samples=10_000, tol=1e-10, dims=DIMENSIONS, inject=None):
    """Absolute residuals of the structural identities, every valid ``l``."""
    t0 = time.perf_counter()
    worst, where, per = -np.inf, {}, {}
    for n in dims:
        lam = _spectra(rng, samples, n)
        for l in range(n):
            # the S-level identities do not depend on l: evaluate them once
            res = symfun.identity_residuals_batch(lam, l, inject=inject, s_level=(l == 0))
            for name, r in res.items():
                k = int(np.argmax(r))
                per[name] = max(per.get(name, 0.0), float(r[k]))
                if r[k] > worst:
                    worst = float(r[k])
                    where = {"identity": name, "n": n, "l": l, "lambda": lam[k].tolist()}
    return _finish("identities", samples * len(dims), worst, tol, t0, where, per_identity=per)


def suite_kernel_tables(rng, samples=10_000, tol=1e-13, dims=DIMENSIONS):
    """Float64 production tables vs their compensated evaluation (relative)."""
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for n in dims:
        lam = _spectra(rng, samples, n)
        err = symfun.kernel_table_error(lam)
        k = int(np.argmax(err))
        if err[k] > worst:
            worst, where = float(err[k]), {"n": n, "lambda": lam[k].tolist()}
    return _finish("kernel_tables", samples * len(dims), worst, tol, t0, where, backend=symfun.BACKEND)


def suite_gradient(rng, samples=1000, tol=1e-6, dims=DIMENSIONS):
    """Analytic gradient vs central differences with step ``1e-5 lam_i``."""
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for s in range(samples):
        n = int(rng.choice(dims))
        l = int(rng.integers(0, n))
        lam = _spectra(rng, 1, n)[0]
        _, g = symfun.quotient_batch(lam, l, order=1)
        h = 1e-5 * lam
        E = np.diag(h)
        fp = symfun.quotient_batch(lam + E, l, order=0)
        fm = symfun.quotient_batch(lam - E, l, order=0)
        fd = (fp - fm) / (2 * h)
        err = float(np.linalg.norm(fd - g[0]) / np.linalg.norm(g[0]))
        if err > worst:
            worst, where = err, {"n": n, "l": l, "lambda": lam.tolist()}
    return _finish("gradient_fd", samples, worst, tol, t0, where)


def suite_hessian(rng, samples=1000, tol=1e-6, dims=DIMENSIONS):
    """Analytic Hessian vs central differences of the analytic gradient."""
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for s in range(samples):
        n = int(rng.choice(dims))
        l = int(rng.integers(0, n))
        lam = _spectra(rng, 1, n)[0]
        _, _, H = symfun.quotient_batch(lam, l, order=2)
        h = 1e-5 * lam
        E = np.diag(h)
        _, gp = symfun.quotient_batch(lam + E, l, order=1)
        _, gm = symfun.quotient_batch(lam - E, l, order=1)
        fd = (gp - gm) / (2 * h[:, None])  # row k: d grad / d lam_k
        fd = 0.5 * (fd + fd.T)
        err = float(np.linalg.norm(fd - H[0]) / np.linalg.norm(H[0]))
        if err > worst:
            worst, where = err, {"n": n, "l": l, "lambda": lam.tolist()}
    return _finish("hessian_fd", samples, worst, tol, t0, where)


def suite_concavity(rng, samples=1000, tol=1e-10, dims=DIMENSIONS):
    """Largest eigenvalue of the Hessian of ``f`` on the cone."""
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for n in dims:
        lam = _spectra(rng, samples, n)
        for l in range(n):
            _, _, H = symfun.quotient_batch(lam, l, order=2)
            top = np.linalg.eigvalsh(H)[:, -1]
            k = int(np.argmax(top))
            if top[k] > worst:
                worst, where = float(top[k]), {"n": n, "l": l, "lambda": lam[k].tolist()}
    return _finish("hessian_concavity", samples * len(dims), worst, tol, t0, where)


def suite_inequalities(rng, samples=10_000, tol=1e-12, dims=DIMENSIONS):
    """Signed margins of the inequality family (pass when ``>= -tol``)."""
    t0 = time.perf_counter()
    worst, where, per = np.inf, {}, {}
    for n in dims:
        lam = _spectra(rng, samples, n)
        for l in range(n):
            margins, _ = symfun.inequality_margins_batch(lam, l)
            for name, m in margins.items():
                if np.all(np.isnan(m)):
                    continue
                k = int(np.nanargmin(m))
                per[name] = min(per.get(name, np.inf), float(m[k]))
                if m[k] < worst:
                    worst = float(m[k])
                    where = {"inequality": name, "n": n, "l": l, "lambda": lam[k].tolist()}
    return _finish("inequalities", samples * len(dims), worst, tol, t0, where, upper=False,
                   per_inequality=per)


# --------------------------------------------------------------------------
# operator suites
# --------------------------------------------------------------------------

def _matrix_sample(rng, n, near_degenerate=False, gap=None):
    """Random symmetric matrix; ``near_degenerate`` splits one eigenvalue pair
    by ``gap`` (default ``10**U(-7, -3)``)."""
    lam = _spectra(rng, 1, n)[0]
    if near_degenerate and n >= 2:
        i, j = rng.choice(n, size=2, replace=False)
        lam[j] = lam[i] + (10.0 ** rng.uniform(-7, -3) if gap is None else gap)
    Q = _rotation(rng, n)
    return Q @ np.diag(lam) @ Q.T, lam


def suite_linearization(rng, samples=500, tol=1e-6, dims=(2, 3, 4, 5)):
    """``F^{ij} E_ij`` vs the centred difference of ``F`` along ``E``."""
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for _ in range(samples):
        n = int(rng.choice(dims))
        p = QuotientParams(n, int(rng.integers(0, n)))
        M, lam = _matrix_sample(rng, n)
        E = _sym(rng, n)
        h = 1e-5 * np.max(lam) / np.linalg.norm(E)
        fd = (op.eval_F(M + h * E, p) - op.eval_F(M - h * E, p)) / (2 * h)
        an = float(np.sum(op.linearization(M, p) * E))
        err = abs(fd - an) / max(abs(an), 1e-12)
        if err > worst:
            worst, where = err, {"n": n, "l": p.l, "lambda": lam.tolist()}
    return _finish("linearization_fd", samples, worst, tol, t0, where)


def suite_frame_covariance(rng, samples=500, tol=1e-10, dims=(2, 3, 4, 5)):
    """``lin(Q^T M Q) = Q^T lin(M) Q`` (relative Frobenius error)."""
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for _ in range(samples):
        n = int(rng.choice(dims))
        p = QuotientParams(n, int(rng.integers(0, n)))
        M, lam = _matrix_sample(rng, n)
        Q = _rotation(rng, n)
        a = op.linearization(Q.T @ M @ Q, p)
        b = Q.T @ op.linearization(M, p) @ Q
        err = float(np.linalg.norm(a - b) / np.linalg.norm(b))
        if err > worst:
            worst, where = err, {"n": n, "l": p.l, "lambda": lam.tolist()}
    return _finish("frame_covariance", samples, worst, tol, t0, where)


def contraction_fd(M, p, Xi, h=None):
    """Second central difference of ``F`` along ``Xi`` with one Richardson step.

    The default step is ``0.02 * lambda_min / |Xi|``.
    """
    if h is None:
        h = 0.02 * np.linalg.eigvalsh(M)[0] / np.linalg.norm(Xi)
    f0 = op.eval_F(M, p)

    def d2(s):
        return (op.eval_F(M + s * Xi, p) - 2 * f0 + op.eval_F(M - s * Xi, p)) / s ** 2

    return (4 * d2(0.5 * h) - d2(h)) / 3


def suite_contraction(rng, samples=500, tol=1e-5, dims=(2, 3, 4, 5), degenerate_fraction=0.5):
    """Second contraction vs second differences, half near-degenerate.

    The near-degenerate samples split one eigenvalue pair by gaps spaced
    evenly in exponent from ``1e-7`` to ``1e-3``.
    """
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    n_deg = int(round(degenerate_fraction * samples))
    gaps = np.logspace(-7, -3, max(n_deg, 1))
    for s in range(samples):
        n = int(rng.choice(dims))
        p = QuotientParams(n, int(rng.integers(0, n)))
        deg = s < n_deg
        M, lam = _matrix_sample(rng, n, near_degenerate=deg, gap=gaps[s] if deg else None)
        Xi = _sym(rng, n)
        an = op.second_contraction(M, p, Xi)
        fd = contraction_fd(M, p, Xi)
        err = abs(an - fd) / abs(an)
        if err > worst:
            worst, where = err, {"n": n, "l": p.l, "lambda": lam.tolist(), "near_degenerate": bool(deg)}
    return _finish("second_contraction_fd", samples, worst, tol, t0, where, near_degenerate=n_deg,
                   min_gap=float(gaps[0]) if n_deg else None)


def suite_contraction_concavity(rng, samples=500, tol=1e-10, dims=(2, 3, 4, 5)):
    """``F^{ij,kl} Xi_ij Xi_kl / |Xi|_F^2 <= tol``."""
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for s in range(samples):
        n = int(rng.choice(dims))
        p = QuotientParams(n, int(rng.integers(0, n)))
        M, lam = _matrix_sample(rng, n, near_degenerate=bool(s % 2))
        Xi = _sym(rng, n)
        val = op.second_contraction(M, p, Xi) / np.sum(Xi * Xi)
        if val > worst:
            worst, where = float(val), {"n": n, "l": p.l, "lambda": lam.tolist()}
    return _finish("contraction_concavity", samples, worst, tol, t0, where)


def suite_degenerate_continuity(rng, samples=50, tol=1e-6, dims=(2, 3, 4)):
    """No jump of the contraction as two eigenvalues merge.

    Along ``M(s) = Q diag(1 + s, 1 - s, rest) Q^T`` compare ``s = 0`` with
    ``s`` just above and below the degeneracy threshold.
    """
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for _ in range(samples):
        n = int(rng.choice(dims))
        p = QuotientParams(n, int(rng.integers(0, n)))
        rest = _spectra(rng, 1, n - 2)[0] if n > 2 else np.array([])
        Q = _rotation(rng, n)
        Xi = _sym(rng, n)

        def val(s):
            lam = np.concatenate([[1 + s, 1 - s], rest])
            return op.second_contraction(Q @ np.diag(lam) @ Q.T, p, Xi)

        base = val(0.0)
        jump = max(abs(val(s) - base) for s in (1e-10, 1e-9, 1e-8, 1e-7))
        if jump > worst:
            worst, where = float(jump), {"n": n, "l": p.l, "rest": rest.tolist()}
    return _finish("degenerate_continuity", samples, worst, tol, t0, where)


def suite_homogeneity(rng, samples=1000, tol=1e-12, dims=DIMENSIONS):
    """Degree-one homogeneity and permutation invariance of ``f``."""
    t0 = time.perf_counter()
    worst, where = -np.inf, {}
    for n in dims:
        lam = _spectra(rng, samples, n)
        t = rng.uniform(0.1, 10.0, size=samples)
        perm = rng.permutation(n)
        for l in range(n):
            f = symfun.quotient_batch(lam, l, order=0)
            ft = symfun.quotient_batch(lam * t[:, None], l, order=0)
            fp = symfun.quotient_batch(lam[:, perm], l, order=0)
            err = np.maximum(np.abs(ft - t * f) / (t * f), np.abs(fp - f) / f)
            k = int(np.argmax(err))
            if err[k] > worst:
                worst, where = float(err[k]), {"n": n, "l": l, "lambda": lam[k].tolist()}
    return _finish("homogeneity_permutation", samples * len(dims), worst, tol, t0, where)


SUITES = {
    "identities": suite_identities,
    "kernel_tables": suite_kernel_tables,
    "gradient_fd": suite_gradient,
    "hessian_fd": suite_hessian,
    "hessian_concavity": suite_concavity,
    "inequalities": suite_inequalities,
    "linearization_fd": suite_linearization,
    "frame_covariance": suite_frame_covariance,
    "second_contraction_fd": suite_contraction,
    "contraction_concavity": suite_contraction_concavity,
    "degenerate_continuity": suite_degenerate_continuity,
    "homogeneity_permutation": suite_homogeneity,
}


def run_suites(seed=0, samples=None, only=None, inject=None, dims=DIMENSIONS):
    """Run the suites in a fixed order, each with its own child generator.

    ``samples`` maps suite names to sample counts (defaults otherwise);
    ``inject`` is forwarded to the identity suite.
    """
    samples = samples or {}
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    results = []
    for (name, fn), child in zip(SUITES.items(), children):
        if only and name not in only:
            continue
        rng = np.random.default_rng(child)
        kw = {}
        if name in samples:
            kw["samples"] = int(samples[name])
        if name in ("identities", "kernel_tables", "gradient_fd", "hessian_fd", "hessian_concavity", "inequalities",
                    "homogeneity_permutation"):
            kw["dims"] = tuple(dims)
        if name == "identities":
            kw["inject"] = inject
        results.append(fn(rng, **kw))
    return results
