"""Elementary symmetric functions and the Hessian quotient ``sigma_{n,l}``.

Everything here works on eigenvalue vectors. The scalar entry points
(:func:`elem_sym`, :func:`sigma_quotient`, ...) accept any 1-D sequence or a
:class:`Spectrum`; the ``*_batch`` variants take an ``(m, n)`` array and are
what the verification suites and the solver use.

Conventions: ``S_0 = 1`` and ``S_k = 0`` for ``k < 0`` or ``k > n``.
Indices passed to ``omit`` are zero-based.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import _compensated as _cmp
from .errors import ConeViolation

if os.environ.get("QT_PURE_PYTHON"):
    from . import _kernels_py as _backend

    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as _backend

        BACKEND = "python"

CONE_RTOL = 1e-14
DEGENERATE_RTOL = 1e-8
MAX_DIM = 12


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue vector of an ``n x n`` symmetric matrix."""

    values: np.ndarray = field(repr=True)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if not 1 <= v.size <= MAX_DIM:
            raise ValueError(f"spectrum dimension must be in [1, {MAX_DIM}], got {v.size}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def in_cone(self) -> bool:
        return bool(np.all(self.values > CONE_RTOL * np.max(np.abs(self.values))))


@dataclass(frozen=True)
class QuotientParams:
    n: int
    l: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 0 <= self.l < self.n:
            raise ValueError("l must satisfy 0 <= l < n")


@dataclass(frozen=True)
class ConeBand:
    """Level band ``mu1 <= f <= mu2`` inside the cone."""

    mu1: float
    mu2: float

    def __post_init__(self):
        if not 0 < self.mu1 <= self.mu2:
            raise ValueError("ConeBand requires 0 < mu1 <= mu2")

    def contains(self, value) -> bool:
        return bool(self.mu1 <= value <= self.mu2)


def _values(lam) -> np.ndarray:
    if isinstance(lam, Spectrum):
        return lam.values
    return np.asarray(lam, dtype=float).reshape(-1)


def _rows(lam) -> np.ndarray:
    a = np.asarray(lam, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    return np.ascontiguousarray(a)


def check_cone(lam) -> None:
    """Raise :class:`ConeViolation` unless every row lies in the open cone."""
    a = _rows(lam)
    scale = np.max(np.abs(a), axis=1, keepdims=True)
    bad = ~np.all(a > CONE_RTOL * scale, axis=1)
    if np.any(bad):
        row = int(np.argmax(bad))
        raise ConeViolation(f"spectrum {a[row].tolist()} is not in the positive cone")


def _at(table, k):
    """``table[..., k]`` with the out-of-range convention (zero)."""
    n1 = table.shape[-1]
    if 0 <= k < n1:
        return table[..., k]
    return np.zeros(table.shape[:-1])


# --------------------------------------------------------------------------
# elementary symmetric functions
# --------------------------------------------------------------------------

def elem_sym(lam, k: int) -> float:
    v = _values(lam)
    if k < 0 or k > v.size:
        return 0.0
    return float(_backend.elem_sym_all(v[None, :])[0, k])


def elem_sym_restricted(lam, k: int, omit) -> float:
    """``S_k`` of ``lam`` with the entries listed in ``omit`` set to zero."""
    v = _values(lam).copy()
    omit = set(int(i) for i in omit)
    for i in omit:
        if not 0 <= i < v.size:
            raise IndexError(f"omit index {i} out of range for n={v.size}")
    v[list(omit)] = 0.0
    return elem_sym(v, k)


def sym_tables(lam, pairs=True):
    """Batched ``S``, single-omit and pair-omit tables (see ``_kernels_py``)."""
    return _backend.sym_tables(_rows(lam), pairs)


# --------------------------------------------------------------------------
# the quotient and its derivatives
# --------------------------------------------------------------------------

def quotient_batch(lam, l: int, order: int = 2, tables=None):
    """Value, gradient and Hessian of ``(S_n/S_l)^(1/(n-l))`` row by row.

    Parameters
    ----------
    lam : (m, n) array of spectra, assumed inside the cone.
    l : int
    order : {0, 1, 2}
        Highest derivative order to return.
    tables : optional precomputed ``sym_tables(lam)`` result.

    Returns
    -------
    f : (m,) array
    grad : (m, n) array, if ``order >= 1``
    hess : (m, n, n) array, if ``order >= 2``
    """
    lam = _rows(lam)
    m, n = lam.shape
    if not 0 <= l < n:
        raise ValueError("l must satisfy 0 <= l < n")
    if tables is None:
        tables = sym_tables(lam, pairs=order >= 2)
    S, S1, S2 = tables
    e = 1.0 / (n - l)
    Sn = S[:, n]
    Sl = _at(S, l)
    q = Sn / Sl
    f = q ** e
    if order == 0:
        return f
    # derivative of S_n / S_l
    Sn1_i = S1[:, :, n - 1]
    Sl1_i = _at(S1, l - 1)
    g = Sn1_i / Sl[:, None] - Sn[:, None] * Sl1_i / Sl[:, None] ** 2
    grad = e * q[:, None] ** (e - 1.0) * g
    if order == 1:
        return f, grad
    Sn2_ij = _at(S2, n - 2)
    Sl2_ij = _at(S2, l - 2)
    Sl_ = Sl[:, None, None]
    Sn_ = Sn[:, None, None]
    h = (
        Sn2_ij / Sl_
        - (Sn1_i[:, :, None] * Sl1_i[:, None, :] + Sl1_i[:, :, None] * Sn1_i[:, None, :]) / Sl_ ** 2
        - Sn_ * Sl2_ij / Sl_ ** 2
        + 2.0 * Sn_ * Sl1_i[:, :, None] * Sl1_i[:, None, :] / Sl_ ** 3
    )
    # diagonal: differentiate the gradient directly in lam_i
    diag = 2.0 * (Sl1_i ** 2 * Sn[:, None] - Sl[:, None] * Sl1_i * Sn1_i) / Sl[:, None] ** 3
    idx = np.arange(n)
    h[:, idx, idx] = diag
    hess = (
        e * (e - 1.0) * q[:, None, None] ** (e - 2.0) * g[:, :, None] * g[:, None, :]
        + e * q[:, None, None] ** (e - 1.0) * h
    )
    return f, grad, hess


def _scalar_call(lam, p: QuotientParams | None, order):
    v = _values(lam)
    l = p.l if p is not None else 1
    if p is not None and p.n != v.size:
        raise ValueError(f"QuotientParams.n={p.n} does not match spectrum size {v.size}")
    check_cone(v)
    return quotient_batch(v[None, :], l, order)


def sigma_quotient(lam, p: QuotientParams) -> float:
    return float(_scalar_call(lam, p, 0)[0])


def sigma_grad(lam, p: QuotientParams) -> np.ndarray:
    return _scalar_call(lam, p, 1)[1][0]


def sigma_hess(lam, p: QuotientParams) -> np.ndarray:
    return _scalar_call(lam, p, 2)[2][0]


def divided_differences(lam, grad, hess, rtol=DEGENERATE_RTOL):
    """Matrix of ``(f_i - f_j)/(lam_i - lam_j)`` with the coincident limit.

    When ``|lam_i - lam_j| <= rtol * max|lam|`` the quotient is replaced by
    ``f_ii - f_ij``. Returns ``(dd, degenerate)`` where ``degenerate`` marks
    the pairs that used the limit. Diagonal entries hold the limit value.
    """
    lam = _rows(lam)
    gap = lam[:, :, None] - lam[:, None, :]
    scale = np.max(np.abs(lam), axis=1)[:, None, None]
    degenerate = np.abs(gap) <= rtol * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        dd = (grad[:, :, None] - grad[:, None, :]) / gap
    diag = np.diagonal(hess, axis1=1, axis2=2)
    limit = diag[:, :, None] - hess
    dd = np.where(degenerate, limit, dd)
    return dd, degenerate


# --------------------------------------------------------------------------
# identities and inequalities
# --------------------------------------------------------------------------

IDENTITY_NAMES = (
    "restricted_sum",
    "omit_decomposition",
    "weighted_restricted_sum",
    "second_moment",
    "trace_formula",
    "euler",
)

INEQUALITY_NAMES = (
    "newton",
    "trace_lower",
    "trace_upper",
    "diagonal_curvature",
    "offdiagonal_curvature",
    "divided_difference_sign",
)


def identity_residuals_batch(lam, l: int, inject=None, compensated=True, s_level=True):
    """Absolute residuals of the structural identities, one array per name.

    The three identities among ``S_k`` and ``S_{k;i}`` are evaluated with
    the prefix recurrence in double-double arithmetic when ``compensated``
    (the default); their float64 residuals are bounded below by the
    rounding of ``S_k`` itself (``~1e-8`` absolute for ``n = 8`` and
    entries up to 10). The gradient-level identities always use the
    float64 kernels. ``inject`` names one identity whose reference side is
    negated; it exists only so the CLI self-test can prove a broken
    identity is caught. ``s_level=False`` skips the three ``l``-independent
    identities (useful when sweeping ``l`` over the same samples).
    """
    lam = _rows(lam)
    m, n = lam.shape
    tables = sym_tables(lam, pairs=False)
    S, S1, _ = tables
    f, grad = quotient_batch(lam, l, order=1, tables=tables)
    sgn = {name: (-1.0 if name == inject else 1.0) for name in IDENTITY_NAMES}
    out = {}
    ks = np.arange(n + 1)
    if not s_level:
        pass
    elif compensated:
        out.update(_compensated_identities(lam, sgn))
    else:
        lhs = S1.sum(axis=1)
        out["restricted_sum"] = np.max(np.abs(lhs - sgn["restricted_sum"] * (n - ks) * S), axis=1)
        # S_k = S_{k-1;i} lam_i + S_{k;i}, k = 1..n, every i
        dec = S1[:, :, :-1] * lam[:, :, None] + S1[:, :, 1:]
        out["omit_decomposition"] = np.max(
            np.abs(S[:, None, 1:] - sgn["omit_decomposition"] * dec), axis=(1, 2)
        )
        wsum = np.einsum("mik,mi->mk", S1[:, :, :-1], lam)
        out["weighted_restricted_sum"] = np.max(
            np.abs(wsum - sgn["weighted_restricted_sum"] * ks[1:] * S[:, 1:]), axis=1
        )

    Sl = _at(S, l)
    second = np.sum(grad * lam ** 2, axis=1)
    ref = (l + 1) / (n - l) * f * _at(S, l + 1) / Sl
    out["second_moment"] = np.abs(second - sgn["second_moment"] * ref)

    e = 1.0 / (n - l)
    q = S[:, n] / Sl
    trace_ref = e * q ** (e - 1.0) * (S[:, n - 1] * Sl - (n - l + 1) * S[:, n] * _at(S, l - 1)) / Sl ** 2
    out["trace_formula"] = np.abs(grad.sum(axis=1) - sgn["trace_formula"] * trace_ref)

    out["euler"] = np.abs(np.sum(grad * lam, axis=1) - sgn["euler"] * f)
    return out


def _compensated_identities(lam, sgn):
    m, n = lam.shape
    (Sh, Sl_), (Th, Tl) = _cmp.tables(lam)
    out = {}

    def resid(a, b):
        # |a - b| rounded once from double-double
        d = _cmp.dd_add(a, _cmp.dd_neg(b))
        return np.abs(d[0] + d[1])

    r = np.zeros(m)
    for k in range(n + 1):
        lhs = _cmp.dd_sum([(Th[:, i, k], Tl[:, i, k]) for i in range(n)])
        rhs = _cmp.dd_mul_d((Sh[:, k], Sl_[:, k]), sgn["restricted_sum"] * (n - k))
        r = np.maximum(r, resid(lhs, rhs))
    out["restricted_sum"] = r

    r = np.zeros(m)
    for k in range(1, n + 1):
        for i in range(n):
            dec = _cmp.dd_add(_cmp.dd_mul_d((Th[:, i, k - 1], Tl[:, i, k - 1]), lam[:, i]),
                              (Th[:, i, k], Tl[:, i, k]))
            dec = _cmp.dd_mul_d(dec, sgn["omit_decomposition"])
            r = np.maximum(r, resid((Sh[:, k], Sl_[:, k]), dec))
    out["omit_decomposition"] = r

    r = np.zeros(m)
    for k in range(1, n + 1):
        lhs = _cmp.dd_sum([_cmp.dd_mul_d((Th[:, i, k - 1], Tl[:, i, k - 1]), lam[:, i]) for i in range(n)])
        rhs = _cmp.dd_mul_d((Sh[:, k], Sl_[:, k]), sgn["weighted_restricted_sum"] * k)
        r = np.maximum(r, resid(lhs, rhs))
    out["weighted_restricted_sum"] = r
    return out


def kernel_table_error(lam):
    """Largest relative deviation of the float64 ``S``/``S1`` tables from
    their compensated counterparts, per sample."""
    lam = _rows(lam)
    S, S1, _ = sym_tables(lam, pairs=False)
    (Sh, Sl_), (Th, Tl) = _cmp.tables(lam)
    es = np.abs((S - Sh) - Sl_) / np.maximum(np.abs(Sh), 1e-300)
    e1 = np.abs((S1 - Th) - Tl) / np.maximum(np.abs(Th), 1e-300)
    e1 = np.where(Th == 0.0, np.abs(S1), e1)
    return np.maximum(es.max(axis=1), e1.max(axis=(1, 2)))


def identity_scales_batch(lam, l: int):
    """Magnitude of the reference side of each identity (for relative use)."""
    lam = _rows(lam)
    m, n = lam.shape
    S = _backend.elem_sym_all(lam)
    f = quotient_batch(lam, l, order=0)
    smax = np.max(np.abs(S), axis=1) * n
    return {
        "restricted_sum": smax,
        "omit_decomposition": smax,
        "weighted_restricted_sum": smax,
        "second_moment": np.abs(f) * np.max(lam, axis=1),
        "trace_formula": np.abs(f) / np.min(lam, axis=1),
        "euler": np.abs(f),
    }


def inequality_margins_batch(lam, l: int):
    """Signed margins ``LHS - RHS`` (``>= 0`` passes) per sample.

    Rows are sorted in descending order internally. Returns
    ``(margins, degenerate)``: ``margins`` maps each name in
    ``INEQUALITY_NAMES`` to an ``(m,)`` array (the minimum over index pairs
    where several apply) and ``degenerate`` flags samples in which some
    divided difference was replaced by its coincident limit.
    ``diagonal_curvature`` is NaN for ``l = 0``, where it is false.
    """
    lam = -np.sort(-_rows(lam), axis=1)
    m, n = lam.shape
    tables = sym_tables(lam, pairs=True)
    S = tables[0]
    f, grad, hess = quotient_batch(lam, l, order=2, tables=tables)
    dd, degenerate = divided_differences(lam, grad, hess)
    out = {}

    Sl = _at(S, l)
    out["newton"] = (l / n) * S[:, n - 1] * Sl - (n - l + 1) * S[:, n] * _at(S, l - 1)

    tr = grad.sum(axis=1)
    core = f * S[:, n - 1] / S[:, n]
    out["trace_lower"] = tr - core / n
    out["trace_upper"] = core / (n - l) - tr

    if l == 0:
        out["diagonal_curvature"] = np.full(m, np.nan)
    else:
        out["diagonal_curvature"] = -lam[:, 0] * hess[:, 0, 0] - grad[:, 0]

    r = np.arange(1, n)
    out["offdiagonal_curvature"] = np.min(-2.0 * lam[:, :1] * dd[:, 0, r] - grad[:, r], axis=1)

    iu, ju = np.triu_indices(n, 1)
    out["divided_difference_sign"] = np.min(-dd[:, iu, ju], axis=1)
    return out, np.any(degenerate[:, iu, ju], axis=1)


def verify_identities(lam, p: QuotientParams) -> dict:
    """Absolute residual of each identity at one spectrum."""
    v = _values(lam)
    check_cone(v)
    res = identity_residuals_batch(v[None, :], p.l)
    return {k: float(a[0]) for k, a in res.items()}


def verify_inequalities(lam, p: QuotientParams) -> dict:
    """Signed margins at one spectrum plus a ``degenerate`` flag."""
    v = _values(lam)
    check_cone(v)
    margins, degenerate = inequality_margins_batch(v[None, :], p.l)
    report = {k: float(a[0]) for k, a in margins.items()}
    report["degenerate"] = bool(degenerate[0])
    return report


def newton_inequality_terms(lam, l: int):
    """Both sides ``((n-l+1) S_n S_{l-1}, (l/n) S_{n-1} S_l)`` unnormalised."""
    v = _values(lam)
    n = v.size
    S = _backend.elem_sym_all(v[None, :])[0]
    s = lambda k: S[k] if 0 <= k <= n else 0.0  # noqa: E731
    return (n - l + 1) * s(n) * s(l - 1), (l / n) * s(n - 1) * s(l)


def newton_general(lam, k: int, l: int) -> float:
    """Margin of the normalised Newton inequality for ``1 <= l <= k <= n``."""
    v = _values(lam)
    n = v.size
    S = _backend.elem_sym_all(v[None, :])[0]
    lhs = S[k] / comb(n, k) * S[l - 1] / comb(n, l - 1)
    rhs = S[k - 1] / comb(n, k - 1) * S[l] / comb(n, l)
    return float((rhs - lhs) / rhs)


def growth_ratio(lam, l: int) -> float:
    """``sum f_i lam_i^2 / (sum f_i * |lam|)`` with the Euclidean norm."""
    v = _values(lam)
    _, g = quotient_batch(v[None, :], l, order=1)
    g = g[0]
    return float(np.sum(g * v ** 2) / (np.sum(g) * np.linalg.norm(v)))


def rescale_into_band(lam, l: int, band: ConeBand) -> np.ndarray:
    """Scale ``lam`` so that ``f`` sits at the middle of ``band``."""
    v = _values(lam)
    f = quotient_batch(v[None, :], l, order=0)[0]
    return v * (0.5 * (band.mu1 + band.mu2) / f)


def measured_band_constants(lam, l: int):
    """Empirical ``(inf sum_i f_i, inf of f(2 lam) - f(lam))`` over samples.

    The existential lower bounds on the trace of the gradient and on the
    doubling gap are realised as sample infima.
    """
    lam = _rows(lam)
    f, g = quotient_batch(lam, l, order=1)
    f2 = quotient_batch(2.0 * lam, l, order=0)
    return float(np.min(g.sum(axis=1))), float(np.min(f2 - f))
