"""Double-double ("compensated") evaluation of the symmetric-function tables.

Each quantity is carried as an unevaluated sum ``hi + lo`` of two doubles,
built from the error-free transformations TwoSum and TwoProd (Dekker
splitting, so no FMA is required). The prefix recurrence is the same one
the float64 kernels use; only the arithmetic is widened, to roughly 106
significant bits. The verification path uses this to audit identities
whose float64 residuals would otherwise be dominated by rounding of
``S_k`` values as large as ``1e8``.
"""
from __future__ import annotations

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _renorm(s, e):
    hi = s + e
    return hi, e - (hi - s)


def dd_add(a, b):
    """``a + b`` for double-double pairs."""
    s, e = two_sum(a[0], b[0])
    return _renorm(s, e + a[1] + b[1])


def dd_neg(a):
    return -a[0], -a[1]


def dd_mul_d(a, d):
    """Double-double ``a`` times plain double ``d``."""
    p, e = two_prod(a[0], d)
    return _renorm(p, e + a[1] * d)


def dd_sum(pairs):
    acc = (np.zeros_like(pairs[0][0]), np.zeros_like(pairs[0][0]))
    for p in pairs:
        acc = dd_add(acc, p)
    return acc


def prefix(lam):
    """``(hi, lo)`` tables of ``S_0..S_n`` over the trailing axis of ``lam``."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    shape = lam.shape[:-1] + (n + 1,)
    hi = np.zeros(shape)
    lo = np.zeros(shape)
    hi[..., 0] = 1.0
    for j in range(n):
        x = lam[..., j]
        # descending k so S_{k-1} is still the previous prefix
        for k in range(j + 1, 0, -1):
            t = dd_mul_d((hi[..., k - 1], lo[..., k - 1]), x)
            hi[..., k], lo[..., k] = dd_add((hi[..., k], lo[..., k]), t)
    return hi, lo


def tables(lam):
    """Compensated ``S`` (shape ``(m, n+1)``) and single-omit ``S1``
    (shape ``(m, n, n+1)``), each as a ``(hi, lo)`` pair."""
    lam = np.asarray(lam, dtype=float)
    m, n = lam.shape
    S = prefix(lam)
    z = np.repeat(lam[:, None, :], n, axis=1)
    idx = np.arange(n)
    z[:, idx, idx] = 0.0
    S1 = prefix(z)
    return S, S1
