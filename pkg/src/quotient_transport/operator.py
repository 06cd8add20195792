"""Matrix-level operator ``F[M] = sigma_{n,l}(eig M)`` and its derivatives.

All functions accept a single ``(n, n)`` matrix or a stack ``(..., n, n)``;
the solver calls them on one 2x2 matrix per grid node.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symfun
from .errors import NotAdmissible
from .symfun import QuotientParams

SYMMETRY_RTOL = 1e-12
ADMISSIBILITY_FLOOR = 0.0


@dataclass(frozen=True)
class ModifiedHessian:
    """Symmetric matrix ``w = D^2 u - A``; admissible iff positive definite."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("ModifiedHessian needs a square matrix")
        scale = max(np.linalg.norm(m), 1e-300)
        if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
            raise ValueError("matrix is not symmetric")
        object.__setattr__(self, "entries", 0.5 * (m + m.T))

    def is_admissible(self, floor=ADMISSIBILITY_FLOOR) -> bool:
        return bool(np.linalg.eigvalsh(self.entries)[0] > floor)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        q = self.eigenvectors
        return q @ (self.eigenvalues[..., :, None] * np.swapaxes(q, -1, -2))


def _as_array(M):
    if isinstance(M, ModifiedHessian):
        return M.entries
    return np.asarray(M, dtype=float)


def decompose(M) -> SpectralDecomposition:
    a = _as_array(M)
    w, q = np.linalg.eigh(0.5 * (a + np.swapaxes(a, -1, -2)))
    return SpectralDecomposition(w[..., ::-1].copy(), q[..., ::-1].copy())


def _check(lam, floor):
    lam = np.asarray(lam)
    flat = lam.reshape(-1, lam.shape[-1])
    scale = np.max(np.abs(flat), axis=1)
    bad = ~(flat[:, -1] > np.maximum(floor, symfun.CONE_RTOL * scale))
    if np.any(bad):
        node = int(np.argmax(bad))
        raise NotAdmissible(
            f"modified Hessian not positive definite (smallest eigenvalue {flat[node, -1]:.3e})",
            node=node,
        )


def eval_F(M, p: QuotientParams, floor=ADMISSIBILITY_FLOOR):
    dec = decompose(M)
    _check(dec.eigenvalues, floor)
    lam = dec.eigenvalues
    f = symfun.quotient_batch(lam.reshape(-1, lam.shape[-1]), p.l, order=0)
    return f.reshape(lam.shape[:-1]) if lam.ndim > 1 else float(f[0])


def linearization(M, p: QuotientParams, floor=ADMISSIBILITY_FLOOR):
    """``F^{ij} = dF/dM_ij = Q diag(f_i) Q^T``."""
    dec = decompose(M)
    _check(dec.eigenvalues, floor)
    lam = dec.eigenvalues
    _, g = symfun.quotient_batch(lam.reshape(-1, lam.shape[-1]), p.l, order=1)
    g = g.reshape(lam.shape)
    q = dec.eigenvectors
    return q @ (g[..., :, None] * np.swapaxes(q, -1, -2))


def value_and_linearization(M, p: QuotientParams, floor=ADMISSIBILITY_FLOOR):
    """``(F, F^{ij}, eigenvalues)`` from a single eigen-solve."""
    dec = decompose(M)
    _check(dec.eigenvalues, floor)
    lam = dec.eigenvalues
    f, g = symfun.quotient_batch(lam.reshape(-1, lam.shape[-1]), p.l, order=1)
    g = g.reshape(lam.shape)
    q = dec.eigenvectors
    lin = q @ (g[..., :, None] * np.swapaxes(q, -1, -2))
    return f.reshape(lam.shape[:-1]), lin, lam


def second_contraction(M, p: QuotientParams, Xi, floor=ADMISSIBILITY_FLOOR):
    """``F^{ij,kl} Xi_ij Xi_kl`` evaluated in the eigenbasis of ``M``.

    Coincident eigenvalues (relative gap below ``symfun.DEGENERATE_RTOL``)
    use the limit of the divided difference.
    """
    dec = decompose(M)
    _check(dec.eigenvalues, floor)
    lam = dec.eigenvalues
    n = lam.shape[-1]
    lam2 = lam.reshape(-1, n)
    _, g, h = symfun.quotient_batch(lam2, p.l, order=2)
    dd, _ = symfun.divided_differences(lam2, g, h)
    q = dec.eigenvectors.reshape(-1, n, n)
    xi = np.broadcast_to(np.asarray(Xi, dtype=float), dec.eigenvectors.shape).reshape(-1, n, n)
    xr = np.swapaxes(q, -1, -2) @ xi @ q
    d = np.diagonal(xr, axis1=1, axis2=2)
    first = np.einsum("mi,mij,mj->m", d, h, d)
    off = xr ** 2
    idx = np.arange(n)
    off[:, idx, idx] = 0.0
    second = np.sum(dd * off, axis=(1, 2))
    out = (first + second).reshape(lam.shape[:-1])
    return out if lam.ndim > 1 else float(out)


def min_eigenvalue(M):
    return np.linalg.eigvalsh(_as_array(M))[..., 0]
