"""Pure-numpy implementation of the symmetric-function tables.

Used when the compiled ``_kernels`` extension is unavailable; both modules
expose the same functions with identical semantics.
"""
import numpy as np


def _prefix(lam):
    # S_k^{(m)} = S_k^{(m-1)} + lam_m * S_{k-1}^{(m-1)}
    m, n = lam.shape
    out = np.zeros((m, n + 1))
    out[:, 0] = 1.0
    for j in range(n):
        out[:, 1:] = out[:, 1:] + lam[:, j, None] * out[:, :-1]
    return out


def elem_sym_all(lam):
    """Return ``S_0..S_n`` for each row of ``lam`` (shape ``(m, n+1)``)."""
    return _prefix(np.ascontiguousarray(lam, dtype=float))


def sym_tables(lam, pairs=True):
    """Elementary symmetric functions with zero, one or two entries omitted.

    Parameters
    ----------
    lam : (m, n) array
    pairs : bool
        Also build the two-index table (quadratic in ``n``).

    Returns
    -------
    S : (m, n+1) array
    S1 : (m, n, n+1) array, ``S1[:, i, k]`` is ``S_k`` with ``lam_i = 0``
    S2 : (m, n, n, n+1) array or None, ``S2[:, i, j, k]`` is ``S_k`` with
        ``lam_i = lam_j = 0``; the diagonal ``i == j`` is left at zero.
    """
    lam = np.ascontiguousarray(lam, dtype=float)
    m, n = lam.shape
    S = _prefix(lam)
    S1 = np.empty((m, n, n + 1))
    for i in range(n):
        z = lam.copy()
        z[:, i] = 0.0
        S1[:, i] = _prefix(z)
    S2 = None
    if pairs:
        S2 = np.zeros((m, n, n, n + 1))
        for i in range(n):
            for j in range(i + 1, n):
                z = lam.copy()
                z[:, i] = 0.0
                z[:, j] = 0.0
                S2[:, i, j] = _prefix(z)
                S2[:, j, i] = S2[:, i, j]
    return S, S1, S2
