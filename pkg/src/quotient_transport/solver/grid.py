"""Boundary-fitted polar grid and its sparse difference operators.

The grid maps the reference rectangle ``(r, theta) in [0, 1] x [0, 2 pi)``
onto a star-shaped domain through ``x = c + r rho(theta) (cos, sin)``.
Node 0 is the pole (the collapsed ``r = 0`` ring); node
``1 + (k - 1) * nt + j`` sits at ``r = k h``, ``theta = j * 2 pi / nt``.

Cartesian derivatives come from reference-space differences through the
chain rule::

    grad u = J^{-T} (u_r, u_theta)
    D^2 u  = J^{-T} (U - sum_m (grad u)_m X_m) J^{-1}

where ``U`` is the reference Hessian and ``X_m`` the Hessian of the map's
``m``-th component. Interior rings use central differences, the outer ring
second-order one-sided differences in ``r``. At the pole a least-squares
quadratic is fitted through the first ring.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..geometry import DomainSpec


class PolarGrid:
    def __init__(self, domain: DomainSpec, nr: int, nt: int):
        if nr < 4:
            raise ValueError("need at least 4 radial nodes")
        if nt % 2 or nt < 8:
            raise ValueError("angular node count must be even and >= 8")
        self.domain = domain
        self.nr = int(nr)
        self.nt = int(nt)
        self.h = 1.0 / (nr - 1)
        self.ht = 2 * np.pi / nt
        self.size = 1 + (nr - 1) * nt
        k, j = np.meshgrid(np.arange(1, nr), np.arange(nt), indexing="ij")
        self.r_index = np.concatenate([[0], k.ravel()])
        self.theta_index = np.concatenate([[0], j.ravel()])
        self.r = self.r_index * self.h
        self.theta = self.theta_index * self.ht
        self.x = domain.point(self.theta, self.r)
        self.boundary = self.r_index == nr - 1
        self.interior = ~self.boundary
        self._build_metric()
        self._build_operators()

    # indexing ---------------------------------------------------------------
    def idx(self, k, j):
        """Flat node index of ring ``k`` (0 = pole) and angle index ``j``."""
        k = np.asarray(k)
        j = np.asarray(j) % self.nt
        return np.where(k == 0, 0, 1 + (k - 1) * self.nt + j)

    @property
    def shape(self):
        return (self.nr, self.nt)

    def spacing(self):
        """Largest physical distance between neighbouring nodes."""
        rho_max = float(np.max(self.domain.rho(self.domain.node_angles())))
        return max(self.h * rho_max, self.ht * rho_max)

    # metric -----------------------------------------------------------------
    def _build_metric(self):
        th = self.theta
        r = self.r
        rho = self.domain.rho(th, 0)
        r1 = self.domain.rho(th, 1)
        r2 = self.domain.rho(th, 2)
        e = np.stack([np.cos(th), np.sin(th)], axis=-1)
        ep = np.stack([-np.sin(th), np.cos(th)], axis=-1)
        P = rho[:, None] * e
        P1 = r1[:, None] * e + rho[:, None] * ep
        P2 = (r2 - rho)[:, None] * e + 2 * r1[:, None] * ep
        J = np.stack([P, r[:, None] * P1], axis=-1)  # J[m, a] = dx_m / dxi_a
        self.jac_det = np.linalg.det(J[1:])
        if np.any(self.jac_det <= 0):
            raise ValueError("polar map has a non-positive Jacobian")
        self.Kinv = np.zeros_like(J)
        self.Kinv[1:] = np.linalg.inv(J[1:])
        # X[m, a, b] = d^2 x_m / dxi_a dxi_b ; a, b in (r, theta)
        X = np.zeros((self.size, 2, 2, 2))
        X[:, :, 0, 1] = P1
        X[:, :, 1, 0] = P1
        X[:, :, 1, 1] = r[:, None] * P2
        self.X = X

    # operators --------------------------------------------------------------
    def _ref_operators(self):
        """Sparse reference-space operators ``(Dr, Dt, Drr, Drt, Dtt)``."""
        nr, nt, h, ht = self.nr, self.nt, self.h, self.ht
        rows = {name: ([], [], []) for name in ("r", "t", "rr", "rt", "tt")}

        def add(name, i, cols, vals):
            R, C, V = rows[name]
            R.extend([i] * len(cols))
            C.extend(cols)
            V.extend(vals)

        for k in range(1, nr):
            for j in range(nt):
                i = int(self.idx(k, j))
                jm, jp = j - 1, j + 1
                add("t", i, [self.idx(k, jp), self.idx(k, jm)], [1 / (2 * ht), -1 / (2 * ht)])
                add("tt", i, [self.idx(k, jp), i, self.idx(k, jm)], [1 / ht ** 2, -2 / ht ** 2, 1 / ht ** 2])
                if k < nr - 1:
                    rk = [k + 1, k - 1]
                    rw = [1 / (2 * h), -1 / (2 * h)]
                    add("rr", i, [self.idx(k + 1, j), i, self.idx(k - 1, j)], [1 / h ** 2, -2 / h ** 2, 1 / h ** 2])
                else:
                    rk = [k, k - 1, k - 2]
                    rw = [3 / (2 * h), -4 / (2 * h), 1 / (2 * h)]
                    add("rr", i, [self.idx(kk, j) for kk in (k, k - 1, k - 2, k - 3)],
                        [2 / h ** 2, -5 / h ** 2, 4 / h ** 2, -1 / h ** 2])
                add("r", i, [self.idx(kk, j) for kk in rk], rw)
                cols, vals = [], []
                for kk, w in zip(rk, rw):
                    cols += [self.idx(kk, jp), self.idx(kk, jm)]
                    vals += [w / (2 * ht), -w / (2 * ht)]
                add("rt", i, cols, vals)
        out = []
        for name in ("r", "t", "rr", "rt", "tt"):
            R, C, V = rows[name]
            out.append(sp.csr_matrix((V, (R, [int(c) for c in C])), shape=(self.size, self.size)))
        return out

    def _pole_rows(self):
        """Least-squares quadratic through ring 1: rows for (ux, uy, uxx, uxy, uyy)."""
        ring = self.idx(1, np.arange(self.nt))
        d = self.x[ring] - self.x[0]
        A = np.stack([d[:, 0], d[:, 1], 0.5 * d[:, 0] ** 2, d[:, 0] * d[:, 1], 0.5 * d[:, 1] ** 2], axis=1)
        pinv = np.linalg.pinv(A)
        mats = []
        for row in pinv:
            M = sp.lil_matrix((1, self.size))
            M[0, ring] = row
            M[0, 0] = -row.sum()
            mats.append(M.tocsr())
        return mats

    def _build_operators(self):
        Dr, Dt, Drr, Drt, Dtt = self._ref_operators()
        K = self.Kinv
        ref2 = ((Drr, Drt), (Drt, Dtt))
        D1 = []
        for m in range(2):
            D1.append(sp.diags(K[:, 0, m]) @ Dr + sp.diags(K[:, 1, m]) @ Dt)
        D2 = [[None, None], [None, None]]
        for m in range(2):
            for n in range(m, 2):
                acc = sp.csr_matrix((self.size, self.size))
                for a in range(2):
                    for b in range(2):
                        w = K[:, a, m] * K[:, b, n]
                        inner = ref2[a][b] - sp.diags(self.X[:, 0, a, b]) @ D1[0] - sp.diags(self.X[:, 1, a, b]) @ D1[1]
                        acc = acc + sp.diags(w) @ inner
                D2[m][n] = acc
        pole = self._pole_rows()
        keep = sp.diags((np.arange(self.size) != 0).astype(float))
        e0 = sp.csr_matrix(([1.0], ([0], [0])), shape=(self.size, 1))

        def with_pole(op, row):
            return (keep @ op + e0 @ row).tocsr()

        self.Dx = with_pole(D1[0], pole[0])
        self.Dy = with_pole(D1[1], pole[1])
        self.Dxx = with_pole(D2[0][0], pole[2])
        self.Dxy = with_pole(D2[0][1], pole[3])
        self.Dyy = with_pole(D2[1][1], pole[4])

    # field derivatives ------------------------------------------------------
    def gradient(self, u):
        return np.stack([self.Dx @ u, self.Dy @ u], axis=-1)

    def hessian(self, u):
        uxx, uxy, uyy = self.Dxx @ u, self.Dxy @ u, self.Dyy @ u
        return np.stack([np.stack([uxx, uxy], -1), np.stack([uxy, uyy], -1)], -2)

    def sample(self, func):
        """Evaluate ``func(x)`` at every node."""
        return np.asarray(func(self.x), dtype=float)


@dataclass
class GridField:
    """Nodal values on a :class:`PolarGrid` with derived derivatives."""

    grid: PolarGrid
    u: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.grid.size,):
            raise ValueError("field size does not match the grid")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("field has non-finite values")

    @property
    def du(self):
        return self.grid.gradient(self.u)

    @property
    def d2u(self):
        return self.grid.hessian(self.u)

    def copy(self, u=None):
        return GridField(self.grid, self.u.copy() if u is None else u, dict(self.meta))
