"""Discrete residual and Jacobian of the homotopy family.

For ``t`` in ``[0, 1]`` the unknown nodal vector ``u`` solves

    F[D^2 u - A(x, Du)] = t B(x, u) + (1 - t) exp(u - u0) F0     (interior)
    d_t(Y(x, Du)) = 0                                            (boundary)

where ``F0`` is the discrete operator evaluated on the seed ``u0`` and
``d_t`` is the signed distance to the homotopy target domain at ``t``.
At ``t = 1`` the target is the prescribed one and the right-hand side is
``B``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import operator as op
from ..cost import a_matrix_dp, mixed_inverse, y_map
from ..errors import NotAdmissible
from ..geometry import DomainSpec, blend, signed_distance
from .grid import PolarGrid
from .problem import ProblemSpec


@dataclass
class Evaluation:
    """Everything the residual computes on the way, reused by the Jacobian."""

    u: np.ndarray
    t: float
    du: np.ndarray
    Y: np.ndarray
    w: np.ndarray
    residual: np.ndarray
    lam_min: np.ndarray
    F: np.ndarray | None = None
    Fij: np.ndarray | None = None
    normal: np.ndarray | None = None


class Discretization:
    """Grid, seed and homotopy targets of one problem.

    Parameters
    ----------
    spec : the problem.
    grid : polar grid over the source domain.
    u0 : seed nodal values.
    target0 : the image of the source under the seed map; the boundary
        target at ``t`` is the radial blend of ``target0`` and
        ``spec.target``.
    """

    def __init__(self, spec: ProblemSpec, grid: PolarGrid, u0, target0: DomainSpec):
        self.spec = spec
        self.grid = grid
        self.u0 = np.asarray(u0, dtype=float)
        self.target0 = target0
        self.interior = grid.interior
        self.boundary = grid.boundary
        self._targets = {}
        self._Y = None
        ev = self.evaluate(self.u0, 0.0, rhs=False)
        self.F0 = ev.F

    # homotopy pieces ----------------------------------------------------------
    def target(self, t):
        t = float(t)
        if t >= 1.0:
            return self.spec.target
        if t not in self._targets:
            self._targets = {t: blend(self.target0, self.spec.target, t)}
        return self._targets[t]

    def rhs(self, u, t):
        x = self.grid.x
        return t * self.spec.B(x, u) + (1 - t) * np.exp(u - self.u0) * self.F0

    def rhs_dz(self, u, t):
        x = self.grid.x
        return t * self.spec.B.dz(x, u) + (1 - t) * np.exp(u - self.u0) * self.F0

    # evaluation ---------------------------------------------------------------
    def evaluate(self, u, t, rhs=True, with_linearization=False):
        """Residual and intermediate quantities at ``(u, t)``.

        Raises :class:`NotAdmissible` naming the first interior node whose
        modified Hessian is not positive definite.
        """
        g = self.grid
        spec = self.spec
        u = np.asarray(u, dtype=float)
        du = g.gradient(u)
        Y = y_map(spec.cost, g.x, du, y0=self._Y)
        self._Y = Y
        w = g.hessian(u) - spec.cost.c_xx(g.x, Y)
        lam_min = op.min_eigenvalue(w)
        inner = np.flatnonzero(self.interior)
        bad = inner[~(lam_min[inner] > 0.0)]
        if bad.size:
            raise NotAdmissible(
                f"modified Hessian not positive definite at node {int(bad[0])} "
                f"(smallest eigenvalue {lam_min[bad[0]]:.3e})",
                node=int(bad[0]),
            )
        F = np.zeros(g.size)
        Fij = np.zeros((g.size, 2, 2))
        if with_linearization:
            F[inner], Fij[inner], _ = op.value_and_linearization(w[inner], spec.params)
        else:
            F[inner] = op.eval_F(w[inner], spec.params)
        res = np.zeros(g.size)
        if rhs:
            res[inner] = F[inner] - self.rhs(u, t)[inner]
        bnd = np.flatnonzero(self.boundary)
        sd, normal = signed_distance(self.target(t), Y[bnd], with_normal=True)
        res[bnd] = sd
        return Evaluation(u, float(t), du, Y, w, res, lam_min, F, Fij if with_linearization else None, normal)

    def residual(self, u, t):
        return self.evaluate(u, t).residual

    # linearization ------------------------------------------------------------
    def _lin_parts(self, ev: Evaluation):
        """Per-node coefficients of the linearized operator."""
        g = self.grid
        spec = self.spec
        dpa = a_matrix_dp(spec.cost, g.x, ev.du, Y=ev.Y)  # [node, i, j, k]
        drift = np.einsum("nij,nijk->nk", ev.Fij, dpa)
        zero = self.rhs_dz(ev.u, ev.t)
        bnd = np.flatnonzero(self.boundary)
        minv = mixed_inverse(spec.cost, g.x[bnd], ev.Y[bnd])
        beta = np.einsum("nq,nqk->nk", ev.normal, minv)
        return drift, zero, beta

    def jacobian_matrix(self, u, t, ev: Evaluation | None = None):
        """Assembled sparse Jacobian (CSR)."""
        g = self.grid
        if ev is None or ev.Fij is None:
            ev = self.evaluate(u, t, with_linearization=True)
        drift, zero, beta = self._lin_parts(ev)
        mask = self.interior.astype(float)
        F = ev.Fij
        diag = sp.diags
        J = (
            diag(mask * F[:, 0, 0]) @ g.Dxx
            + diag(mask * 2 * F[:, 0, 1]) @ g.Dxy
            + diag(mask * F[:, 1, 1]) @ g.Dyy
            - diag(mask * drift[:, 0]) @ g.Dx
            - diag(mask * drift[:, 1]) @ g.Dy
            - diag(mask * zero)
        )
        b = np.zeros((g.size, 2))
        b[self.boundary] = beta
        J = J + diag(b[:, 0]) @ g.Dx + diag(b[:, 1]) @ g.Dy
        return J.tocsr()

    def jacobian_apply(self, u, t, v, ev: Evaluation | None = None):
        """Matrix-free application of the Jacobian to ``v``."""
        g = self.grid
        if ev is None or ev.Fij is None:
            ev = self.evaluate(u, t, with_linearization=True)
        drift, zero, beta = self._lin_parts(ev)
        v = np.asarray(v, dtype=float)
        dv = g.gradient(v)
        d2v = g.hessian(v)
        out = np.einsum("nij,nij->n", ev.Fij, d2v) - np.sum(drift * dv, axis=1) - zero * v
        out[self.boundary] = np.sum(beta * dv[self.boundary], axis=1)
        return out


def smooth_direction(grid: PolarGrid, rng, terms=6):
    """Random smooth nodal direction: a random mix of low-order modes."""
    x = grid.x - grid.domain.center
    scale = float(np.max(np.linalg.norm(x, axis=1))) or 1.0
    s = x / scale
    basis = [
        np.ones(grid.size), s[:, 0], s[:, 1], s[:, 0] ** 2, s[:, 0] * s[:, 1], s[:, 1] ** 2,
        np.sin(np.pi * s[:, 0]), np.cos(np.pi * s[:, 1]), s[:, 0] ** 3 - s[:, 1] ** 2 * s[:, 0],
    ]
    idx = rng.choice(len(basis), size=min(terms, len(basis)), replace=False)
    coef = rng.normal(size=len(idx))
    return sum(c * basis[i] for c, i in zip(coef, idx))


def jacobian_consistency(disc: Discretization, u, t, v, h=1e-5):
    """Relative 2-norm mismatch between the centred difference of the
    residual along ``v`` and :meth:`Discretization.jacobian_apply`."""
    jv = disc.jacobian_apply(u, t, v)
    fd = (disc.residual(u + h * v, t) - disc.residual(u - h * v, t)) / (2 * h)
    jm = disc.jacobian_matrix(u, t) @ v
    denom = max(np.linalg.norm(jv), 1e-300)
    return {
        "rel_error": float(np.linalg.norm(fd - jv) / denom),
        "assembled_vs_apply": float(np.linalg.norm(jm - jv) / denom),
        "h": h,
    }
