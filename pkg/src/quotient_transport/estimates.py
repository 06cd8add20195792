"""Post-hoc diagnostics on computed solutions.

Nothing here feeds back into the solver: every quantity is measured on a
finished :class:`~quotient_transport.solver.grid.GridField` and reported.

The boundary defining function used throughout is the barrier
``a d^2 - b d`` of the inward distance ``d`` to the target boundary with
``a = 1, b = 2`` by default, which for the unit disc is exactly
``|y|^2 - 1``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .cost import mixed_inverse, y_map
from .errors import SingularW
from .geometry import BarrierParams, boundary_frame, defining_function, signed_distance
from .solver.grid import GridField
from .solver.problem import ProblemSpec

DEFAULT_BARRIER = BarrierParams(1.0, 2.0)
SINGULAR_FLOOR = 1e-8


def _boundary_data(u: GridField, spec: ProblemSpec, params=DEFAULT_BARRIER):
    g = u.grid
    bnd = np.flatnonzero(g.boundary)
    x = g.x[bnd]
    du = u.du[bnd]
    Y = y_map(spec.cost, x, du)
    phi, dphi = defining_function(spec.target, Y, params)
    minv = mixed_inverse(spec.cost, x, Y)
    beta = np.einsum("nq,nqk->nk", dphi, minv)
    gamma = boundary_frame(g.domain, g.theta[bnd]).normal
    w = u.d2u[bnd] - spec.cost.c_xx(x, Y)
    return bnd, x, Y, beta, gamma, w, phi


def obliqueness_report(u: GridField, spec: ProblemSpec, params=DEFAULT_BARRIER) -> dict:
    """``beta . gamma`` at every boundary node and its minimum.

    ``beta_k = phi_q(T_u) c^{q,k}(x, T_u)`` is the gradient of the boundary
    operator in ``p``; ``gamma`` the outward unit normal of the source.
    """
    bnd, x, Y, beta, gamma, w, _ = _boundary_data(u, spec, params)
    bg = np.sum(beta * gamma, axis=1)
    k = int(np.argmin(bg))
    return {
        "min": float(bg[k]),
        "argmin_node": int(bnd[k]),
        "nodes": bnd.tolist(),
        "values": bg.tolist(),
    }


def urbas_identity_check(u: GridField, spec: ProblemSpec, params=DEFAULT_BARRIER, per_node=False):
    """Relative residual of ``(beta.gamma)^2 = (gamma w^-1 gamma)(beta w beta)``.

    Raises
    ------
    SingularW : the modified Hessian is not safely invertible at some
        boundary node.
    """
    bnd, x, Y, beta, gamma, w, _ = _boundary_data(u, spec, params)
    lam = np.linalg.eigvalsh(0.5 * (w + np.swapaxes(w, 1, 2)))
    if np.any(lam[:, 0] <= SINGULAR_FLOOR):
        node = int(bnd[np.argmin(lam[:, 0])])
        raise SingularW(f"modified Hessian singular at boundary node {node} (min eigenvalue {lam[:, 0].min():.3e})")
    winv_g = np.linalg.solve(w, gamma[..., None])[..., 0]
    lhs = np.sum(beta * gamma, axis=1) ** 2
    rhs = np.sum(gamma * winv_g, axis=1) * np.einsum("ni,nij,nj->n", beta, w, beta)
    rel = np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)
    if per_node:
        return float(np.max(rel)), {"nodes": bnd.tolist(), "lhs": lhs.tolist(), "rhs": rhs.tolist(),
                                    "residual": rel.tolist()}
    return float(np.max(rel))


def _segment_distance(points, poly):
    """Distance from each point to the closed polyline ``poly``."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    L = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
    d = points[:, None, :] - a[None]
    s = np.clip(np.sum(d * ab[None], axis=2) / L[None], 0.0, 1.0)
    proj = a[None] + s[..., None] * ab[None]
    return np.min(np.linalg.norm(points[:, None, :] - proj, axis=2), axis=1)


def image_hausdorff(u: GridField, spec: ProblemSpec) -> float:
    """Hausdorff distance between the image polygon ``T_u(boundary nodes)``
    and the target boundary."""
    g = u.grid
    bnd = g.boundary
    Y = y_map(spec.cost, g.x[bnd], u.du[bnd])
    one = float(np.max(np.abs(signed_distance(spec.target, Y))))
    order = np.argsort(g.theta[bnd], kind="stable")
    two = float(np.max(_segment_distance(spec.target.boundary_nodes(), Y[order])))
    return max(one, two)


@dataclass
class DiagnosticsReport:
    obliqueness_min: float
    urbas_residual_max: float | None
    c0_bounds: dict
    c2_bounds: dict
    image_hausdorff: float
    lambda_min_w: float
    chi_min: float
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    def to_json(self, tables=False):
        out = asdict(self)
        if not tables:
            out.pop("tables")
        return out

    @property
    def hard_pass(self):
        """Admissibility and strict obliqueness."""
        return bool(self.lambda_min_w > 0 and self.obliqueness_min > 0)


def bounds_report(u: GridField, spec: ProblemSpec, thresholds: dict | None = None,
                  params=DEFAULT_BARRIER) -> DiagnosticsReport:
    """Measured bounds, obliqueness, Urbas residual and image distance.

    ``thresholds`` may hold ``obliqueness_min`` (lower bound),
    ``urbas_residual_max``, ``image_hausdorff`` and ``c2_ratio`` (upper
    bounds); each present key yields a boolean in ``checks``.
    """
    g = u.grid
    d2 = u.d2u
    w = d2 - spec.cost.c_xx(g.x, y_map(spec.cost, g.x, u.du))
    lam_w = np.linalg.eigvalsh(0.5 * (w + np.swapaxes(w, 1, 2)))[:, 0]
    hess_norm = np.max(np.abs(np.linalg.eigvalsh(d2)), axis=1)
    sup_int = float(np.max(hess_norm[g.interior]))
    sup_bnd = float(np.max(hess_norm[g.boundary]))
    obl = obliqueness_report(u, spec, params)
    notes = []
    try:
        urbas, table = urbas_identity_check(u, spec, params, per_node=True)
    except SingularW as exc:
        urbas, table = None, {}
        notes.append(f"SingularW: {exc}")
    bnd, _, _, beta, gamma, wb, _ = _boundary_data(u, spec, params)
    chi = np.einsum("nil,nl,ni->n", wb, beta, gamma)
    report = DiagnosticsReport(
        obliqueness_min=obl["min"],
        urbas_residual_max=urbas,
        c0_bounds={"sup_abs_u": float(np.max(np.abs(u.u))), "sup_u": float(np.max(u.u)),
                   "inf_u": float(np.min(u.u))},
        c2_bounds={"sup_interior": sup_int, "sup_boundary": sup_bnd, "ratio": sup_int / (1.0 + sup_bnd)},
        image_hausdorff=image_hausdorff(u, spec),
        lambda_min_w=float(np.min(lam_w)),
        chi_min=float(np.min(chi)),
        notes=notes,
        tables={"obliqueness": obl, "urbas": table, "lambda_min_w": lam_w.tolist()},
    )
    thresholds = thresholds or {}
    checks = {}
    if "obliqueness_min" in thresholds:
        checks["obliqueness_min"] = report.obliqueness_min >= thresholds["obliqueness_min"]
    if "urbas_residual_max" in thresholds:
        checks["urbas_residual_max"] = urbas is not None and urbas <= thresholds["urbas_residual_max"]
    if "image_hausdorff" in thresholds:
        checks["image_hausdorff"] = report.image_hausdorff <= thresholds["image_hausdorff"]
    if "c2_ratio" in thresholds:
        checks["c2_ratio"] = report.c2_bounds["ratio"] <= thresholds["c2_ratio"]
    report.checks = checks
    return report


def refinement_drift(reports) -> dict:
    """Relative change of each bound between consecutive grid levels."""
    def rel(a, b):
        return abs(b - a) / max(abs(a), 1e-300)

    out = {"sup_abs_u": [], "sup_interior": [], "sup_boundary": [], "urbas_ratio": []}
    for a, b in zip(reports[:-1], reports[1:]):
        out["sup_abs_u"].append(rel(a.c0_bounds["sup_abs_u"], b.c0_bounds["sup_abs_u"]))
        out["sup_interior"].append(rel(a.c2_bounds["sup_interior"], b.c2_bounds["sup_interior"]))
        out["sup_boundary"].append(rel(a.c2_bounds["sup_boundary"], b.c2_bounds["sup_boundary"]))
        if a.urbas_residual_max and b.urbas_residual_max is not None:
            out["urbas_ratio"].append(b.urbas_residual_max / a.urbas_residual_max)
        else:
            out["urbas_ratio"].append(None)
    return out
