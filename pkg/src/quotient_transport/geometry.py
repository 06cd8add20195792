"""Star-shaped planar domains, boundary frames, distances and convexity checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost import CostModel, SwappedCost, a_matrix_dp, mixed_inverse


class DomainSpec:
    """Domain ``{center + r rho(theta) (cos theta, sin theta) : 0 <= r < 1}``.

    ``rho`` is called as ``rho(theta, d)`` and returns the ``d``-th
    derivative (``d`` in 0, 1, 2). ``resolution`` is the boundary node count
    used by distance queries and boundary sampling.
    """

    def __init__(self, center, rho, resolution=512, kind="custom", params=None):
        self.center = np.asarray(center, dtype=float)
        self._rho = rho
        self.resolution = int(resolution)
        self.kind = kind
        self.params = params or {}
        th = self.node_angles()
        r = self.rho(th)
        if np.min(r) <= 0:
            raise ValueError("radial function must be positive")
        self.rho_min = float(np.min(r))

    # radial function -------------------------------------------------------
    def rho(self, theta, d=0):
        return self._rho(np.asarray(theta, dtype=float), d)

    def node_angles(self, count=None):
        count = self.resolution if count is None else count
        return 2 * np.pi * np.arange(count) / count

    def to_json(self):
        return {"kind": self.kind, "center": self.center.tolist(), **self.params}

    # boundary --------------------------------------------------------------
    def point(self, theta, r=1.0):
        theta = np.asarray(theta, dtype=float)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return self.center + (np.asarray(r) * self.rho(theta))[..., None] * e

    def _derivs(self, theta):
        theta = np.asarray(theta, dtype=float)
        r0, r1, r2 = self.rho(theta, 0), self.rho(theta, 1), self.rho(theta, 2)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        ep = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        P1 = r1[..., None] * e + r0[..., None] * ep
        P2 = (r2 - r0)[..., None] * e + 2 * r1[..., None] * ep
        return P1, P2

    def boundary_nodes(self, count=None):
        return self.point(self.node_angles(count))

    def contains(self, x):
        """Strict containment test (star-shaped about the centre)."""
        d = np.asarray(x, dtype=float) - self.center
        th = np.arctan2(d[..., 1], d[..., 0])
        return np.hypot(d[..., 0], d[..., 1]) < self.rho(th)

    def sample_interior(self, rng, m, margin=0.98):
        """``m`` points uniformly in ``(r, theta)`` shrunk by ``margin``."""
        th = rng.uniform(0, 2 * np.pi, m)
        r = margin * np.sqrt(rng.uniform(0, 1, m))
        return self.point(th, r)

    def interior_grid(self, n_r=8, n_t=16, margin=0.98):
        r = margin * np.linspace(0.0, 1.0, n_r + 1)[1:]
        th = 2 * np.pi * np.arange(n_t) / n_t
        R, T = np.meshgrid(r, th, indexing="ij")
        return np.vstack([self.center[None, :], self.point(T.ravel(), R.ravel())])

    def node_spacing(self):
        P = self.boundary_nodes()
        return float(np.max(np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)))


@dataclass(frozen=True)
class Frame:
    point: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    curvature: np.ndarray


def boundary_frame(dom: DomainSpec, theta) -> Frame:
    """Point, outward unit normal, unit tangent and curvature at ``theta``."""
    P1, P2 = dom._derivs(theta)
    speed = np.linalg.norm(P1, axis=-1)
    tau = P1 / speed[..., None]
    gamma = np.stack([tau[..., 1], -tau[..., 0]], axis=-1)
    kappa = (P1[..., 0] * P2[..., 1] - P1[..., 1] * P2[..., 0]) / speed ** 3
    return Frame(dom.point(theta), gamma, tau, kappa)


# --------------------------------------------------------------------------
# domain families
# --------------------------------------------------------------------------

def disc(center=(0.0, 0.0), radius=1.0, resolution=512) -> DomainSpec:
    R = float(radius)

    def rho(th, d):
        return np.full(np.shape(th), R) if d == 0 else np.zeros(np.shape(th))

    return DomainSpec(center, rho, resolution, "disc", {"radius": R})


def ellipse(center=(0.0, 0.0), semiaxes=(2.0, 1.0), resolution=512) -> DomainSpec:
    a, b = (float(s) for s in semiaxes)

    def rho(th, d):
        g = (b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2
        if d == 0:
            return a * b * g ** -0.5
        g1 = (a * a - b * b) * np.sin(2 * th)
        if d == 1:
            return -0.5 * a * b * g ** -1.5 * g1
        g2 = 2 * (a * a - b * b) * np.cos(2 * th)
        return a * b * (0.75 * g ** -2.5 * g1 ** 2 - 0.5 * g ** -1.5 * g2)

    return DomainSpec(center, rho, resolution, "ellipse", {"semiaxes": [a, b]})


def radial_fourier(center=(0.0, 0.0), a0=1.0, cos=(), sin=(), resolution=512) -> DomainSpec:
    """``rho = a0 + sum_k cos[k-1] cos(k th) + sin[k-1] sin(k th)``."""
    cc = np.asarray(cos, dtype=float)
    ss = np.asarray(sin, dtype=float)

    def rho(th, d):
        th = np.asarray(th, dtype=float)
        out = np.full(th.shape, float(a0)) if d == 0 else np.zeros(th.shape)
        for k in range(1, max(len(cc), len(ss)) + 1):
            ck = cc[k - 1] if k <= len(cc) else 0.0
            sk = ss[k - 1] if k <= len(ss) else 0.0
            c, s = np.cos(k * th), np.sin(k * th)
            if d == 0:
                out = out + ck * c + sk * s
            elif d == 1:
                out = out + k * (-ck * s + sk * c)
            else:
                out = out - k * k * (ck * c + sk * s)
        return out

    return DomainSpec(center, rho, resolution, "radial-fourier",
                      {"a0": float(a0), "cos": cc.tolist(), "sin": ss.tolist()})


def reflected_copy(dom: DomainSpec, factor, center) -> DomainSpec:
    """Image of ``dom`` under ``x -> center - factor (x - dom.center)``."""
    k = float(factor)

    def rho(th, d):
        return k * dom.rho(np.asarray(th) - np.pi, d)

    return DomainSpec(center, rho, dom.resolution, "reflected",
                      {"factor": k, "of": dom.to_json()})


def blend(d0: DomainSpec, d1: DomainSpec, t) -> DomainSpec:
    """Radial interpolation ``(1 - t) rho0 + t rho1`` about ``d1.center``."""
    t = float(t)
    shift = d0.center - d1.center
    if np.linalg.norm(shift) > 1e-14:
        raise ValueError("blend needs domains with a common centre")

    def rho(th, d):
        return (1 - t) * d0.rho(th, d) + t * d1.rho(th, d)

    return DomainSpec(d1.center, rho, max(d0.resolution, d1.resolution), "blend", {"t": t})


def fitted_domain(center, points, modes=None, resolution=512) -> DomainSpec:
    """Radial-Fourier domain fitted by least squares to boundary samples.

    ``points`` must be star-shaped about ``center``. ``modes`` defaults to a
    quarter of the sample count.
    """
    center = np.asarray(center, dtype=float)
    d = np.asarray(points, dtype=float) - center
    th = np.arctan2(d[:, 1], d[:, 0])
    r = np.hypot(d[:, 0], d[:, 1])
    modes = max(1, len(r) // 4) if modes is None else int(modes)
    k = np.arange(1, modes + 1)
    A = np.hstack([np.ones((len(r), 1)), np.cos(np.outer(th, k)), np.sin(np.outer(th, k))])
    coef, *_ = np.linalg.lstsq(A, r, rcond=None)
    dom = radial_fourier(center, coef[0], coef[1 : modes + 1], coef[modes + 1 :], resolution)
    dom.kind = "fitted"
    return dom


def make_domain(spec: dict) -> DomainSpec:
    kind = spec["kind"]
    center = spec.get("center", [0.0, 0.0])
    res = spec.get("resolution", 512)
    if kind == "disc":
        return disc(center, spec.get("radius", 1.0), res)
    if kind == "ellipse":
        return ellipse(center, spec["semiaxes"], res)
    if kind == "radial-fourier":
        return radial_fourier(center, spec.get("a0", 1.0), spec.get("cos", []), spec.get("sin", []), res)
    raise ValueError(f"unknown domain kind {kind!r}")


# --------------------------------------------------------------------------
# distances and barriers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BarrierParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("barrier parameters must be positive")


def barrier_value(d, params: BarrierParams):
    """``a d^2 - b d`` (and its derivative in ``d``)."""
    d = np.asarray(d, dtype=float)
    return params.a * d ** 2 - params.b * d, 2 * params.a * d - params.b


def closest_angle(dom: DomainSpec, x, iters=8):
    """Angle of the nearest boundary point: node search, then Newton in theta."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    th_nodes = dom.node_angles()
    P = dom.point(th_nodes)
    best = np.empty(len(flat), dtype=int)
    for s in range(0, len(flat), 2048):
        blk = flat[s : s + 2048]
        d2 = np.sum((blk[:, None, :] - P[None, :, :]) ** 2, axis=-1)
        best[s : s + 2048] = np.argmin(d2, axis=1)
    th = th_nodes[best]
    dth = 2 * np.pi / dom.resolution
    lo, hi = th - dth, th + dth
    for _ in range(iters):
        Pt = dom.point(th)
        P1, P2 = dom._derivs(th)
        r = flat - Pt
        g = -np.sum(r * P1, axis=-1)
        H = np.sum(P1 * P1, axis=-1) - np.sum(r * P2, axis=-1)
        step = np.where(H > 0, -g / np.where(H > 0, H, 1.0), 0.0)
        th = np.clip(th + step, lo, hi)
    return th.reshape(x.shape[:-1])


def signed_distance(dom: DomainSpec, x, refine=True, with_normal=False):
    """Signed distance to ``dom``'s boundary, negative inside.

    Without ``refine`` this is the minimum over the ``resolution`` boundary
    nodes; with it the nearest node is polished by Newton's method on the
    boundary parameter, which makes the result smooth. ``with_normal`` also
    returns the gradient (the outward normal at the nearest point).
    """
    x = np.asarray(x, dtype=float)
    inside = dom.contains(x)
    if refine:
        th = closest_angle(dom, x)
        dist = np.linalg.norm(x - dom.point(th), axis=-1)
    else:
        flat = x.reshape(-1, 2)
        P = dom.boundary_nodes()
        d2 = np.min(np.sum((flat[:, None, :] - P[None]) ** 2, axis=-1), axis=1)
        dist = np.sqrt(d2).reshape(x.shape[:-1])
        th = dom.node_angles()[np.argmin(np.sum((flat[:, None, :] - P[None]) ** 2, axis=-1), axis=1)].reshape(x.shape[:-1])
    d = np.where(inside, -dist, dist)
    if with_normal:
        return d, boundary_frame(dom, th).normal
    return d


def defining_function(dom: DomainSpec, y, params: BarrierParams | None = None):
    """Defining function of ``dom`` and its gradient.

    With ``params=None`` this is the signed distance itself. Otherwise it is
    the barrier ``a d^2 - b d`` of the inward distance ``d = -signed``,
    which is negative inside and has gradient ``b * normal`` on the boundary.
    """
    sd, normal = signed_distance(dom, y, with_normal=True)
    if params is None:
        return sd, normal
    phi, dphi = barrier_value(-sd, params)
    return phi, (-dphi)[..., None] * normal


# --------------------------------------------------------------------------
# relative c-convexity and the barrier condition
# --------------------------------------------------------------------------

@dataclass
class ConvexityReport:
    delta0: float
    witness_x: np.ndarray
    witness_y: np.ndarray
    witness_theta: float
    extras: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "delta0": self.delta0,
            "witness": {"x": self.witness_x.tolist(), "y": self.witness_y.tolist(), "theta": self.witness_theta},
            **self.extras,
        }


def relative_c_convexity(domA: DomainSpec, domB: DomainSpec, model: CostModel, role="c",
                         n_boundary=None, y_grid=(6, 12)) -> ConvexityReport:
    """Minimum of the tangential c-convexity form over boundary x, interior y.

    The form is ``kappa(x) - c_{ij,l} c^{l,k} gamma_k tau_i tau_j`` at
    ``x in dA``, ``y in B``. ``role="c-star"`` evaluates it for the dual cost
    ``c*(x, y) = c(y, x)``.
    """
    if role not in ("c", "c-star"):
        raise ValueError("role must be 'c' or 'c-star'")
    m = SwappedCost(model) if role == "c-star" else model
    th = domA.node_angles(n_boundary)
    fr = boundary_frame(domA, th)
    ys = domB.interior_grid(*y_grid)
    X = np.broadcast_to(fr.point[:, None, :], (len(th), len(ys), 2))
    Y = np.broadcast_to(ys[None, :, :], X.shape)
    minv = mixed_inverse(m, X, Y)
    corr = np.einsum("...ijl,...lk,...k,...i,...j->...", m.c_xxy(X, Y), minv,
                     fr.normal[:, None, :], fr.tangent[:, None, :], fr.tangent[:, None, :])
    form = fr.curvature[:, None] - corr
    k = np.unravel_index(int(np.argmin(form)), form.shape)
    return ConvexityReport(float(form[k]), fr.point[k[0]], ys[k[1]], float(th[k[0]]),
                           {"min_curvature": float(np.min(fr.curvature))})


def barrier_condition_check(dom: DomainSpec, model: CostModel, phi_tilde, sample_budget: int,
                            target: DomainSpec | None = None, seed=0, h=1e-4):
    """Smallest eigenvalue of ``D^2 phi - D_p A . D phi`` over samples.

    ``(x, p)`` pairs use ``x`` in ``dom`` and ``p = c_x(x, y)`` with ``y``
    sampled in ``target`` (default: ``dom``). Derivatives of ``phi_tilde``
    and of ``A`` in ``p`` are central differences.
    """
    rng = np.random.default_rng(seed)
    target = dom if target is None else target
    x = dom.sample_interior(rng, sample_budget)
    y = target.sample_interior(rng, sample_budget)
    p = model.c_x(x, y)
    e = np.eye(2) * h
    grad = np.stack([(phi_tilde(x + e[k]) - phi_tilde(x - e[k])) / (2 * h) for k in range(2)], axis=-1)
    hess = np.empty((len(x), 2, 2))
    f0 = phi_tilde(x)
    for i in range(2):
        for j in range(2):
            if i == j:
                hess[:, i, i] = (phi_tilde(x + e[i]) - 2 * f0 + phi_tilde(x - e[i])) / h ** 2
            else:
                hess[:, i, j] = (
                    phi_tilde(x + e[i] + e[j]) - phi_tilde(x + e[i] - e[j])
                    - phi_tilde(x - e[i] + e[j]) + phi_tilde(x - e[i] - e[j])
                ) / (4 * h * h)
    dpa = a_matrix_dp(model, x, p, Y=y, method="fd")
    mat = hess - np.einsum("mijk,mk->mij", dpa, grad)
    mat = 0.5 * (mat + np.swapaxes(mat, 1, 2))
    ev = np.linalg.eigvalsh(mat)[:, 0]
    k = int(np.argmin(ev))
    return {"delta_tilde": float(ev[k]), "witness": {"x": x[k].tolist(), "p": p[k].tolist()},
            "samples": int(sample_budget)}
