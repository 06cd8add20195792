"""Cost functions ``c(x, y)`` and the transport machinery built on them.

Index convention for mixed derivatives: indices before the comma are
x-derivatives, indices after it are y-derivatives. So ``c_xy[..., i, j]``
is ``d^2 c / dx_i dy_j`` and the inverse matrix ``inv(c_xy)`` carries a
y-type first index. Array layout of the derivative evaluators:

==========  =====================  ==========================
method      shape                  entry
==========  =====================  ==========================
c_xx        (..., n, n)            c_{ij}
c_xy        (..., n, n)            c_{i,j}
c_xxy       (..., n, n, n)         c_{ij,k}
c_xyy       (..., n, n, n)         c_{k,ij}  (x-index first)
c_xxyy      (..., n, n, n, n)      c_{ij,st}
==========  =====================  ==========================

Every evaluator broadcasts over leading dimensions of ``x`` and ``y``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySampleSet, NoConvergence, NotOrthogonal, SingularJacobian

DET_FLOOR = 1e-12
A2_FLOOR = 1e-10


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.broadcast_arrays(x, y)


class CostModel:
    """Base cost: every derivative by nested central differences of ``c``.

    Subclasses override evaluators with closed forms. ``scale`` sets the
    finite-difference step sizes (``h2 = 1e-4 * scale``, ``h3 = 1e-3 *
    scale``, ``h4 = 5e-3 * scale``).
    """

    name = "scalar"
    analytic = False

    def __init__(self, scale=1.0, box=None):
        self.scale = float(scale)
        self.box = None if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))

    # scalar ---------------------------------------------------------------
    def c(self, x, y):
        raise NotImplementedError

    # finite-difference machinery -------------------------------------------
    def _nested(self, x, y, dirs, h):
        if not dirs:
            return self.c(x, y)
        (which, i), rest = dirs[0], dirs[1:]
        e = np.zeros(x.shape[-1])
        e[i] = h
        if which == "x":
            return (self._nested(x + e, y, rest, h) - self._nested(x - e, y, rest, h)) / (2 * h)
        return (self._nested(x, y + e, rest, h) - self._nested(x, y - e, rest, h)) / (2 * h)

    def _fd_tensor(self, x, y, kinds, h):
        x, y = _pair(x, y)
        n = x.shape[-1]
        out = np.empty(x.shape[:-1] + (n,) * len(kinds))
        for idx in itertools.product(range(n), repeat=len(kinds)):
            dirs = list(zip(kinds, idx))
            out[(Ellipsis,) + idx] = self._nested(x, y, dirs, h)
        return out

    def _grad(self, x, y, which):
        # fourth-order central stencil
        x, y = _pair(x, y)
        n = x.shape[-1]
        h = 1e-3 * self.scale
        out = np.empty(x.shape)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            if which == "x":
                f = lambda s: self.c(x + s * e, y)  # noqa: E731
            else:
                f = lambda s: self.c(x, y + s * e)  # noqa: E731
            out[..., i] = (8 * (f(1) - f(-1)) - (f(2) - f(-2))) / (12 * h)
        return out

    def c_x(self, x, y):
        return self._grad(x, y, "x")

    def c_y(self, x, y):
        return self._grad(x, y, "y")

    def c_xx(self, x, y):
        return self._fd_tensor(x, y, "xx", 1e-4 * self.scale)

    def c_yy(self, x, y):
        return self._fd_tensor(x, y, "yy", 1e-4 * self.scale)

    def c_xy(self, x, y):
        return self._fd_tensor(x, y, "xy", 1e-4 * self.scale)

    def c_xxy(self, x, y):
        return self._fd_tensor(x, y, "xxy", 1e-3 * self.scale)

    def c_xyy(self, x, y):
        return self._fd_tensor(x, y, "xyy", 1e-3 * self.scale)

    def c_xxyy(self, x, y):
        return self._fd_tensor(x, y, "xxyy", 5e-3 * self.scale)

    def describe(self):
        return {"kind": self.name}


class ScalarCost(CostModel):
    """User cost given only as a scalar function ``func(x, y)``.

    ``func`` must broadcast over leading dimensions (last axis = coordinates).
    """

    def __init__(self, func, scale=1.0, box=None, name="scalar"):
        super().__init__(scale, box)
        self._func = func
        self.name = name

    def c(self, x, y):
        x, y = _pair(x, y)
        return self._func(x, y)


class QuadraticCost(CostModel):
    """``c(x, y) = |x - y|^2 / 2``."""

    name = "quadratic"
    analytic = True

    def c(self, x, y):
        x, y = _pair(x, y)
        return 0.5 * np.sum((x - y) ** 2, axis=-1)

    def c_x(self, x, y):
        x, y = _pair(x, y)
        return x - y

    def c_y(self, x, y):
        x, y = _pair(x, y)
        return y - x

    def _eye(self, x, y, sign=1.0):
        x, y = _pair(x, y)
        n = x.shape[-1]
        return np.broadcast_to(sign * np.eye(n), x.shape[:-1] + (n, n)).copy()

    def c_xx(self, x, y):
        return self._eye(x, y)

    def c_yy(self, x, y):
        return self._eye(x, y)

    def c_xy(self, x, y):
        return self._eye(x, y, -1.0)

    def c_xxy(self, x, y):
        x, y = _pair(x, y)
        n = x.shape[-1]
        return np.zeros(x.shape[:-1] + (n, n, n))

    c_xyy = c_xxy

    def c_xxyy(self, x, y):
        x, y = _pair(x, y)
        n = x.shape[-1]
        return np.zeros(x.shape[:-1] + (n, n, n, n))


class PerturbedQuadraticCost(CostModel):
    """``c(x, y) = |x - y|^2 / 2 + eps * (x . y)^3``."""

    name = "perturbed"
    analytic = True

    def __init__(self, eps, scale=1.0, box=None):
        super().__init__(scale, box)
        self.eps = float(eps)

    def describe(self):
        return {"kind": self.name, "epsilon": self.eps}

    def c(self, x, y):
        x, y = _pair(x, y)
        s = np.sum(x * y, axis=-1)
        return 0.5 * np.sum((x - y) ** 2, axis=-1) + self.eps * s ** 3

    def c_x(self, x, y):
        x, y = _pair(x, y)
        s = np.sum(x * y, axis=-1)[..., None]
        return x - y + 3 * self.eps * s ** 2 * y

    def c_y(self, x, y):
        x, y = _pair(x, y)
        s = np.sum(x * y, axis=-1)[..., None]
        return y - x + 3 * self.eps * s ** 2 * x

    def c_xx(self, x, y):
        x, y = _pair(x, y)
        n = x.shape[-1]
        s = np.sum(x * y, axis=-1)[..., None, None]
        return np.eye(n) + 6 * self.eps * s * y[..., :, None] * y[..., None, :]

    def c_yy(self, x, y):
        x, y = _pair(x, y)
        n = x.shape[-1]
        s = np.sum(x * y, axis=-1)[..., None, None]
        return np.eye(n) + 6 * self.eps * s * x[..., :, None] * x[..., None, :]

    def c_xy(self, x, y):
        x, y = _pair(x, y)
        n = x.shape[-1]
        s = np.sum(x * y, axis=-1)[..., None, None]
        eye = np.eye(n)
        return -eye + 6 * self.eps * s * y[..., :, None] * x[..., None, :] + 3 * self.eps * s ** 2 * eye

    def c_xxy(self, x, y):
        # [i, j, k] = 6 eps (x_k y_i y_j + s d_ik y_j + s y_i d_jk)
        x, y = _pair(x, y)
        n = x.shape[-1]
        s = np.sum(x * y, axis=-1)[..., None, None, None]
        eye = np.eye(n)
        t = (
            y[..., :, None, None] * y[..., None, :, None] * x[..., None, None, :]
            + s * eye[:, None, :] * y[..., None, :, None]
            + s * y[..., :, None, None] * eye[None, :, :]
        )
        return 6 * self.eps * t

    def c_xyy(self, x, y):
        # [k, i, j] = 6 eps (x_i x_j y_k + s x_i d_kj + s x_j d_ki)
        x, y = _pair(x, y)
        n = x.shape[-1]
        s = np.sum(x * y, axis=-1)[..., None, None, None]
        eye = np.eye(n)
        t = (
            y[..., :, None, None] * x[..., None, :, None] * x[..., None, None, :]
            + s * x[..., None, :, None] * eye[:, None, :]
            + s * x[..., None, None, :] * eye[:, :, None]
        )
        return 6 * self.eps * t

    def c_xxyy(self, x, y):
        x, y = _pair(x, y)
        n = x.shape[-1]
        s = np.sum(x * y, axis=-1)[..., None, None, None, None]
        d = np.eye(n)
        X = lambda a: x[(Ellipsis,) + tuple(slice(None) if k == a else None for k in range(4))]  # noqa: E731
        Y = lambda a: y[(Ellipsis,) + tuple(slice(None) if k == a else None for k in range(4))]  # noqa: E731
        D = lambda a, b: d[tuple(slice(None) if k in (a, b) else None for k in range(4))]  # noqa: E731
        # axes: 0=i, 1=j, 2=s, 3=t
        t = (
            X(2) * (D(0, 3) * Y(1) + Y(0) * D(1, 3))
            + X(3) * D(0, 2) * Y(1)
            + s * D(0, 2) * D(1, 3)
            + X(3) * Y(0) * D(1, 2)
            + s * D(0, 3) * D(1, 2)
        )
        return 6 * self.eps * t


class SwappedCost(CostModel):
    """``c*(x, y) = c(y, x)``: the dual cost with the roles exchanged."""

    def __init__(self, base: CostModel):
        super().__init__(base.scale, None)
        self.base = base
        self.name = f"{base.name}*"
        self.analytic = base.analytic

    def c(self, x, y):
        return self.base.c(y, x)

    def c_x(self, x, y):
        return self.base.c_y(y, x)

    def c_y(self, x, y):
        return self.base.c_x(y, x)

    def c_xx(self, x, y):
        return self.base.c_yy(y, x)

    def c_yy(self, x, y):
        return self.base.c_xx(y, x)

    def c_xy(self, x, y):
        return np.swapaxes(self.base.c_xy(y, x), -1, -2)

    def c_xxy(self, x, y):
        # c*_{ij,k}(x, y) = c_{k,ij}(y, x)
        return np.moveaxis(self.base.c_xyy(y, x), -3, -1)

    def c_xyy(self, x, y):
        # c*_{k,ij}(x, y) = c_{ij,k}(y, x)
        return np.moveaxis(self.base.c_xxy(y, x), -1, -3)

    def c_xxyy(self, x, y):
        t = self.base.c_xxyy(y, x)
        return np.moveaxis(t, (-4, -3), (-2, -1))


def fd_twin(model: CostModel) -> ScalarCost:
    """Same scalar cost with every derivative by finite differences."""
    return ScalarCost(model.c, scale=model.scale, box=model.box, name=f"{model.name}-fd")


def make_cost(spec: dict) -> CostModel:
    kind = spec.get("kind")
    if kind == "quadratic":
        return QuadraticCost()
    if kind == "perturbed":
        return PerturbedQuadraticCost(spec.get("epsilon", 1e-2))
    raise ValueError(f"unknown cost kind {kind!r}")


# --------------------------------------------------------------------------
# (A1)/(A2): the maps Y and T_u, the matrix A
# --------------------------------------------------------------------------

def mixed_inverse(model, x, y):
    """``inv(c_xy)`` (y-type first index); raises on (A2) failure."""
    m = model.c_xy(x, y)
    det = np.linalg.det(m)
    if np.any(np.abs(det) < DET_FLOOR):
        raise SingularJacobian(f"|det D_xy c| = {np.min(np.abs(det)):.3e} below {DET_FLOOR}")
    return np.linalg.inv(m)


def y_map(model: CostModel, x, p, y0=None, tol=1e-10, maxiter=50):
    """Solve ``c_x(x, Y) = p`` for ``Y`` by Newton's method.

    Broadcasts over leading dimensions. ``y0`` is the starting guess
    (default ``x``). If the model declares a bounding ``box`` for ``y``,
    leaving it counts as divergence.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    x, p = np.broadcast_arrays(x, p)
    y = np.array(x if y0 is None else np.broadcast_to(y0, x.shape), dtype=float)
    for _ in range(maxiter):
        r = model.c_x(x, y) - p
        err = np.max(np.abs(r)) if r.size else 0.0
        if err <= tol:
            return y
        J = model.c_xy(x, y)
        det = np.linalg.det(J)
        if np.any(np.abs(det) < DET_FLOOR):
            raise SingularJacobian(f"|det D_xy c| = {np.min(np.abs(det)):.3e} at a Newton iterate")
        y = y - np.linalg.solve(J, r[..., None])[..., 0]
        if not np.all(np.isfinite(y)):
            break
        if model.box is not None:
            lo, hi = model.box
            if np.any(y < lo) or np.any(y > hi):
                raise NoConvergence("Y left the declared bounding box; p is outside D_x c(U)")
    r = model.c_x(x, y) - p
    if np.all(np.isfinite(r)) and np.max(np.abs(r)) <= tol:
        return y
    raise NoConvergence(f"y_map did not converge in {maxiter} iterations")


def t_map(model: CostModel, x, du, y0=None, **kw):
    """Transport map ``T_u(x)`` from the gradient ``Du(x)``."""
    return y_map(model, x, du, y0=y0, **kw)


def a_matrix(model: CostModel, x, p, y0=None, Y=None):
    """``A(x, p) = D_x^2 c(x, Y(x, p))``."""
    if Y is None:
        Y = y_map(model, x, p, y0=y0)
    return model.c_xx(x, Y)


def a_matrix_dp(model: CostModel, x, p, Y=None, method="chain", h=1e-5):
    """``D_{p_k} A_ij`` as an array indexed ``[..., i, j, k]``.

    ``method="chain"`` uses ``c_{ij,q} inv(c_xy)_{qk}``; ``method="fd"``
    differentiates :func:`a_matrix` in ``p`` by central differences.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if method == "chain":
        if Y is None:
            Y = y_map(model, x, p)
        minv = mixed_inverse(model, x, Y)
        return np.einsum("...ijq,...qk->...ijk", model.c_xxy(x, Y), minv)
    n = p.shape[-1]
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((a_matrix(model, x, p + e, y0=Y) - a_matrix(model, x, p - e, y0=Y)) / (2 * h))
    return np.stack(cols, axis=-1)


def a2_witness(model: CostModel, x, y):
    """Smallest ``|det D_xy c|`` over the paired samples."""
    return float(np.min(np.abs(np.linalg.det(model.c_xy(x, y)))))


# --------------------------------------------------------------------------
# MTW tensor
# --------------------------------------------------------------------------

@dataclass
class MtwSample:
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    value: float = float("nan")

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)
        self.eta = np.asarray(self.eta, dtype=float)

    def to_json(self):
        return {k: np.asarray(getattr(self, k)).tolist() for k in ("x", "y", "xi", "eta")}


def mtw_tensor(model: CostModel, x, y):
    """``T_{ij,st} = c_{ij,st} - c^{q,r} c_{ij,q} c_{r,st}`` and ``inv(c_xy)``."""
    minv = mixed_inverse(model, x, y)
    t = model.c_xxyy(x, y) - np.einsum(
        "...qr,...ijq,...rst->...ijst", minv, model.c_xxy(x, y), model.c_xyy(x, y)
    )
    return t, minv


def mtw_values(model: CostModel, x, y, xi, eta, orth_tol=1e-10):
    """Vectorised MTW contraction for arrays of samples."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(np.abs(np.sum(xi * eta, axis=-1)) > orth_tol):
        raise NotOrthogonal("xi and eta must be orthogonal")
    t, minv = mtw_tensor(model, x, y)
    e2 = np.einsum("...sk,...k->...s", minv, eta)
    return np.einsum("...ijst,...i,...j,...s,...t->...", t, xi, xi, e2, e2)


def mtw_contraction(model: CostModel, s: MtwSample) -> float:
    if abs(np.linalg.norm(s.xi) - 1) > 1e-12 or abs(np.linalg.norm(s.eta) - 1) > 1e-12:
        raise ValueError("xi and eta must be unit vectors")
    v = float(mtw_values(model, s.x, s.y, s.xi, s.eta))
    s.value = v
    return v


@dataclass
class A3Report:
    classification: str
    min_value: float
    witness: MtwSample
    samples: int
    tolerance: float
    a2_min_det: float
    extras: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "classification": self.classification,
            "min_value": self.min_value,
            "witness": self.witness.to_json(),
            "samples": self.samples,
            "tolerance": self.tolerance,
            "a2_min_det": self.a2_min_det,
            **self.extras,
        }


def _unit_pairs(rng, m, n):
    xi = rng.standard_normal((m, n))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    eta = rng.standard_normal((m, n))
    eta -= np.sum(eta * xi, axis=1, keepdims=True) * xi
    eta /= np.linalg.norm(eta, axis=1, keepdims=True)
    eta -= np.sum(eta * xi, axis=1, keepdims=True) * xi
    return xi, eta


def classify_a3(model: CostModel, sample_budget: int, dom_minus, dom_plus, seed=0, tol=None):
    """Classify a cost as ``A3``, ``A3w-only`` or ``violated`` by sampling.

    ``dom_minus``/``dom_plus`` are :class:`~quotient_transport.geometry.DomainSpec`
    instances (or anything with ``sample_interior(rng, m)``). ``tol`` defaults
    to ``1e-8`` for analytic costs and ``1e-4`` for finite-difference ones.
    """
    if sample_budget <= 0:
        raise EmptySampleSet("sample_budget must be positive")
    if tol is None:
        tol = 1e-8 if model.analytic else 1e-4
    rng = np.random.default_rng(seed)
    x = dom_minus.sample_interior(rng, sample_budget)
    y = dom_plus.sample_interior(rng, sample_budget)
    n = x.shape[1]
    xi, eta = _unit_pairs(rng, sample_budget, n)
    det = a2_witness(model, x, y)
    if det < A2_FLOOR:
        raise SingularJacobian(f"(A2) fails on the sample set: min |det| = {det:.3e}")
    vals = mtw_values(model, x, y, xi, eta)
    k = int(np.argmin(vals))
    m = float(vals[k])
    if m < -tol:
        label = "violated"
    elif m <= tol:
        label = "A3w-only"
    else:
        label = "A3"
    w = MtwSample(x[k], y[k], xi[k], eta[k], m)
    extras = {"c0": m} if label == "A3" else {}
    return A3Report(label, m, w, sample_budget, tol, det, extras)


# --------------------------------------------------------------------------
# c-transform and c-segments
# --------------------------------------------------------------------------

def ball_grid(center, radius, n_rad=64, n_ang=64):
    """Tensor-product polar sample set on a closed ball in the plane.

    Radii ``0, r/(n_rad-1), ..., r``; the centre appears once.
    """
    center = np.asarray(center, dtype=float)
    rs = np.linspace(0.0, radius, n_rad)[1:]
    th = 2 * np.pi * np.arange(n_ang) / n_ang
    R, T = np.meshgrid(rs, th, indexing="ij")
    pts = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
    return np.vstack([center[None, :], center + pts])


def hemisphere_psi(center, radius):
    """``psi(y) = -sqrt(r^2 - |y - y0|^2)`` (clipped at the rim)."""
    center = np.asarray(center, dtype=float)

    def psi(y):
        d2 = np.sum((np.asarray(y) - center) ** 2, axis=-1)
        return -np.sqrt(np.maximum(radius ** 2 - d2, 0.0))

    return psi


def _quadratic_refine(model, psi, x, samples, vals, k, nb=12):
    """One local quadratic fit around sample ``k``; returns ``(value, y)``."""
    y0 = samples[k]
    d = samples - y0
    order = np.argsort(np.sum(d * d, axis=1))[: nb + 1]
    D = d[order]
    v = vals[order]
    n = D.shape[1]
    iu = np.triu_indices(n)
    quad = np.stack([D[:, i] * D[:, j] * (0.5 if i == j else 1.0) for i, j in zip(*iu)], axis=1)
    A = np.hstack([np.ones((len(D), 1)), D, quad])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    b = coef[1 : 1 + n]
    H = np.zeros((n, n))
    H[iu] = coef[1 + n :]
    H = H + np.triu(H, 1).T
    if np.any(np.linalg.eigvalsh(H) >= 0):
        return vals[k], y0
    step = -np.linalg.solve(H, b)
    if np.linalg.norm(step) > np.sqrt(np.max(np.sum(D * D, axis=1))):
        return vals[k], y0
    y1 = y0 + step
    v1 = float(model.c(x, y1) - psi(y1))
    if np.isfinite(v1) and v1 > vals[k]:
        return v1, y1
    return vals[k], y0


def c_transform(model: CostModel, psi, x, samples, refine=True, chunk=512):
    """``u0(x) = max_{y in samples} [c(x, y) - psi(y)]`` and its argmax.

    Parameters
    ----------
    psi : callable on points (used at the samples and at refined points).
    x : (..., n) evaluation points.
    samples : (N, n) finite sample set inside the target.

    Returns
    -------
    values : array of shape ``x.shape[:-1]``
    argmax : array of shape ``x.shape`` (the c-support contact points)
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptySampleSet("c-transform needs a nonempty sample set")
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    psis = psi(samples)
    values = np.empty(len(flat))
    argmax = np.empty_like(flat)
    for start in range(0, len(flat), chunk):
        xs = flat[start : start + chunk]
        V = model.c(xs[:, None, :], samples[None, :, :]) - psis[None, :]
        ks = np.argmax(V, axis=1)
        for r, k in enumerate(ks):
            if refine:
                v, y = _quadratic_refine(model, psi, xs[r], samples, V[r], k)
            else:
                v, y = V[r, k], samples[k]
            values[start + r] = v
            argmax[start + r] = y
    return values.reshape(x.shape[:-1]), argmax.reshape(x.shape)


def c_segment(model: CostModel, anchor, z0, z1, steps: int, star=False, x0=None, tol=1e-10, maxiter=50):
    """Preimage of the straight segment ``[z0, z1]`` under ``x -> D_y c(x, anchor)``.

    With ``star=True`` the roles swap: returns the ``y`` solving
    ``D_x c(anchor, y) = z``. Returns an ``(steps, n)`` polyline.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    anchor = np.asarray(anchor, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    ts = np.linspace(0.0, 1.0, steps)
    zs = (1 - ts)[:, None] * z0 + ts[:, None] * z1
    if star:
        out = []
        guess = anchor if x0 is None else np.asarray(x0, float)
        for z in zs:
            guess = y_map(model, anchor, z, y0=guess, tol=tol, maxiter=maxiter)
            out.append(guess)
        return np.array(out)
    out = []
    guess = anchor.copy() if x0 is None else np.asarray(x0, float)
    for z in zs:
        xk = guess.copy()
        for _ in range(maxiter):
            r = model.c_y(xk, anchor) - z
            if np.max(np.abs(r)) <= tol:
                break
            J = np.swapaxes(model.c_xy(xk, anchor), -1, -2)
            if abs(np.linalg.det(J)) < DET_FLOOR:
                raise SingularJacobian("D_xy c singular along the c-segment")
            xk = xk - np.linalg.solve(J, r)
        else:
            raise NoConvergence("c-segment Newton solve did not converge")
        out.append(xk)
        guess = xk
    return np.array(out)
