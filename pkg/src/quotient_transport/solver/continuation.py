"""Seeds, damped Newton and the continuation driver."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from ..cost import ball_grid, c_transform, hemisphere_psi, y_map
from ..errors import (
    ContinuationStall,
    LineSearchStall,
    MaxIterations,
    NoConvergence,
    NotAdmissible,
    QuotientTransportError,
    SingularJacobian,
)
from ..geometry import fitted_domain, reflected_copy
from .discrete import Discretization, jacobian_consistency, smooth_direction
from .grid import GridField, PolarGrid
from .problem import ProblemSpec

log = logging.getLogger(__name__)

MAX_HALVINGS = 10


@dataclass
class ContinuationState:
    """Progress of one continuation run."""

    t: float
    field: GridField
    seed: GridField
    disc: Discretization
    history: list = field(default_factory=list)
    status: str = "running"
    jacobian_check: dict | None = None
    newton_log: list = field(default_factory=list)

    @property
    def t_history(self):
        return [h["t"] for h in self.history if h["accepted"]]


# --------------------------------------------------------------------------
# seeds
# --------------------------------------------------------------------------

def quadratic_seed(spec: ProblemSpec, grid: PolarGrid):
    """Explicit seed for the quadratic cost.

    ``u0 = (1 + k)|x - a|^2 / 2 + (a - b).x`` maps ``x`` to
    ``b - k (x - a)``: a reflected copy of the source, scaled by ``k`` so it
    fits inside the target (``a``, ``b`` are the domain centres).
    """
    a = spec.source.center
    b = spec.target.center
    rho_src = np.max(spec.source.rho(spec.source.node_angles()))
    k = spec.shrink * spec.target.rho_min / rho_src
    d = grid.x - a
    u0 = 0.5 * (1 + k) * np.sum(d * d, axis=1) + grid.x @ (a - b)
    return u0, reflected_copy(spec.source, k, b), {"kind": "quadratic", "factor": k}


def c_transform_seed(spec: ProblemSpec, grid: PolarGrid, n_rad=64, n_ang=64):
    """Seed from the c-transform of a hemisphere over a ball in the target.

    The ball is centred at the target centre with radius
    ``shrink * rho_min``. The t = 0 target is fitted to the images of the
    boundary nodes under the discrete seed map.
    """
    b = spec.target.center
    r = spec.shrink * spec.target.rho_min
    psi = hemisphere_psi(b, r)
    u0, _ = c_transform(spec.cost, psi, grid.x, ball_grid(b, r, n_rad, n_ang))
    Y = y_map(spec.cost, grid.x, grid.gradient(u0))
    target0 = fitted_domain(b, Y[grid.boundary], modes=grid.nt // 4)
    return u0, target0, {"kind": "c-transform", "radius": r}


def make_seed(spec: ProblemSpec, grid: PolarGrid):
    if spec.seed_kind == "quadratic":
        return quadratic_seed(spec, grid)
    return c_transform_seed(spec, grid)


# --------------------------------------------------------------------------
# Newton
# --------------------------------------------------------------------------

def _norm(r):
    return float(np.max(np.abs(r))) if r.size else 0.0


def newton_solve(disc: Discretization, u, t, tol=None, max_iter=None, floor=None, history=None):
    """Damped Newton with backtracking for the discrete problem at ``t``.

    A step is accepted only if the residual sup-norm decreases and the
    smallest eigenvalue of the modified Hessian stays above ``floor`` at
    every node.

    Returns
    -------
    u : converged nodal values.
    iterations : number of Newton steps taken.

    Raises
    ------
    NotAdmissible : the starting iterate is not admissible.
    LineSearchStall : ``MAX_HALVINGS`` halvings without an acceptable step.
    MaxIterations : no convergence within ``max_iter`` steps.
    """
    spec = disc.spec
    tol = spec.tol_newton if tol is None else tol
    max_iter = spec.max_newton if max_iter is None else max_iter
    floor = spec.admissibility_floor if floor is None else floor
    u = np.asarray(u, dtype=float).copy()
    ev = disc.evaluate(u, t, with_linearization=True)
    if np.min(ev.lam_min) < floor:
        node = int(np.argmin(ev.lam_min))
        raise NotAdmissible(f"starting iterate not admissible at node {node}", node=node)
    norm = _norm(ev.residual)
    for it in range(max_iter + 1):
        if history is not None:
            history.append({"t": t, "iteration": it, "residual": norm})
        if norm <= tol:
            return u, it
        if it == max_iter:
            break
        J = disc.jacobian_matrix(u, t, ev)
        step = spla.spsolve(J.tocsc(), -ev.residual)
        if not np.all(np.isfinite(step)):
            raise SingularJacobian("Newton system is singular")
        alpha = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = u + alpha * step
            try:
                ev_new = disc.evaluate(trial, t, with_linearization=True)
            except (NotAdmissible, NoConvergence, SingularJacobian):
                ev_new = None
            if ev_new is not None:
                new = _norm(ev_new.residual)
                if new < norm and np.min(ev_new.lam_min) >= floor:
                    break
            alpha *= 0.5
        else:
            raise LineSearchStall(f"no admissible decrease after {MAX_HALVINGS} halvings (t={t:.4g})")
        if history is not None:
            history[-1]["step"] = alpha
        u, ev, norm = trial, ev_new, new
    raise MaxIterations(f"Newton did not reach {tol:.1e} in {max_iter} iterations (residual {norm:.3e})")


# --------------------------------------------------------------------------
# continuation
# --------------------------------------------------------------------------

def build(spec: ProblemSpec) -> ContinuationState:
    """Grid, seed and discretization at ``t = 0``."""
    spec.validate()
    grid = PolarGrid(spec.source, spec.nr, spec.nt)
    u0, target0, meta = make_seed(spec, grid)
    disc = Discretization(spec, grid, u0, target0)
    seed = GridField(grid, u0, meta)
    return ContinuationState(0.0, seed.copy(), seed, disc)


def continuation_run(spec: ProblemSpec, check_jacobian=True, seed=0) -> ContinuationState:
    """Advance ``t`` from 0 to 1 with adaptive steps.

    The step halves whenever Newton fails and grows by 1.5 whenever it
    converges in at most three iterations, within ``[dt_min, dt_max]``.
    With ``check_jacobian`` the final state also carries a finite-difference
    consistency check of the Jacobian along a random smooth direction.
    """
    try:
        state = build(spec)
    except QuotientTransportError as exc:
        exc.stage = "seed"
        raise
    try:
        return _advance(state, spec, check_jacobian, seed)
    except QuotientTransportError as exc:
        exc.stage = getattr(exc, "stage", "newton")
        raise


def _advance(state, spec, check_jacobian, seed):
    disc = state.disc
    newton_log = []
    u, its = newton_solve(disc, state.seed.u, 0.0, history=newton_log)
    state.history.append({"t": 0.0, "dt": 0.0, "iterations": its, "accepted": True})
    t = 0.0
    dt = spec.dt_initial
    while t < 1.0:
        t_try = min(1.0, t + dt)
        try:
            u_new, its = newton_solve(disc, u, t_try, history=newton_log)
        except (QuotientTransportError, np.linalg.LinAlgError) as exc:
            state.history.append({"t": t_try, "dt": dt, "accepted": False, "error": type(exc).__name__})
            log.info("step to t=%.4g failed (%s); halving", t_try, type(exc).__name__)
            dt *= 0.5
            if dt < spec.dt_min:
                state.status = "stalled"
                state.t, state.field = t, GridField(disc.grid, u, {"t": t})
                state.newton_log = newton_log
                raise ContinuationStall(f"step size fell below {spec.dt_min} at t={t:.4g}") from exc
            continue
        state.history.append({"t": t_try, "dt": dt, "iterations": its, "accepted": True})
        t, u = t_try, u_new
        if its <= 3:
            dt = min(dt * 1.5, spec.dt_max)
    state.t = 1.0
    state.field = GridField(disc.grid, u, {"t": 1.0})
    state.status = "converged"
    state.newton_log = newton_log
    if check_jacobian:
        rng = np.random.default_rng(seed)
        v = smooth_direction(disc.grid, rng)
        state.jacobian_check = jacobian_consistency(disc, u, 1.0, v)
    return state


def residual(state: ContinuationState, spec: ProblemSpec | None = None):
    """Residual field of ``state`` at its own ``t``."""
    return GridField(state.disc.grid, state.disc.residual(state.field.u, state.t))


def jacobian_apply(state: ContinuationState, v, spec: ProblemSpec | None = None):
    vv = v.u if isinstance(v, GridField) else v
    return GridField(state.disc.grid, state.disc.jacobian_apply(state.field.u, state.t, vv))


def exact_error(state: ContinuationState, exact) -> float:
    """Sup-norm nodal error against ``exact(x)``."""
    g = state.disc.grid
    return float(np.max(np.abs(state.field.u - exact(g.x))))
