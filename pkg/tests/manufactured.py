"""Problem builders for the manufactured transport solves."""
import numpy as np

from quotient_transport import operator as op
from quotient_transport.cost import QuadraticCost
from quotient_transport.geometry import disc, fitted_domain
from quotient_transport.solver.problem import Inhomogeneity, ProblemSpec
from quotient_transport.symfun import QuotientParams

EPS_NONRADIAL = 0.1


def radial_exact(x):
    return np.sum(np.asarray(x) ** 2, axis=-1)


def radial_problem(nr=33, nt=64, **kw):
    """Unit discs, quadratic cost, ``B = exp(z - |x|^2) / 2``; exact ``|x|^2``."""
    return ProblemSpec(QuadraticCost(), disc(), disc(), Inhomogeneity(0.5, ("exp(z-|x|^2)",)),
                       nr=nr, nt=nt, exact=radial_exact, **kw)


def nonradial_exact(x):
    x = np.asarray(x)
    a, b = x[..., 0], x[..., 1]
    return a * a + b * b + EPS_NONRADIAL * (a ** 3 / 3 + a * b * b)


def _nonradial_grad(x):
    a, b = x[..., 0], x[..., 1]
    return 2 * x + EPS_NONRADIAL * np.stack([a * a + b * b, 2 * a * b], axis=-1)


def _nonradial_w(x):
    a, b = x[..., 0], x[..., 1]
    e = EPS_NONRADIAL
    return np.stack([np.stack([1 + 2 * e * a, 2 * e * b], -1),
                     np.stack([2 * e * b, 1 + 2 * e * a], -1)], -2)


def nonradial_problem(nr=33, nt=64):
    """Manufactured problem whose solution no stencil reproduces exactly.

    ``u* = |x|^2 + eps (x^3/3 + x y^2)`` on the unit disc; the target is a
    radial-Fourier fit of ``T(boundary) = x - Du*(x)`` and
    ``B(x, z) = F[w*](x) exp(z - u*(x))`` so that ``u*`` solves the problem.
    """
    p = QuotientParams(2, 1)

    def value(x, z):
        return op.eval_F(_nonradial_w(x), p) * np.exp(z - nonradial_exact(x))

    B = Inhomogeneity.from_callables(value, value, "manufactured")
    th = 2 * np.pi * np.arange(2048) / 2048
    c = np.stack([np.cos(th), np.sin(th)], axis=-1)
    target = fitted_domain([0.0, 0.0], c - _nonradial_grad(c), modes=96)
    return ProblemSpec(QuadraticCost(), disc(), target, B, nr=nr, nt=nt, exact=nonradial_exact)
