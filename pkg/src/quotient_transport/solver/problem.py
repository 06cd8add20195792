"""Problem description: cost, domains, inhomogeneity and discretisation knobs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cost import CostModel
from ..errors import ConfigError
from ..geometry import DomainSpec
from ..symfun import QuotientParams

# whitelisted factors: value(x, z) and d/dz value(x, z)
_FACTORS = {
    "exp(z)": (lambda x, z: np.exp(z), lambda x, z: np.exp(z)),
    "exp(z-|x|^2)": (
        lambda x, z: np.exp(z - np.sum(x * x, axis=-1)),
        lambda x, z: np.exp(z - np.sum(x * x, axis=-1)),
    ),
    "exp(2z)": (lambda x, z: np.exp(2 * z), lambda x, z: 2 * np.exp(2 * z)),
    "exp(z/2)": (lambda x, z: np.exp(0.5 * z), lambda x, z: 0.5 * np.exp(0.5 * z)),
}

WHITELIST = tuple(_FACTORS)


class Inhomogeneity:
    """``B(x, z) = coefficient * prod(factors)`` over the whitelist."""

    def __init__(self, coefficient=1.0, factors=("exp(z)",)):
        unknown = [f for f in factors if f not in _FACTORS]
        if unknown:
            raise ConfigError(f"B factors {unknown} are not in the whitelist {list(WHITELIST)}")
        self.coefficient = float(coefficient)
        self.factors = tuple(factors)

    @classmethod
    def from_callables(cls, value, dz, label="custom"):
        """Programmatic ``B`` (not reachable from run configs)."""
        obj = cls(1.0, ())
        obj._custom = (value, dz)
        obj.factors = (label,)
        return obj

    _custom = None

    def __call__(self, x, z):
        if self._custom is not None:
            return self._custom[0](x, z)
        out = np.full(np.shape(z), self.coefficient, dtype=float)
        for f in self.factors:
            out = out * _FACTORS[f][0](x, z)
        return out

    def dz(self, x, z):
        if self._custom is not None:
            return self._custom[1](x, z)
        # product rule over the factors
        vals = [_FACTORS[f][0](x, z) for f in self.factors]
        ders = [_FACTORS[f][1](x, z) for f in self.factors]
        total = np.zeros(np.shape(z))
        for i in range(len(vals)):
            term = np.full(np.shape(z), self.coefficient)
            for j in range(len(vals)):
                term = term * (ders[j] if i == j else vals[j])
            total = total + term
        return total

    def to_json(self):
        return {"coefficient": self.coefficient, "factors": list(self.factors)}

    def check(self, points, strict=True):
        """Numerical checks of positivity, monotonicity and the growth limits.

        Returns a dict of booleans; raises nothing.
        """
        z = np.linspace(-5, 5, 41)
        X = np.repeat(points[:, None, :], len(z), axis=1)
        Z = np.broadcast_to(z, X.shape[:-1])
        b = self(X, Z)
        bz = self.dz(X, Z)
        ladder = 10.0 ** np.arange(0, 3)
        up = np.stack([self(points, np.full(len(points), s)) for s in ladder], axis=1)
        down = np.stack([self(points, np.full(len(points), -s)) for s in ladder], axis=1)
        with np.errstate(over="ignore"):
            grows = bool(np.all(np.diff(up, axis=1) > 0) and np.all(up[:, -1] > 1e6))
        return {
            "positive": bool(np.all(b > 0)),
            "monotone": bool(np.all(bz > 0) if strict else np.all(bz >= 0)),
            "grows_at_plus_infinity": grows,
            "vanishes_at_minus_infinity": bool(np.all(np.diff(down, axis=1) < 0) and np.all(down[:, -1] < 1e-6)),
        }


@dataclass
class ProblemSpec:
    cost: CostModel
    source: DomainSpec
    target: DomainSpec
    B: Inhomogeneity
    params: QuotientParams = field(default_factory=lambda: QuotientParams(2, 1))
    nr: int = 33
    nt: int = 64
    tol_newton: float = 1e-9
    max_newton: int = 30
    admissibility_floor: float = 1e-8
    seed_kind: str = "quadratic"
    shrink: float = 0.5
    dt_initial: float = 0.25
    dt_min: float = 1e-3
    dt_max: float = 0.25
    exact: object = None

    def validate(self):
        if self.params.n != 2:
            raise ConfigError("the PDE solver supports n = 2 only")
        if self.params.l not in (0, 1):
            raise ConfigError("l must be 0 or 1 for n = 2")
        if self.seed_kind not in ("quadratic", "c-transform"):
            raise ConfigError(f"unknown seed kind {self.seed_kind!r}")
        if self.seed_kind == "quadratic" and self.cost.name != "quadratic":
            raise ConfigError("the quadratic seed requires the quadratic cost")
        if not 0 < self.shrink <= 1:
            raise ConfigError("shrink must be in (0, 1]")
        pts = self.source.interior_grid(4, 8)
        checks = self.B.check(pts, strict=True)
        failed = [k for k, ok in checks.items() if not ok]
        if failed:
            raise ConfigError(f"inhomogeneity fails {failed}")
        return checks
