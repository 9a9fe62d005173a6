"""Central potentials and the radial wavenumber function ``Q_l(r)``.

The screened family all reduce to the Coulomb potential ``-Z/r`` at
``alpha = 0``::

    scp      -Z exp(-a r) / r
    hulthen  -Z a exp(-a r) / (1 - exp(-a r))
    ecscp    -Z exp(-a r) cos(a r) / r

Besides ``V`` and ``dV/dr`` each potential exposes the products ``r V`` and
``r^2 dV/dr``, which stay finite at both ends of the half line and are what
the solvers in the inverted coordinate ``rho = 1/r`` and near the origin need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "KINDS",
    "PotentialKind",
    "RadialContext",
    "potential_value",
    "potential_derivative",
    "q_value",
    "q_derivative",
]

KINDS = ("free", "coulomb", "scp", "hulthen", "ecscp")
SCREENED = ("scp", "hulthen", "ecscp")


def _positive_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("potential evaluated at r <= 0")
    return r


def _out(value, like):
    return float(value) if np.ndim(like) == 0 else value


@dataclass(frozen=True)
class PotentialKind:
    """A member of the potential family with its parameters."""

    kind: str = "coulomb"
    Z: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in KINDS:
            raise ValueError(f"unknown potential {self.kind!r}; expected one of {KINDS}")
        if self.alpha < 0:
            raise ValueError(f"screening parameter must be >= 0, got {self.alpha}")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def from_tag(cls, tag: str, Z: float = 1.0, alpha: float = 0.0) -> "PotentialKind":
        return cls(tag.strip().lower(), Z, alpha)

    @property
    def is_screened(self) -> bool:
        return self.kind in SCREENED and self.alpha > 0

    @property
    def is_long_range(self) -> bool:
        """True for a Coulomb tail (pure Coulomb or unscreened member)."""
        return self.kind == "coulomb" or (self.kind in SCREENED and self.alpha == 0)

    def r_value(self, r):
        """``r V(r)``; finite on ``[0, inf]`` for every kind."""
        r = np.asarray(r, dtype=float)
        Z, a = self.Z, self.alpha
        kind = self.kind
        if kind == "free":
            out = np.zeros_like(r)
        elif kind == "coulomb" or a == 0:
            out = np.full_like(r, -Z)
        elif kind == "scp":
            out = -Z * np.exp(-a * r)
        elif kind == "hulthen":
            x = a * r
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                out = np.where(x > 0, -Z * x / np.expm1(x), -Z)
                out = np.where(np.isfinite(out), out, 0.0)
        else:
            with np.errstate(invalid="ignore"):
                e = np.exp(-a * r)
                out = np.where(e > 0, -Z * e * np.cos(a * r), 0.0)
        return _out(out, r)

    def r2_derivative(self, r):
        """``r^2 dV/dr``; finite on ``[0, inf]`` for every kind."""
        r = np.asarray(r, dtype=float)
        Z, a = self.Z, self.alpha
        kind = self.kind
        if kind == "free":
            out = np.zeros_like(r)
        elif kind == "coulomb" or a == 0:
            out = np.full_like(r, Z)
        elif kind == "scp":
            with np.errstate(invalid="ignore"):
                e = np.exp(-a * r)
                out = np.where(e > 0, Z * e * (1.0 + a * r), 0.0)
        elif kind == "hulthen":
            x = a * r
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                # x^2 e^x / (e^x - 1)^2 = x^2 / (expm1(x) * -expm1(-x))
                out = np.where(x > 0, Z * x * x / (np.expm1(x) * -np.expm1(-x)), Z)
                out = np.where(np.isfinite(out), out, 0.0)
        else:
            x = a * r
            with np.errstate(invalid="ignore"):
                e = np.exp(-x)
                out = np.where(e > 0, Z * e * (np.cos(x) * (1.0 + x) + x * np.sin(x)), 0.0)
        return _out(out, r)

    def value(self, r):
        r = _positive_r(r)
        return _out(self.r_value(r) / r, r)

    def derivative(self, r):
        r = _positive_r(r)
        return _out(self.r2_derivative(r) / (r * r), r)


def potential_value(p: PotentialKind, r):
    """``V(r)`` for ``r > 0``."""
    return p.value(r)


def potential_derivative(p: PotentialKind, r):
    """Analytic ``dV/dr`` for ``r > 0``."""
    return p.derivative(r)


@dataclass(frozen=True)
class RadialContext:
    """Angular momentum ``l``, momentum ``k = sqrt(2E)`` and potential."""

    l: int = 0
    k: float = 1.0
    potential: PotentialKind = PotentialKind()

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise ValueError(f"l must be a non-negative integer, got {self.l}")
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        object.__setattr__(self, "l", int(self.l))

    @property
    def centrifugal(self) -> float:
        return float(self.l * (self.l + 1))

    def q(self, r):
        return q_value(self, r)

    def dq(self, r):
        return q_derivative(self, r)

    def q_rho(self, rho):
        """``Q`` as a function of ``rho = 1/r``, including ``rho = 0``."""
        rho = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            r = np.where(rho > 0, 1.0 / np.where(rho > 0, rho, 1.0), np.inf)
        out = self.k ** 2 - self.centrifugal * rho ** 2 - 2.0 * rho * self.potential.r_value(r)
        return _out(out, rho)

    def dq_drho(self, rho):
        """``dQ/drho``; equals ``-r^2 dQ/dr``."""
        rho = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            r = np.where(rho > 0, 1.0 / np.where(rho > 0, rho, 1.0), np.inf)
        out = -2.0 * self.centrifugal * rho + 2.0 * self.potential.r2_derivative(r)
        return _out(out, rho)


def q_value(ctx: RadialContext, r):
    """``Q_l(r) = k^2 - l(l+1)/r^2 - 2 V(r)``."""
    r = _positive_r(r)
    return _out(ctx.k ** 2 - ctx.centrifugal / r ** 2 - 2.0 * ctx.potential.r_value(r) / r, r)


def q_derivative(ctx: RadialContext, r):
    """``dQ_l/dr = 2 l(l+1)/r^3 - 2 dV/dr``."""
    r = _positive_r(r)
    return _out(2.0 * ctx.centrifugal / r ** 3 - 2.0 * ctx.potential.r2_derivative(r) / r ** 2, r)
