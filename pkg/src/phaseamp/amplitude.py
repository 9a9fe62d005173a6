"""Squared amplitude ``Y = A^2`` on the inverted coordinate ``rho = 1/r``.

With ``u(rho) = Y(1/rho)`` the two amplitude equations become

* nonlinear, second order::

      rho^4 u'' + 2 rho^3 u' + 2 Q u = (rho^4 u'^2 + 4 W^2) / (2 u)

* linear, third order::

      rho^4 u''' + 6 rho^3 u'' + (6 rho^2 + 4 Q) u' + 2 (dQ/drho) u = 0

Both are integrated from ``rho = 0`` (``r = inf``), where ``u(0) = 2/(k pi)``
fixes the energy normalisation, towards ``rho = 1/r_min``.  Only ``u(0)`` is
imposed on the first element; its higher derivatives come out of the
collocation.  Later elements inherit ``nu = 2`` (nonlinear) or ``nu = 3``
(linear) derivatives from their predecessor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .collocation import (
    DEFAULT_EXTRA_ORDER,
    CollocationProblem,
    Mesh,
    PiecewiseSolution,
    propagate,
    solve_element_fixed_point,
    solve_element_linear,
)
from .errors import ConfigurationError, DomainError
from .potentials import RadialContext
from .taylor_basis import TaylorSeries

__all__ = [
    "WRONSKIAN",
    "METHODS",
    "AmplitudeSolution",
    "transform_derivatives",
    "build_rho_mesh",
    "solve_amplitude",
    "amplitude_eval",
]

#: Wronskian of the energy-normalised pair, ``C S' - S C'``.
WRONSKIAN = 2.0 / math.pi

METHODS = ("linear17", "nonlinear16")
_NU = {"linear17": 3, "nonlinear16": 2}

# exp(-TAIL_DECAY) is below double-precision resolution of the free solution
TAIL_DECAY = 40.0


def transform_derivatives(u1, u2, u3, rho):
    """Convert ``rho``-derivatives of ``u(rho) = Y(1/rho)`` to ``r``-derivatives.

    Returns ``(dY/dr, d2Y/dr2, d3Y/dr3)``.
    """
    r2 = rho * rho
    d1 = -r2 * u1
    d2 = r2 * r2 * u2 + 2.0 * r2 * rho * u1
    d3 = -(r2 ** 3 * u3 + 6.0 * r2 * r2 * rho * u2 + 6.0 * r2 * r2 * u1)
    return d1, d2, d3


def build_rho_mesh(
    r_min: float,
    k: float = 1.0,
    alpha: float = 0.0,
    *,
    long_range: bool = True,
    ratio: float = 1.5,
    max_dr: float | None = None,
    rho_first: float | None = None,
    density: float = 1.0,
    max_elements: int = 10_000,
) -> Mesh:
    """Element breakpoints on ``[0, 1/r_min]`` in ``rho``.

    The first element ``[0, rho_1]`` must hold a function that a single
    polynomial captures.  For a Coulomb tail that limits ``rho_1`` to a few
    hundredths of ``k``; for a screened potential ``rho_1`` is pushed inward
    until the screening factor has decayed below double precision, where the
    solution is an exact polynomial in ``rho``.  Inward of ``rho_1`` the
    elements grow geometrically by ``ratio``, but never span more than
    ``max_dr`` (default ``2 pi/k``) in ``r``: the homogeneous solutions of the
    amplitude equations oscillate with period ``pi/k`` and an element must
    resolve them.  ``density`` divides both step measures.
    """
    if not r_min > 0:
        raise ConfigurationError(f"r_min must be positive, got {r_min}")
    if not ratio > 1:
        raise ConfigurationError("element growth ratio must exceed 1")
    if max_dr is None:
        max_dr = 2.0 * math.pi / k
    rho_end = 1.0 / r_min
    if rho_first is None:
        rho_first = 0.02 * k
        if alpha > 0:
            rho_first = alpha / TAIL_DECAY if not long_range else min(rho_first, alpha / TAIL_DECAY)
    rho_first = min(rho_first, rho_end / ratio)
    step = ratio ** (1.0 / density)
    dr = max_dr / density
    bp = [0.0, rho_first]
    r = 1.0 / rho_first
    while True:
        r = max(r / step, r - dr)
        if r <= r_min * step ** 0.5:
            break
        bp.append(1.0 / r)
        if len(bp) > max_elements:
            raise ConfigurationError(
                f"rho mesh exceeds {max_elements} elements; raise r_min or coarsen")
    bp.append(rho_end)
    return Mesh(np.array(bp), "rho")


@dataclass(frozen=True)
class AmplitudeSolution:
    """``Y(r) = A(r)^2`` for ``r >= r_min``, stored as ``u(rho)``."""

    ctx: RadialContext
    r_min: float
    Y: PiecewiseSolution
    method: str
    W: float = WRONSKIAN

    def _rho(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_min * (1 - 1e-14)):
            raise DomainError(f"amplitude requested below r_min={self.r_min}")
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(r), 0.0, 1.0 / r)

    def value(self, r):
        """``Y(r)``."""
        rho = self._rho(r)
        out = self.Y(rho)
        return float(out) if np.ndim(r) == 0 else out

    def derivative(self, r, order: int = 1):
        """``d^order Y / dr^order`` for ``order`` in 1..3."""
        rho = self._rho(r)
        u1, u2, u3 = (self.Y(rho, 1), self.Y(rho, 2), self.Y(rho, 3))
        out = transform_derivatives(u1, u2, u3, rho)[order - 1]
        return float(out) if np.ndim(r) == 0 else out

    def amplitude(self, r):
        """``A(r) = sqrt(Y(r))``."""
        return np.sqrt(self.value(r))

    def __call__(self, r, deriv: int = 0):
        return amplitude_eval(self, r, deriv)


def amplitude_eval(sol: AmplitudeSolution, r, deriv_order: int = 0):
    """``Y(r)`` (order 0) or ``dY/dr`` (order 1)."""
    if deriv_order == 0:
        return sol.value(r)
    if deriv_order == 1:
        return sol.derivative(r, 1)
    raise ValueError("deriv_order must be 0 or 1")


def _linear_operator(ctx: RadialContext):
    def rows(rho):
        q = ctx.q_rho(rho)
        r2 = rho * rho
        return np.vstack([2.0 * ctx.dq_drho(rho), 6.0 * r2 + 4.0 * q,
                          6.0 * r2 * rho, r2 * r2])
    return rows


def _nonlinear_builder(ctx: RadialContext, n_coeffs: int, known, W: float):
    """Linearisation of the nonlinear amplitude equation about an iterate.

    ``2 W^2 / u`` is replaced by its tangent at the previous iterate; the
    ``u'^2`` term is taken from the previous iterate as it stands.
    """
    def build(prev: TaylorSeries) -> CollocationProblem:
        def values(rho):
            up = prev.at_global(rho)
            if np.any(up <= 0):
                raise DomainError("amplitude iterate Y <= 0 on element; refine the mesh")
            return up, prev.at_global(rho, 1)

        def rows(rho):
            up, _ = values(rho)
            r2 = rho * rho
            return np.vstack([2.0 * ctx.q_rho(rho) + 2.0 * W * W / (up * up),
                              2.0 * r2 * rho, r2 * r2])

        def source(rho):
            up, up1 = values(rho)
            r2 = rho * rho
            return r2 * r2 * up1 * up1 / (2.0 * up) + 4.0 * W * W / up

        return CollocationProblem(rows, known, n_coeffs, source)
    return build


def solve_amplitude(
    ctx: RadialContext,
    r_min: float = 1e-3,
    method: str = "linear17",
    order: int = DEFAULT_EXTRA_ORDER,
    mesh: Mesh | None = None,
    *,
    tol: float = 1e-14,
    max_iter: int = 50,
    **mesh_options,
) -> AmplitudeSolution:
    """Integrate ``Y`` inward from ``r = inf`` to ``r_min``.

    Parameters
    ----------
    ctx : RadialContext
    r_min : float
        Smallest radius kept; the irregular solution is singular at 0.
    method : {"linear17", "nonlinear16"}
        Third-order linear equation or the second-order nonlinear one.
    order : int
        Collocation points per element, ``N - nu``.
    mesh : Mesh, optional
        Explicit ``rho`` mesh; otherwise :func:`build_rho_mesh` with
        ``mesh_options``.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown amplitude method {method!r}")
    if mesh is None:
        pot = ctx.potential
        mesh = build_rho_mesh(r_min, ctx.k, pot.alpha if pot.is_screened else 0.0,
                              long_range=pot.is_long_range, **mesh_options)
    elif mesh.coordinate_label != "rho":
        raise ConfigurationError("amplitude mesh must be in rho")
    W = WRONSKIAN
    y_inf = 2.0 / (ctx.k * math.pi)
    nu = _NU[method]

    if method == "linear17":
        rows = _linear_operator(ctx)

        def solve(i, a, b, known, seed):
            n = known.size + order
            return solve_element_linear(CollocationProblem(rows, known, n), a, b)
    else:
        def solve(i, a, b, known, seed):
            n = known.size + order
            start = np.zeros(n)
            if seed is None:
                start[0] = y_inf
            else:
                m = min(n, seed.order)
                start[:m] = seed.coeffs[:m]
                probe = TaylorSeries(a, b - a, start)(np.linspace(0.0, b - a, 17))
                if np.any(probe <= 0):
                    # the extrapolated predecessor is useless this far out
                    start[:] = 0.0
                    start[0] = known[0]
            build = _nonlinear_builder(ctx, n, known, W)
            return solve_element_fixed_point(build, a, b, TaylorSeries(a, b - a, start),
                                             tol=tol, max_iter=max_iter)

    y = propagate(mesh, solve, [y_inf], nu)
    return AmplitudeSolution(ctx, float(r_min), y, method, W)
