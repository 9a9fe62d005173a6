"""Phase synchronisation.

The phase is fixed by ``Phi(0) = 0``, so it passes ``pi`` at ``r_pi``, the first
non-trivial root of the regular solution.  ``r_pi`` is located on an
arbitrarily normalised regular solution obtained by forward collocation, and
the phase follows as

    Phi(r) = pi + W * integral_{r_pi}^{r} dx / Y(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplitude import AmplitudeSolution
from .collocation import (
    DEFAULT_EXTRA_ORDER,
    CollocationProblem,
    Mesh,
    PiecewiseSolution,
    legendre_nodes,
    propagate_linear,
)
from .errors import ConfigurationError, DomainError, PhaseAmpError
from .potentials import RadialContext

__all__ = [
    "InnerSolution",
    "PhaseSolution",
    "build_inner_mesh",
    "solve_inner_regular",
    "find_r_pi",
    "build_phase",
    "phase_eval",
]

# Far-field pieces for the phase integral grow by this ratio in r.
_FAR_RATIO = 1.5
_FAR_LIMIT = 1e15


@dataclass(frozen=True)
class InnerSolution:
    """Regular solution ``psi ~ r^(l+1)/(l+1)!`` near 0, arbitrary scale."""

    ctx: RadialContext
    psi: PiecewiseSolution
    r_end: float

    def __call__(self, r, deriv: int = 0):
        return self.psi(r, deriv)


def build_inner_mesh(ctx: RadialContext, r_end: float, density: float = 1.0) -> Mesh:
    """Uniform-ish ``r`` mesh; finer where a screened potential still varies."""
    pot = ctx.potential
    h = math.pi / (8.0 * ctx.k)
    h = min(h, 0.4 / max(pot.Z, 1e-300)) if pot.kind != "free" else h
    h /= density
    if pot.is_screened:
        h_near = 0.5 / (pot.alpha * density)
        if h_near < h:
            r_knee = min(40.0 / pot.alpha, r_end)
            n_near = max(1, math.ceil(r_knee / h_near))
            near = np.linspace(0.0, r_knee, n_near + 1)
            if r_knee >= r_end:
                return Mesh(near, "r")
            n_far = max(1, math.ceil((r_end - r_knee) / h))
            far = np.linspace(r_knee, r_end, n_far + 1)
            return Mesh(np.concatenate([near, far[1:]]), "r")
    n = max(1, math.ceil(r_end / h))
    return Mesh(np.linspace(0.0, r_end, n + 1), "r")


def _inner_solve(ctx: RadialContext, r_end: float, order: int, density: float) -> InnerSolution:
    l = ctx.l
    k2 = ctx.k ** 2
    cent = ctx.centrifugal
    pot = ctx.potential

    def first_rows(r):
        # r^2 psi'' + (k^2 r^2 - l(l+1) - 2 r (r V)) psi = 0, regular at r = 0
        return np.vstack([k2 * r * r - cent - 2.0 * r * pot.r_value(r),
                          np.zeros_like(r), r * r])

    def rows(r):
        return np.vstack([ctx.q(r), np.zeros_like(r), np.ones_like(r)])

    def factory(i, a, b, known):
        op = first_rows if i == 0 else rows
        return CollocationProblem(op, known, known.size + order)

    known = np.zeros(l + 2)
    known[l + 1] = 1.0
    mesh = build_inner_mesh(ctx, r_end, density)
    psi = propagate_linear(mesh, factory, known, l + 2, 2)
    return InnerSolution(ctx, psi, float(mesh.breakpoints[-1]))


def _first_sign_change(inner: InnerSolution, samples: int = 64):
    for el in inner.psi.elements:
        x = np.linspace(0.0, el.width, samples + 1)
        if el.center == 0.0:
            x = x[1:]
        v = el(x)
        flips = np.nonzero(np.signbit(v[:-1]) != np.signbit(v[1:]))[0]
        if flips.size:
            j = flips[0]
            return el, x[j], x[j + 1]
    return None


def solve_inner_regular(
    ctx: RadialContext,
    r_end: float | None = None,
    order: int = DEFAULT_EXTRA_ORDER,
    density: float = 1.0,
) -> InnerSolution:
    """Forward collocation of the radial equation for the regular solution.

    The first element fixes ``C_0 = ... = C_l = 0`` and ``C_{l+1} = 1``; later
    elements carry value and slope across breakpoints.  ``r_end`` defaults to
    ``1.5 pi/k + l/k`` and is doubled (twice at most) until the solution has
    changed sign.
    """
    if r_end is None:
        r_end = 1.5 * math.pi / ctx.k + ctx.l / ctx.k
    for _ in range(3):
        inner = _inner_solve(ctx, r_end, order, density)
        if _first_sign_change(inner) is not None:
            return inner
        r_end *= 2.0
    raise PhaseAmpError(
        f"regular solution shows no node below r={inner.r_end:g}; potential too deep?")


def find_r_pi(inner: InnerSolution, samples: int = 64) -> float:
    """First root of the regular solution beyond the origin.

    Sign changes are bracketed on ``samples`` points per element, then refined
    by Newton steps on the element's series, falling back to bisection
    whenever a step leaves the bracket.
    """
    found = _first_sign_change(inner, samples)
    if found is None:
        raise PhaseAmpError("regular solution has no sign change on its mesh")
    el, lo, hi = found
    f_lo = el(lo)
    scale = max(np.max(np.abs(el(np.linspace(0, el.width, 33)))), 1e-300)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f = el(x)
        if abs(f) <= 1e-14 * scale and hi - lo <= 1e-12 * (el.center + x):
            break
        if np.signbit(f) == np.signbit(f_lo):
            lo, f_lo = x, f
        else:
            hi = x
        df = el(x, 1)
        step = f / df if df != 0 else np.inf
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
            step = x - x_new
        x = x_new
        if abs(step) <= 1e-14 * (el.center + x) and abs(el(x)) <= 1e-14 * scale:
            break
    return float(el.center + x)


@dataclass(frozen=True)
class PhaseSolution:
    """Synchronised phase built from an amplitude solution and ``r_pi``.

    ``breaks`` are ascending radii from ``r_min`` outward and ``cumulative``
    holds ``integral_{r_pi}^{breaks[j]} dx / Y``.

    Close to the origin ``Phi`` is tiny for ``l > 0`` and ``pi + W * (...)``
    keeps only its absolute accuracy.  When ``phi_min = Phi(r_min)`` is given,
    radii below ``r_switch`` are integrated forward from ``r_min`` instead
    (``cumulative_low`` holds ``integral_{r_min}^{breaks[j]} dx / Y``).
    """

    r_pi: float
    amp: AmplitudeSolution
    breaks: np.ndarray
    cumulative: np.ndarray
    quad_order: int
    phi_min: float | None = None
    cumulative_low: np.ndarray | None = None
    r_switch: float = 0.0

    @property
    def W(self) -> float:
        return self.amp.W

    def _integral(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < self.amp.r_min * (1 - 1e-14)):
            raise DomainError(f"phase requested below r_min={self.amp.r_min}")
        if np.any(r > self.breaks[-1]):
            raise DomainError(f"phase requested beyond r={self.breaks[-1]:g}")
        j = np.clip(np.searchsorted(self.breaks, r, side="right") - 1, 0, self.breaks.size - 2)
        base = self.breaks[j]
        nodes, weights = legendre_nodes(self.quad_order)
        half = 0.5 * (r - base)
        pts = base[:, None] + half[:, None] * (nodes[None, :] + 1.0)
        vals = 1.0 / self.amp.value(pts.ravel()).reshape(pts.shape)
        return j, half * (vals @ weights)

    def __call__(self, r):
        return phase_eval(self, r)

    def derivative(self, r):
        """``dPhi/dr = W / Y``."""
        return self.W / self.amp.value(r)


def _gl_integral(amp: AmplitudeSolution, a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    nodes, weights = legendre_nodes(q)
    half = 0.5 * (b - a)
    pts = a[:, None] + half[:, None] * (nodes[None, :] + 1.0)
    vals = 1.0 / amp.value(pts.ravel()).reshape(pts.shape)
    return half * (vals @ weights)


def build_phase(
    amp: AmplitudeSolution,
    r_pi: float,
    quad_order: int | None = None,
    phi_min: float | None = None,
) -> PhaseSolution:
    """Precompute element integrals of ``1/Y`` and anchor them at ``r_pi``.

    ``phi_min``, the phase at ``r_min`` known to relative accuracy, adds a
    second anchor used on the breakpoints where the phase is still below 1.
    """
    if not amp.r_min < r_pi:
        raise ConfigurationError(
            f"r_min={amp.r_min:g} must lie below the first node r_pi={r_pi:.12g}")
    if quad_order is None:
        quad_order = max(el.order for el in amp.Y.elements)
    rho = amp.Y.mesh.breakpoints[1:]
    finite = np.sort(1.0 / rho)
    finite[0] = amp.r_min
    n_far = math.ceil(math.log(_FAR_LIMIT / finite[-1]) / math.log(_FAR_RATIO))
    far = finite[-1] * _FAR_RATIO ** np.arange(1, n_far + 1)
    breaks = np.concatenate([finite, far])
    # r_pi becomes a breakpoint so the anchor is exact
    breaks = np.unique(np.append(breaks, r_pi))
    pieces = _gl_integral(amp, breaks[:-1], breaks[1:], quad_order)
    i_pi = int(np.searchsorted(breaks, r_pi))
    cumulative = np.zeros(breaks.size)
    cumulative[i_pi + 1:] = np.cumsum(pieces[i_pi:])
    cumulative[:i_pi] = -np.cumsum(pieces[:i_pi][::-1])[::-1]
    if phi_min is None:
        return PhaseSolution(float(r_pi), amp, breaks, cumulative, int(quad_order))
    low = np.concatenate([[0.0], np.cumsum(pieces)])
    below = np.nonzero(phi_min + amp.W * low[:i_pi + 1] < 1.0)[0]
    r_switch = float(breaks[below[-1]]) if below.size else 0.0
    return PhaseSolution(float(r_pi), amp, breaks, cumulative, int(quad_order),
                         float(phi_min), low, r_switch)


def phase_eval(p: PhaseSolution, r):
    """``Phi(r) = pi + W * integral_{r_pi}^r dx / Y``."""
    j, local = p._integral(r)
    out = math.pi + p.W * (p.cumulative[j] + local)
    if p.phi_min is not None:
        low = np.atleast_1d(np.asarray(r, dtype=float)) < p.r_switch
        out[low] = p.phi_min + p.W * (p.cumulative_low[j[low]] + local[low])
    return float(out[0]) if np.ndim(r) == 0 else out
