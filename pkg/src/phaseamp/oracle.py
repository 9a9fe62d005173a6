"""Independent reference solutions of the radial equation.

The regular solution is started from its Frobenius series near the origin and
integrated outward in ``r`` with an adaptive 8th-order Runge-Kutta method.
The irregular one is started far out from asymptotic values and integrated
inward.  Both are energy normalised by matching onto a far-field pair
``(F, G)`` with ``F ~ sin(theta)`` and ``G ~ cos(theta)``:

* short-range potentials: Riccati-Bessel functions ``kr j_l(kr)`` and
  ``-kr y_l(kr)`` beyond the radius where ``|V| < 1e-16 k^2``;
* Coulomb tails: the asymptotic expansion of the Coulomb functions, whose
  phase carries the ``eta log(2 kr)`` term.

Nothing here goes through the collocation machinery; only the potentials
are shared with the main pipeline.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import bernoulli, loggamma, spherical_jn, spherical_yn

from .errors import ConvergenceError, DomainError
from .potentials import PotentialKind, RadialContext

__all__ = [
    "ReferenceTable",
    "oracle_regular",
    "oracle_irregular",
    "oracle_pair",
    "oracle_origin_value",
    "regular_solution",
    "coulomb_asymptotic",
    "scaled_error",
    "write_table",
    "read_table",
]

WRONSKIAN = 2.0 / math.pi
RTOL = 3e-14
_N_SERIES = 60


def scaled_error(computed, reference, amplitude):
    """``|computed - reference| / amplitude``; stays finite at zeros of the reference."""
    amplitude = np.asarray(amplitude, dtype=float)
    if np.any(~(amplitude > 0)):
        raise DomainError("amplitude must be positive")
    out = np.abs(np.asarray(computed, dtype=float) - np.asarray(reference, dtype=float)) / amplitude
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- near origin

def _rv_taylor(pot: PotentialKind, n: int) -> np.ndarray:
    """Taylor coefficients of ``r V(r)`` about ``r = 0``."""
    j = np.arange(n)
    inv_fact = np.array([1.0 / math.factorial(i) for i in j])
    Z, a = pot.Z, pot.alpha
    if pot.kind == "free":
        return np.zeros(n)
    if not pot.is_screened:
        out = np.zeros(n)
        out[0] = -Z
        return out
    if pot.kind == "scp":
        return -Z * (-a) ** j * inv_fact
    if pot.kind == "ecscp":
        return -Z * np.real((-(1 - 1j) * a) ** j) * inv_fact
    # x / (e^x - 1) = sum B_j x^j / j!
    return -Z * bernoulli(n - 1)[:n] * a ** j * inv_fact


def _frobenius(ctx: RadialContext, n: int = _N_SERIES) -> np.ndarray:
    """``psi = sum_m c_m r^(m+l+1)`` with ``c_0 = 1``."""
    v = _rv_taylor(ctx.potential, n)
    k2, l = ctx.k ** 2, ctx.l
    c = np.zeros(n)
    c[0] = 1.0
    for m in range(1, n):
        s = 2.0 * np.dot(v[:m], c[m - 1::-1])
        if m >= 2:
            s -= k2 * c[m - 2]
        c[m] = s / (m * (m + 2 * l + 1))
    return c


def _series_eval(c, l, r):
    r = np.asarray(r, dtype=float)
    p = np.arange(c.size) + l + 1
    rp = r[..., None] ** p
    return rp @ c, (rp / r[..., None]) @ (c * p)


def _start_radius(ctx: RadialContext) -> float:
    pot = ctx.potential
    scale = max(ctx.k, pot.Z if pot.kind != "free" else 0.0, pot.alpha, 1.0)
    return 0.05 / scale


# ---------------------------------------------------------------- far field

def _far_radius(ctx: RadialContext, r_top: float) -> float:
    pot = ctx.potential
    k2 = ctx.k ** 2
    if pot.kind == "free":
        return max(r_top, 1.0 / ctx.k)
    if not pot.is_screened:
        # the asymptotic Coulomb series needs kr well above eta^2 and l^2
        eta = pot.Z / ctx.k
        return max(r_top, (200.0 + 20.0 * (eta * eta + ctx.l ** 2)) / ctx.k)
    def envelope(r):
        # bounds |V| for all three screened kinds; cos(alpha r) zeros are ignored
        a = pot.alpha
        return pot.Z * math.exp(-a * r) * (1.0 / r + a / -math.expm1(-a * r))

    r = max(1.0 / pot.alpha, 1.0)
    for _ in range(400):
        if 2.0 * envelope(r) < 1e-16 * k2:
            return max(r_top, r)
        r *= 1.1
    raise ConvergenceError("no radius found where the screened potential is negligible",
                           residual=2.0 * envelope(r) / k2)


def coulomb_asymptotic(l: int, eta: float, rho: float, terms: int = 200):
    """``F, F', G, G'`` (derivatives in ``rho``) from the asymptotic series.

    ``theta = rho - eta log(2 rho) - l pi/2 + sigma_l``.  Terms are summed
    while they keep shrinking.
    """
    sigma = float(np.imag(loggamma(l + 1 + 1j * eta)))
    theta = rho - eta * math.log(2.0 * rho) - 0.5 * l * math.pi + sigma
    f, g, fs, gs = 1.0, 0.0, 0.0, 1.0 - eta / rho
    F, G, Fs, Gs = f, g, fs, gs
    last = math.inf
    for n in range(terms):
        a = (2 * n + 1) * eta / ((2 * n + 2) * rho)
        b = (l * (l + 1) - n * (n + 1) + eta * eta) / ((2 * n + 2) * rho)
        f, g, fs, gs = (a * f - b * g, a * g + b * f,
                        a * fs - b * gs - (a * f - b * g) / rho,
                        a * gs + b * fs - (a * g + b * f) / rho)
        size = abs(f) + abs(g) + abs(fs) + abs(gs)
        if size > last:
            break
        F, G, Fs, Gs = F + f, G + g, Fs + fs, Gs + gs
        last = size
        if size < 1e-18:
            break
    c, s = math.cos(theta), math.sin(theta)
    return G * c + F * s, Gs * c + Fs * s, F * c - G * s, Fs * c - Gs * s


def _far_pair(ctx: RadialContext, r: float):
    """``(F, F', G, G')`` in ``r`` with ``F ~ sin``, ``G ~ cos`` and ``F'G - FG' = k``."""
    k, l = ctx.k, ctx.l
    pot = ctx.potential
    x = k * r
    if pot.kind != "free" and not pot.is_screened:
        F, dF, G, dG = coulomb_asymptotic(l, -pot.Z / k, x)
        return F, k * dF, G, k * dG
    j, dj = spherical_jn(l, x), spherical_jn(l, x, derivative=True)
    y, dy = spherical_yn(l, x), spherical_yn(l, x, derivative=True)
    return x * j, k * (j + x * dj), -x * y, -k * (y + x * dy)


# ---------------------------------------------------------------- integration

def _rhs(ctx: RadialContext):
    k2 = ctx.k ** 2
    cent = ctx.centrifugal
    pot = ctx.potential

    def f(r, y):
        q = k2 - cent / (r * r) - 2.0 * pot.r_value(r) / r
        return [y[1], -q * y[0]]
    return f


def _integrate(ctx, r_from, y0, r_to, rtol):
    sol = solve_ivp(_rhs(ctx), (r_from, r_to), y0, method="DOP853",
                    rtol=rtol, atol=1e-300, dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"reference integration failed: {sol.message}",
                               residual=float(sol.t[-1]))
    return sol


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise DomainError("grid must be a non-empty 1-d sequence")
    if np.any(~(g > 0)) or not np.all(np.isfinite(g)):
        raise DomainError("grid must lie in (0, inf)")
    return g


@dataclass(frozen=True)
class _Regular:
    ctx: RadialContext
    scale: float
    coeffs: np.ndarray
    r0: float
    sol: object
    p: float
    q: float

    @property
    def origin_slope(self) -> float:
        """``lim S(r) / r^(l+1)`` as ``r -> 0``."""
        return self.scale * float(self.coeffs[0])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        v = np.empty_like(r)
        d = np.empty_like(r)
        near = r <= self.r0
        if np.any(near):
            v[near], d[near] = _series_eval(self.coeffs, self.ctx.l, r[near])
        if np.any(~near):
            y = self.sol.sol(r[~near])
            v[~near], d[~near] = y[0], y[1]
        return self.scale * v, self.scale * d


def _solve_regular(ctx: RadialContext, r_top: float, rtol: float) -> _Regular:
    c = _frobenius(ctx)
    r0 = _start_radius(ctx)
    tail = abs(c[-1]) * r0 ** (c.size - 1)
    if tail > 1e-17 * abs(c[0]):
        raise ConvergenceError("Frobenius series not converged at its start radius", residual=tail)
    R = _far_radius(ctx, r_top)
    u0, du0 = _series_eval(c, ctx.l, np.array(r0))
    sol = _integrate(ctx, r0, [float(u0), float(du0)], R, rtol)
    u, du = sol.y[0, -1], sol.y[1, -1]
    F, dF, G, dG = _far_pair(ctx, R)
    # u = p F + q G
    det = F * dG - dF * G
    p = (u * dG - du * G) / det
    q = (du * F - u * dF) / det
    n = math.hypot(p, q)
    scale = math.sqrt(2.0 / (math.pi * ctx.k)) / n
    return _Regular(ctx, scale, c, r0, sol, p / n, q / n)


def regular_solution(ctx: RadialContext, r_top: float = 1.0, *, rtol: float = RTOL):
    """The normalised regular solution as a callable ``r -> (S, S')``.

    Valid on ``(0, max(r_top, R))`` where ``R`` is the matching radius.
    """
    return _solve_regular(ctx, float(r_top), rtol)


def oracle_regular(ctx: RadialContext, grid, *, rtol: float = RTOL, derivative: bool = False):
    """Energy-normalised regular solution ``S`` on ``grid``.

    Returns ``S`` (and ``S'`` when ``derivative`` is true).
    """
    g = _check_grid(grid)
    reg = _solve_regular(ctx, float(g.max()), rtol)
    v, d = reg(g)
    return (v, d) if derivative else v


def oracle_origin_value(ctx: RadialContext, *, rtol: float = RTOL) -> float:
    """``lim_{r->0} S(r) / r^(l+1)``; ``Psi(0)`` of the s-wave for ``l = 0``."""
    return _solve_regular(ctx, 1.0, rtol).origin_slope


def oracle_pair(ctx: RadialContext, grid, *, rtol: float = RTOL, certify: float = 1e-10):
    """``(S, S', C, C')`` on ``grid`` with a Wronskian certificate.

    ``C`` starts at the matching radius as ``q F - p G`` (normalised) where
    ``S = p F + q G`` there, so both share the far-field phase, and is then
    integrated inward.

    Raises
    ------
    ConvergenceError
        If ``C S' - S C'`` deviates from ``2/pi`` by more than ``certify``.
    """
    g = _check_grid(grid)
    reg = _solve_regular(ctx, float(g.max()), rtol)
    R = float(reg.sol.t[-1])
    F, dF, G, dG = _far_pair(ctx, R)
    amp = math.sqrt(2.0 / (math.pi * ctx.k))
    c0 = amp * (reg.p * G - reg.q * F)
    dc0 = amp * (reg.p * dG - reg.q * dF)
    sol = _integrate(ctx, R, [c0, dc0], float(g.min()), rtol)
    c, dc = sol.sol(g)
    s, ds = reg(g)
    w = c * ds - s * dc
    worst = float(np.max(np.abs(w - WRONSKIAN)))
    if worst > certify:
        raise ConvergenceError(
            f"oracle Wronskian off by {worst:.3g}; asymptotic start too close", residual=worst)
    return s, ds, c, dc


def oracle_irregular(ctx: RadialContext, grid, *, rtol: float = RTOL, derivative: bool = False,
                     certify: float = 1e-10):
    """Energy-normalised irregular solution ``C`` on ``grid`` (see :func:`oracle_pair`)."""
    _, _, c, dc = oracle_pair(ctx, grid, rtol=rtol, certify=certify)
    return (c, dc) if derivative else c


# ---------------------------------------------------------------- fixtures

@dataclass
class ReferenceTable:
    """Reference values of ``S`` and ``C`` on a grid, with provenance."""

    potential: str
    Z: float
    alpha: float
    l: int
    k: float
    grid: np.ndarray
    regular: np.ndarray
    irregular: np.ndarray
    accuracy: float = 1e-13
    provenance: str = ""
    date: str = field(default_factory=lambda: _dt.date.today().isoformat())

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.regular = np.asarray(self.regular, dtype=float)
        self.irregular = np.asarray(self.irregular, dtype=float)
        if not (self.grid.shape == self.regular.shape == self.irregular.shape):
            raise ValueError("grid and value columns differ in length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not (np.all(np.isfinite(self.regular)) and np.all(np.isfinite(self.irregular))):
            raise ValueError("reference values must be finite")
        if not self.accuracy <= 1e-11:
            raise ValueError(f"declared accuracy {self.accuracy:g} is above 1e-11")

    @property
    def ctx(self) -> RadialContext:
        return RadialContext(self.l, self.k, PotentialKind(self.potential, self.Z, self.alpha))


_HEADER_KEYS = ("potential", "Z", "alpha", "l", "k", "accuracy", "provenance", "date")


def write_table(path, table: ReferenceTable) -> None:
    lines = [f"# {key}={getattr(table, key)!r}" for key in _HEADER_KEYS]
    lines.append("# columns: r regular irregular")
    for row in zip(table.grid, table.regular, table.irregular):
        lines.append(" ".join(f"{x:.16e}" for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path) -> ReferenceTable:
    meta = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep and key in _HEADER_KEYS:
                meta[key] = _parse_literal(value)
        elif line.strip():
            rows.append([float(x) for x in line.split()])
    data = np.array(rows, dtype=float).reshape(-1, 3)
    return ReferenceTable(meta["potential"], float(meta["Z"]), float(meta["alpha"]),
                          int(meta["l"]), float(meta["k"]), data[:, 0], data[:, 1], data[:, 2],
                          float(meta.get("accuracy", 1e-13)), meta.get("provenance", ""),
                          meta.get("date", ""))


def _parse_literal(text: str):
    import ast
    return ast.literal_eval(text)
