"""Spectral-element collocation on TB polynomials.

Each element carries a :class:`~phaseamp.taylor_basis.TaylorSeries` with ``N``
coefficients.  The first ``nu`` are fixed by boundary or continuity data; the
remaining ``N - nu`` are found by enforcing the differential equation at the
``N - nu`` Legendre nodes mapped onto the element.

Linear operators are described by their coefficient functions,

    (S f)(x) = sum_j a_j(x) f^(j)(x) = g(x),

so that the collocation matrix is ``S_mn = sum_j a_j(x_m) T_{n-j}(x_m)``.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, PhaseAmpError, SingularMatrixError
from .taylor_basis import TaylorSeries, tb_table

__all__ = [
    "DEFAULT_EXTRA_ORDER",
    "Mesh",
    "CollocationProblem",
    "PiecewiseSolution",
    "legendre_nodes",
    "map_to_element",
    "solve_element_linear",
    "solve_element_fixed_point",
    "propagate",
    "propagate_linear",
]

#: Collocation points per element, ``N - nu``.
DEFAULT_EXTRA_ORDER = 12

RESIDUAL_WARN = 1e-10


@functools.lru_cache(maxsize=64)
def _legendre_nodes_cached(q: int) -> tuple[np.ndarray, np.ndarray]:
    # Chebyshev points are within O(1/q^2) of the Legendre roots
    x = np.cos(np.pi * (np.arange(q, 0, -1) - 0.25) / (q + 0.5))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for n in range(2, q + 1):
            p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
        if q == 1:
            p0 = np.ones_like(x)
        dp = q * (x * p1 - p0) / (x * x - 1.0)
        step = p1 / dp
        x = x - step
        if np.max(np.abs(step)) <= 4 * np.finfo(float).eps:
            break
    else:
        raise ConvergenceError(f"Legendre root iteration for q={q} did not converge")
    # one more derivative evaluation at the converged roots for the weights
    p0 = np.ones_like(x)
    p1 = x.copy()
    for n in range(2, q + 1):
        p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
    if q == 1:
        p0 = np.ones_like(x)
    dp = q * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def legendre_nodes(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Roots of ``P_q`` on [-1, 1] in ascending order, with Gauss weights."""
    if q < 1:
        raise ValueError(f"need q >= 1, got {q}")
    return _legendre_nodes_cached(int(q))


def map_to_element(nodes, a: float, b: float) -> np.ndarray:
    """Affine map of reference nodes on [-1, 1] to local coordinates on [0, b - a]."""
    if not b > a:
        raise DomainError(f"element must have b > a, got a={a}, b={b}")
    return 0.5 * (b - a) * (np.asarray(nodes, dtype=float) + 1.0)


@dataclass(frozen=True)
class Mesh:
    """Strictly increasing element breakpoints in coordinate ``r`` or ``rho``."""

    breakpoints: np.ndarray
    coordinate_label: str = "r"

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("a mesh needs at least two breakpoints")
        if not np.all(np.isfinite(bp)):
            raise ValueError("mesh breakpoints must be finite")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("mesh breakpoints must be strictly increasing")
        if self.coordinate_label not in ("r", "rho"):
            raise ValueError(f"unknown coordinate label {self.coordinate_label!r}")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @property
    def n_elements(self) -> int:
        return self.breakpoints.size - 1

    def intervals(self):
        bp = self.breakpoints
        return zip(bp[:-1], bp[1:])

    def locate(self, x) -> np.ndarray:
        """Element index for each coordinate (clamped to the end elements)."""
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, self.n_elements - 1)


@dataclass(frozen=True)
class CollocationProblem:
    """One element's linear collocation problem.

    Attributes
    ----------
    operator : callable
        ``operator(x)`` maps global coordinates ``x`` (shape ``(m,)``) to the
        coefficient rows ``a_j(x)``, shape ``(order + 1, m)``.
    known : numpy.ndarray
        The ``nu`` leading coefficients fixed from the boundary.
    n_coeffs : int
        Total number of TB coefficients ``N``; defaults to ``nu + 12``.
    source : callable, optional
        Right-hand side ``g(x)``; zero when omitted.
    """

    operator: Callable[[np.ndarray], np.ndarray]
    known: np.ndarray
    n_coeffs: Optional[int] = None
    source: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        known = np.atleast_1d(np.asarray(self.known, dtype=float))
        if known.size < 1:
            raise ValueError("at least one boundary coefficient is required")
        n = self.n_coeffs if self.n_coeffs is not None else known.size + DEFAULT_EXTRA_ORDER
        if n <= known.size:
            raise ValueError(f"N={n} must exceed nu={known.size}")
        object.__setattr__(self, "known", known)
        object.__setattr__(self, "n_coeffs", int(n))

    @property
    def nu(self) -> int:
        return self.known.size

    def matrix(self, a: float, x_local: np.ndarray) -> np.ndarray:
        """Operator applied to every TB function at the local points."""
        n = self.n_coeffs
        coef = np.atleast_2d(self.operator(a + x_local))
        t = tb_table(n - 1, x_local)
        s = np.zeros((x_local.size, n))
        for j, aj in enumerate(coef):
            if j >= n:
                break
            s[:, j:] += aj[:, None] * t[:, : n - j]
        return s

    def residual(self, series: TaylorSeries, x_local) -> np.ndarray:
        """``S f - g`` for a trial series at local points."""
        x_local = np.atleast_1d(np.asarray(x_local, dtype=float))
        c = np.zeros(self.n_coeffs)
        m = min(self.n_coeffs, series.order)
        c[:m] = series.coeffs[:m]
        res = self.matrix(series.center, x_local) @ c
        if self.source is not None:
            res = res - self.source(series.center + x_local)
        return res


def solve_element_linear(p: CollocationProblem, a: float, b: float) -> TaylorSeries:
    """Solve ``sum_{n >= nu} S_mn C_n = F_m`` on ``[a, b]`` and return the series."""
    nodes, _ = legendre_nodes(p.n_coeffs - p.nu)
    x = map_to_element(nodes, a, b)
    s = p.matrix(a, x)
    g = p.source(a + x) if p.source is not None else np.zeros_like(x)
    nu = p.nu
    rhs = g - s[:, :nu] @ p.known
    # equilibrate columns: T_n(b - a) spans many decades across n
    col = tb_table(p.n_coeffs - 1, b - a)[0, nu:]
    lhs = s[:, nu:] * (1.0 / col)
    try:
        unknown = np.linalg.solve(lhs, rhs) / col
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"collocation matrix on [{a}, {b}] is singular: {exc}",
                                  _condition(lhs)) from None
    if not np.all(np.isfinite(unknown)):
        raise SingularMatrixError(f"collocation matrix on [{a}, {b}] is singular",
                                  _condition(lhs))
    coeffs = np.concatenate([p.known, unknown])
    # normwise backward error; componentwise blows up on rows that vanish identically
    res = np.max(np.abs(s @ coeffs - g))
    scale = np.max(np.abs(s).sum(axis=1)) * np.max(np.abs(coeffs)) + np.max(np.abs(g))
    backward = float(res / scale) if scale > 0 else 0.0
    if backward > RESIDUAL_WARN:
        warnings.warn(f"collocation residual {backward:.2e} on [{a}, {b}]",
                      RuntimeWarning, stacklevel=2)
    return TaylorSeries(a, b - a, coeffs)


def _condition(m: np.ndarray) -> float:
    with np.errstate(all="ignore"):
        try:
            return float(np.linalg.cond(m))
        except np.linalg.LinAlgError:
            return float("inf")


def solve_element_fixed_point(
    build: Callable[[TaylorSeries], CollocationProblem],
    a: float,
    b: float,
    seed: TaylorSeries,
    tol: float = 1e-14,
    max_iter: int = 50,
    full_output: bool = False,
):
    """Fixed-point iteration for a nonlinear element problem.

    ``build(previous)`` returns the linear problem whose source (and possibly
    coefficients) are evaluated from the previous iterate.  Iteration stops
    once the iterates' values on the element (collocation nodes and both ends)
    change by at most ``tol`` relative to their largest magnitude.

    With ``full_output`` the result is ``(series, iterations)``, where
    ``iterations`` counts the solves that still moved the iterate (the final,
    confirming solve is not counted, so an exact seed gives 0).
    """
    prev = seed
    change = np.inf
    for it in range(max_iter):
        problem = build(prev)
        current = solve_element_linear(problem, a, b)
        nodes, _ = legendre_nodes(problem.n_coeffs - problem.nu)
        x = np.concatenate([[0.0], map_to_element(nodes, a, b), [b - a]])
        new = current(x)
        old = prev.at_global(a + x)
        size = np.max(np.abs(new))
        change = np.max(np.abs(new - old)) / (size if size > 0 else 1.0)
        if change <= tol:
            return (current, it) if full_output else current
        prev = current
    raise ConvergenceError(
        f"fixed-point iteration on [{a}, {b}] stalled after {max_iter} iterations "
        f"(last relative change {change:.3e})", residual=float(change))


@dataclass(frozen=True)
class PiecewiseSolution:
    """Element-wise TB representation of a solution on a :class:`Mesh`."""

    mesh: Mesh
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        elements = tuple(self.elements)
        if len(elements) != self.mesh.n_elements:
            raise ValueError(f"{len(elements)} elements for a mesh of {self.mesh.n_elements}")
        object.__setattr__(self, "elements", elements)

    def __call__(self, x, deriv: int = 0):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = self.mesh.locate(x)
        out = np.empty_like(x)
        for i in np.unique(idx):
            sel = idx == i
            el = self.elements[i]
            out[sel] = el.at_global(x[sel], deriv)
        return float(out[0]) if scalar else out

    def continuity_defect(self, orders: int) -> float:
        """Largest relative mismatch of derivatives ``0..orders-1`` at interior breakpoints."""
        worst = 0.0
        for left, right in zip(self.elements[:-1], self.elements[1:]):
            end = left.shifted(left.width)[:orders]
            start = right.coeffs[:orders]
            scale = np.maximum(np.abs(end), np.abs(start))
            scale[scale == 0] = 1.0
            worst = max(worst, float(np.max(np.abs(end - start) / scale)))
        return worst


def _annotate(exc: PhaseAmpError, index: int) -> PhaseAmpError:
    exc.args = (f"element {index}: {exc.args[0] if exc.args else ''}",) + exc.args[1:]
    exc.element = index
    return exc


def propagate(
    mesh: Mesh,
    solve_element: Callable[[int, float, float, np.ndarray, Optional[TaylorSeries]], TaylorSeries],
    first_element_known: Sequence[float],
    later_nu: int,
) -> PiecewiseSolution:
    """March across ``mesh`` element by element.

    ``solve_element(i, a, b, known, seed)`` solves element ``i``.  The first
    element receives ``first_element_known`` (its length is that element's
    ``nu``) and ``seed=None``; each later element receives the first
    ``later_nu`` derivatives of its predecessor at the shared breakpoint, and
    the predecessor's full shifted coefficient vector as ``seed``.
    """
    elements = []
    known = np.asarray(first_element_known, dtype=float)
    seed = None
    for i, (a, b) in enumerate(mesh.intervals()):
        try:
            el = solve_element(i, a, b, known, seed)
        except PhaseAmpError as exc:
            raise _annotate(exc, i)
        elements.append(el)
        shifted = el.shifted(el.width)
        known = shifted[:later_nu]
        seed = TaylorSeries(b, 1.0, shifted)
    return PiecewiseSolution(mesh, tuple(elements))


def propagate_linear(
    mesh: Mesh,
    problem_factory: Callable[[int, float, float, np.ndarray], CollocationProblem],
    first_element_known: Sequence[float],
    first_element_nu: int,
    later_nu: int,
) -> PiecewiseSolution:
    """:func:`propagate` for linear problems built by ``problem_factory(i, a, b, known)``."""
    if len(first_element_known) != first_element_nu:
        raise ValueError("first_element_known must have first_element_nu entries")

    def solve(i, a, b, known, seed):
        return solve_element_linear(problem_factory(i, a, b, known), a, b)

    return propagate(mesh, solve, first_element_known, later_nu)
