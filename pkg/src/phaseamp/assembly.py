"""Energy-normalised regular and irregular solutions from amplitude and phase.

For ``r >= r_min``::

    S(r) = A(r) sin Phi(r),     C(r) = A(r) cos Phi(r)

Below ``r_min`` the regular solution is continued by the inner collocation
solution, scaled by ``gamma``.  At ``r_pi`` the regular solution vanishes and
its slope is ``-W / A(r_pi)``, which fixes

    gamma = -W / (A(r_pi) * psi_inner'(r_pi)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplitude import AmplitudeSolution, solve_amplitude
from .collocation import DEFAULT_EXTRA_ORDER
from .errors import ConfigurationError, DomainError, PhaseAmpError, StageError
from .phase import InnerSolution, PhaseSolution, build_phase, find_r_pi, solve_inner_regular
from .potentials import RadialContext

__all__ = [
    "ContinuumState",
    "assemble",
    "eval_regular",
    "eval_irregular",
    "density_at_origin",
    "wronskian",
    "audit_state",
    "audit_passed",
    "AUDIT_LIMITS",
]

#: Largest acceptable values of the :func:`audit_state` deviations.
AUDIT_LIMITS = {"wronskian": 1e-10, "modulus": 1e-12, "splice": 1e-9}


@dataclass(frozen=True)
class ContinuumState:
    """Amplitude, synchronised phase and normalised inner regular solution."""

    ctx: RadialContext
    amp: AmplitudeSolution
    phase: PhaseSolution
    inner: InnerSolution
    gamma: float

    @property
    def r_min(self) -> float:
        return self.amp.r_min

    @property
    def r_pi(self) -> float:
        return self.phase.r_pi

    def regular(self, r, deriv: int = 0):
        return eval_regular(self, r, deriv)

    def irregular(self, r, deriv: int = 0):
        return eval_irregular(self, r, deriv)

    def Psi(self, r):
        """Full radial function ``psi(r) / r`` of the regular solution, ``r > 0``."""
        return eval_regular(self, r) / np.asarray(r, dtype=float)

    @property
    def psi0(self) -> float:
        """``lim_{r->0} S(r)/r`` (non-zero only for ``l = 0``)."""
        return self.gamma * float(self.inner.psi.elements[0].coeffs[1]) if self.ctx.l == 0 else 0.0


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigurationError:
        raise
    except PhaseAmpError as exc:
        raise StageError(name, exc) from exc


def assemble(
    ctx: RadialContext,
    r_min: float = 1e-3,
    method: str = "linear17",
    order: int = DEFAULT_EXTRA_ORDER,
    *,
    inner_density: float = 1.0,
    **mesh_options,
) -> ContinuumState:
    """Run the whole pipeline for one ``(l, k, potential)``."""
    amp = _stage("amplitude", solve_amplitude, ctx, r_min, method, order, **mesh_options)
    inner = _stage("inner", solve_inner_regular, ctx, None, order, inner_density)
    r_pi = _stage("root", find_r_pi, inner)
    if not r_min < r_pi:
        raise ConfigurationError(
            f"r_min={r_min:g} must lie below the first node r_pi={r_pi:.12g}")
    slope = inner.psi(r_pi, 1)
    if abs(slope) < 1e-300:
        raise StageError("normalize", PhaseAmpError(
            f"regular solution has zero slope at its root r_pi={r_pi}"))
    gamma = -amp.W / (math.sqrt(amp.value(r_pi)) * slope)
    # sin Phi(r_min) from the inner solution keeps a tiny phase's relative accuracy
    ratio = gamma * inner.psi(r_min) / math.sqrt(amp.value(r_min))
    phi_min = math.asin(ratio) if 0 <= ratio < 0.5 else None
    phase = _stage("phase", build_phase, amp, r_pi, None, phi_min)
    return ContinuumState(ctx, amp, phase, inner, float(gamma))


def _as_out(value, like):
    return float(value[0]) if np.ndim(like) == 0 else value


def eval_regular(st: ContinuumState, r, deriv: int = 0):
    """``S(r)`` (or ``S'(r)`` with ``deriv=1``) for ``r > 0``."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0):
        raise DomainError("regular solution requested at r <= 0")
    out = np.empty_like(r_arr)
    outer = r_arr >= st.r_min * (1 - 1e-14)
    if np.any(outer):
        ro = r_arr[outer]
        a = np.sqrt(st.amp.value(ro))
        phi = st.phase(ro)
        if deriv == 0:
            out[outer] = a * np.sin(phi)
        elif deriv == 1:
            da = 0.5 * st.amp.derivative(ro) / a
            out[outer] = da * np.sin(phi) + st.amp.W / a * np.cos(phi)
        else:
            raise ValueError("deriv must be 0 or 1")
    if np.any(~outer):
        out[~outer] = st.gamma * st.inner.psi(r_arr[~outer], deriv)
    return _as_out(out, r)


def eval_irregular(st: ContinuumState, r, deriv: int = 0):
    """``C(r)`` (or ``C'(r)``); defined only for ``r >= r_min``."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < st.r_min * (1 - 1e-14)):
        raise DomainError(f"irregular solution is not continued below r_min={st.r_min}")
    a = np.sqrt(st.amp.value(r_arr))
    phi = st.phase(r_arr)
    if deriv == 0:
        out = a * np.cos(phi)
    elif deriv == 1:
        da = 0.5 * st.amp.derivative(r_arr) / a
        out = da * np.cos(phi) - st.amp.W / a * np.sin(phi)
    else:
        raise ValueError("deriv must be 0 or 1")
    return _as_out(out, r)


def wronskian(st: ContinuumState, r):
    """``C S' - S C'`` from the assembled values and derivatives."""
    s, ds = eval_regular(st, r), eval_regular(st, r, 1)
    c, dc = eval_irregular(st, r), eval_irregular(st, r, 1)
    return c * ds - s * dc


def density_at_origin(
    ctx: RadialContext,
    r_min: float = 1e-3,
    method: str = "linear17",
    order: int = DEFAULT_EXTRA_ORDER,
    **options,
) -> tuple[float, float]:
    """``(Psi(0), Psi(0)^2)`` of the energy-normalised s-wave.

    The inner solution starts as ``psi = r + ...`` (``C_1 = 1``), so
    ``Psi(0) = gamma``.
    """
    if ctx.l != 0:
        raise ConfigurationError("density at the origin is defined for l = 0 only")
    st = assemble(ctx, r_min, method, order, **options)
    psi0 = st.psi0
    return psi0, psi0 * psi0


def audit_state(st: ContinuumState, n_points: int = 1025, r_max: float = 300.0) -> dict:
    """Check the state's invariants on a log-spaced grid.

    Returns the worst Wronskian deviation from ``W``, the worst relative
    ``S^2 + C^2 - Y`` defect, whether the phase is strictly increasing, and
    the splice mismatch (scaled by ``A``) on ``[r_min, r_pi]``.
    """
    r = np.geomspace(st.r_min, max(r_max, 2 * st.r_pi), n_points)
    w = wronskian(st, r)
    s = eval_regular(st, r)
    c = eval_irregular(st, r)
    y = st.amp.value(r)
    phi = st.phase(r)
    rs = np.linspace(st.r_min, st.r_pi, 257)
    outer = np.sqrt(st.amp.value(rs)) * np.sin(st.phase(rs))
    inner = st.gamma * st.inner.psi(rs)
    # increments below the resolution of Phi itself cannot show up as > 0
    dphi = np.diff(phi)
    resolvable = st.phase.derivative(r[1:]) * np.diff(r) > 8 * np.finfo(float).eps * np.maximum(np.abs(phi[1:]), 1.0)
    increasing = bool(np.all(dphi[resolvable] > 0) and np.all(dphi >= -8 * np.finfo(float).eps * np.maximum(np.abs(phi[1:]), 1.0)))
    return {
        "wronskian": float(np.max(np.abs(w - st.amp.W))),
        "modulus": float(np.max(np.abs(s * s + c * c - y) / y)),
        "phase_increasing": increasing,
        "splice": float(np.max(np.abs(inner - outer) / np.sqrt(st.amp.value(rs)))),
    }


def audit_passed(report: dict) -> bool:
    """True when an :func:`audit_state` report is within :data:`AUDIT_LIMITS`."""
    return bool(report["phase_increasing"]) and all(
        report[key] <= limit for key, limit in AUDIT_LIMITS.items())
