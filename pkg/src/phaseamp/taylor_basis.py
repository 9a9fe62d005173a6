"""Taylor-basis (TB) polynomials ``T_n(x) = x**n / n!`` and series built on them.

A :class:`TaylorSeries` stores raw derivative values ``C_n = f^(n)(a)`` at the
left end ``a`` of an element, so

    f(a + x) = sum_n T_n(x) C_n,       0 <= x <= width.

Factorials are never formed; every TB value comes from the two-term recurrence
``T_n = (x / n) T_{n-1}``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TaylorSeries",
    "tb_eval_all",
    "tb_table",
    "tb_product_coeff",
    "series_eval",
    "series_shift",
    "multinomial_term_count",
]


def tb_eval_all(n_max: int, x: float) -> np.ndarray:
    """Return ``[T_0(x), ..., T_{n_max}(x)]`` by the two-term recurrence."""
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    out = np.empty(n_max + 1)
    out[0] = 1.0
    for n in range(1, n_max + 1):
        out[n] = out[n - 1] * (x / n)
    return out


def tb_table(n_max: int, x) -> np.ndarray:
    """Vectorised :func:`tb_eval_all`; row ``i`` holds the TB values at ``x[i]``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, n_max + 1))
    out[:, 0] = 1.0
    for n in range(1, n_max + 1):
        out[:, n] = out[:, n - 1] * (x / n)
    return out


def tb_product_coeff(m: int, n: int) -> float:
    """Coefficient ``c`` in ``T_m(x) T_n(x) = c T_{m+n}(x)``, i.e. ``binom(m+n, n)``.

    Raises ``OverflowError`` when the binomial does not fit in a double.
    """
    if m < 0 or n < 0:
        raise ValueError("TB indices must be non-negative")
    return float(math.comb(m + n, n))


def multinomial_term_count(n: int, m: int) -> int:
    """Number of TB products of total order ``n`` in ``m`` variables."""
    if n < 0 or m < 1:
        raise ValueError("need n >= 0 and m >= 1")
    return math.comb(n + m - 1, m - 1)


@dataclass(frozen=True)
class TaylorSeries:
    """TB expansion of a function on the element ``[center, center + width]``.

    Attributes
    ----------
    center : float
        Left end ``a`` of the element; the expansion point.
    width : float
        Element length ``b - a`` (> 0).
    coeffs : numpy.ndarray
        Derivative values ``C_0 ... C_{N-1}`` of the represented function at
        ``center``.
    """

    center: float
    width: float
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coeffs must be a non-empty 1-D sequence")
        if not self.width > 0:
            raise ValueError(f"element width must be positive, got {self.width}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self) -> int:
        """Number of coefficients ``N``."""
        return self.coeffs.size

    @property
    def right(self) -> float:
        return self.center + self.width

    def __call__(self, x_local, deriv: int = 0):
        return series_eval(self, x_local, deriv)

    def at_global(self, x, deriv: int = 0):
        """Evaluate at global coordinate ``x`` (no range check)."""
        return series_eval(self, np.asarray(x) - self.center, deriv, check=False)

    def shifted(self, h: float) -> np.ndarray:
        return series_shift(self, h)


def series_eval(s: TaylorSeries, x_local, deriv: int = 0, check: bool = True):
    """Evaluate the ``deriv``-th derivative of ``s`` at ``center + x_local``.

    Differentiation lowers every TB index by one, so the ``k``-th derivative is
    ``sum_n C_{n+k} T_n(x)``.  Points outside ``[0, width]`` are evaluated but
    reported through a :class:`RuntimeWarning` when ``check`` is true.
    """
    if deriv < 0:
        raise ValueError("deriv must be >= 0")
    scalar = np.ndim(x_local) == 0
    x = np.atleast_1d(np.asarray(x_local, dtype=float))
    if check:
        slack = 1e-12 * s.width
        if np.any(x < -slack) or np.any(x > s.width + slack):
            warnings.warn("series evaluated outside its element (extrapolation)",
                          RuntimeWarning, stacklevel=2)
    c = s.coeffs[deriv:]
    if c.size == 0:
        out = np.zeros_like(x)
    else:
        out = tb_table(c.size - 1, x) @ c
    return float(out[0]) if scalar else out


def series_shift(s: TaylorSeries, h: float) -> np.ndarray:
    """Derivative values of the represented polynomial at ``center + h``.

    ``D_k = sum_j T_j(h) C_{k+j}``, the addition formula for TB polynomials
    applied term by term.  Used to hand boundary data from one element to the
    next.
    """
    c = s.coeffs
    t = tb_eval_all(c.size - 1, h)
    return np.array([np.dot(t[: c.size - k], c[k:]) for k in range(c.size)])
