"""Command-line front end: ``phase-amp {solve,benchmark,scan-alpha,find-peak}``.

Every command writes a table, CSV by default (a ``# phase-amp v<version>``
line, a header row, then data) or JSON (an array of row objects).  Reals are
printed with 17 significant digits so values survive a round trip.

Exit status is 0 on success, 1 on a numerical failure inside a solve and 2
on a bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .amplitude import METHODS
from .assembly import assemble, audit_passed, audit_state, eval_irregular, eval_regular
from .collocation import DEFAULT_EXTRA_ORDER
from .errors import ConfigurationError, PhaseAmpError
from .oracle import oracle_pair, read_table, scaled_error
from .potentials import KINDS, PotentialKind, RadialContext

__all__ = [
    "RunConfig",
    "ScanRecord",
    "parse_grid",
    "parse_alpha_grid",
    "cmd_solve",
    "cmd_benchmark",
    "cmd_scan_alpha",
    "cmd_find_peak",
    "format_table",
    "read_scan_csv",
    "main",
]

SCREENED = ("scp", "hulthen", "ecscp")
DEFAULT_GRID = (0.001, 300.0, 1025)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def parse_grid(spec: str) -> tuple[float, float, int]:
    """``"lo:hi:count"`` -> ``(lo, hi, count)``."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"grid spec {spec!r} is not lo:hi:count")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigurationError(f"grid spec {spec!r}: {exc}") from None
    if not (count >= 2 and hi > lo):
        raise ConfigurationError(f"grid spec {spec!r} needs hi > lo and count >= 2")
    return lo, hi, count


def parse_alpha_grid(spec: str) -> np.ndarray:
    """``"lo:hi:count[:log]"`` -> array of screening parameters."""
    parts = spec.split(":")
    log = len(parts) == 4 and parts[3].strip().lower() == "log"
    if len(parts) == 4 and not log:
        raise ConfigurationError(f"alpha grid spec {spec!r}: fourth field must be 'log'")
    lo, hi, count = parse_grid(":".join(parts[:3]))
    if lo <= 0 and log:
        raise ConfigurationError("a log-spaced alpha grid needs lo > 0")
    return np.geomspace(lo, hi, count) if log else np.linspace(lo, hi, count)


@dataclass(frozen=True)
class RunConfig:
    potential: str = "coulomb"
    Z: float = 1.0
    alpha: float = 0.0
    k: float = 1.0
    l: int = 0
    r_min: float = 1e-3
    order: int = DEFAULT_EXTRA_ORDER
    method: str = "linear17"
    fmt: str = "csv"
    grid: tuple = DEFAULT_GRID

    def __post_init__(self):
        if self.potential.lower() not in KINDS:
            raise ConfigurationError(f"unknown potential {self.potential!r}; choose from {KINDS}")
        if not self.r_min > 0:
            raise ConfigurationError(f"r_min must be positive, got {self.r_min}")
        if not self.k > 0:
            raise ConfigurationError(f"k must be positive, got {self.k}")
        if self.l < 0 or int(self.l) != self.l:
            raise ConfigurationError(f"l must be a non-negative integer, got {self.l}")
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.fmt not in ("csv", "json"):
            raise ConfigurationError(f"unknown format {self.fmt!r}")
        if self.order < 1:
            raise ConfigurationError("order must be >= 1")
        if len(self.grid) != 3 or self.grid[2] < 2 or not self.grid[1] > self.grid[0]:
            raise ConfigurationError(f"bad grid {self.grid}")

    def context(self, l: int | None = None) -> RadialContext:
        pot = PotentialKind(self.potential, self.Z, self.alpha)
        return RadialContext(self.l if l is None else l, self.k, pot)

    def radii(self) -> np.ndarray:
        lo, hi, count = self.grid
        return np.linspace(lo, hi, int(count))


@dataclass(frozen=True)
class ScanRecord:
    alpha: float
    psi0: float
    density: float
    potential: str
    k: float
    converged: bool


# ---------------------------------------------------------------- commands

def cmd_solve(cfg: RunConfig):
    """Columns ``r, S, C, Y, Phi`` on the configured grid.

    Below ``r_min`` only ``S`` is defined; the other columns are NaN there.
    """
    st = assemble(cfg.context(), cfg.r_min, cfg.method, cfg.order)
    r = cfg.radii()
    out = np.full((r.size, 5), np.nan)
    out[:, 0] = r
    out[:, 1] = eval_regular(st, r)
    outer = r >= st.r_min
    ro = r[outer]
    out[outer, 2] = eval_irregular(st, ro)
    out[outer, 3] = st.amp.value(ro)
    out[outer, 4] = st.phase(ro)
    return ["r", "S", "C", "Y", "Phi"], out.tolist()


def _log_error(e):
    return np.log10(np.maximum(e, 1e-300))


def cmd_benchmark(cfg: RunConfig, l_max: int = 4, references=None):
    """Amplitude-scaled errors of ``S`` and ``C`` for ``l = 0..l_max``.

    References come from the integrating oracle (free and Coulomb potentials)
    or from fixture tables (``references`` maps ``l`` to a table).  Rows are
    ``(kind, l, r, log10_err_S, log10_err_C)`` with ``kind`` ``"point"`` for
    each grid point and ``"max"`` for the per-``l`` summary.
    """
    references = references or {}
    pot = cfg.potential.lower()
    if pot not in ("free", "coulomb") and not references:
        raise ConfigurationError(
            f"benchmark needs a reference table for potential {pot!r}; "
            "only free and coulomb have a certified oracle")
    r = cfg.radii()
    if r[0] < cfg.r_min:
        raise ConfigurationError(f"benchmark grid starts below r_min={cfg.r_min}")
    rows = []
    for l in range(l_max + 1):
        ctx = cfg.context(l)
        if l in references:
            table = references[l]
            if not np.array_equal(table.grid, r):
                raise ConfigurationError(f"reference table for l={l} uses a different grid")
            s_ref, c_ref = table.regular, table.irregular
        elif references:
            raise ConfigurationError(f"no reference table for l={l}")
        else:
            s_ref, _, c_ref, _ = oracle_pair(ctx, r)
        st = assemble(ctx, cfg.r_min, cfg.method, cfg.order)
        amp = np.hypot(s_ref, c_ref)
        es = scaled_error(eval_regular(st, r), s_ref, amp)
        ec = scaled_error(eval_irregular(st, r), c_ref, amp)
        ls, lc = _log_error(es), _log_error(ec)
        rows.extend(["point", l, float(x), float(a), float(b)] for x, a, b in zip(r, ls, lc))
        rows.append(["max", l, math.nan, float(ls.max()), float(lc.max())])
    return ["kind", "l", "r", "log10_err_S", "log10_err_C"], rows


def _psi0(potential: str, alpha: float, k: float, r_min: float, Z: float, method: str,
          order: int) -> float:
    ctx = RadialContext(0, k, PotentialKind(potential, Z, alpha))
    return assemble(ctx, r_min, method, order).psi0


def _scan_one(args) -> ScanRecord:
    potential, alpha, k, r_min, Z, method, order, audit_points = args
    try:
        ctx = RadialContext(0, k, PotentialKind(potential, Z, alpha))
        st = assemble(ctx, r_min, method, order)
        ok = audit_passed(audit_state(st, audit_points))
        psi0 = st.psi0
    except PhaseAmpError:
        return ScanRecord(float(alpha), math.nan, math.nan, potential, k, False)
    return ScanRecord(float(alpha), psi0, psi0 * psi0, potential, k, ok)


def cmd_scan_alpha(
    potential: str,
    alphas,
    k: float = 1.0,
    r_min: float = 1e-3,
    *,
    Z: float = 1.0,
    method: str = "linear17",
    order: int = DEFAULT_EXTRA_ORDER,
    jobs: int = 1,
    audit_points: int = 257,
) -> list[ScanRecord]:
    """``Psi_0(0)`` for each screening parameter, one independent solve each.

    A record is ``converged`` when its solve succeeded and the state passed
    :func:`audit_state` on ``audit_points`` radii.  Failed solves are kept with
    NaN values.  Records come back in ascending ``alpha`` order.
    """
    potential = potential.lower()
    if potential not in SCREENED:
        raise ConfigurationError(f"alpha scans need a screened potential {SCREENED}")
    alphas = np.sort(np.asarray(alphas, dtype=float))
    if alphas.size == 0 or np.any(alphas <= 0):
        raise ConfigurationError("alpha values must be positive")
    tasks = [(potential, float(a), k, r_min, Z, method, order, audit_points) for a in alphas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_one, tasks, chunksize=8))
    return [_scan_one(t) for t in tasks]


def cmd_find_peak(
    potential: str,
    bracket=(0.5, 4.0),
    k: float = 1.0,
    r_min: float = 1e-3,
    *,
    Z: float = 1.0,
    method: str = "linear17",
    order: int = DEFAULT_EXTRA_ORDER,
    tol: float = 1e-7,
    step: float = 2e-4,
) -> tuple[float, float]:
    """Location and value of the maximum of ``Psi_0(0)`` over ``alpha``.

    Golden-section search narrows ``bracket`` to ``tol``; a parabola through
    three points ``step`` apart then places the vertex.  Near the maximum
    ``Psi_0`` is flat to second order, so the golden stage alone cannot beat
    ``sqrt(noise / curvature)``; the parabola's spacing is wide enough that
    rounding noise in ``Psi_0`` barely moves the vertex.
    """
    potential = potential.lower()
    if potential not in SCREENED:
        raise ConfigurationError(f"peak search needs a screened potential {SCREENED}")
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise ConfigurationError(f"bad bracket {bracket}")

    def f(a):
        return _psi0(potential, a, k, r_min, Z, method, order)

    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    edge = 10.0 * tol
    if x - lo < edge or hi - x < edge:
        raise ConfigurationError(
            f"maximum of Psi_0 sits at the bracket edge ({lo:g}, {hi:g}); widen the bracket")
    h = min(step, 0.25 * (x - lo), 0.25 * (hi - x))
    f0, fm, fp = f(x), f(x - h), f(x + h)
    curv = fp - 2.0 * f0 + fm
    if curv < 0:
        shift = 0.5 * h * (fm - fp) / curv
        if abs(shift) <= h:
            x += shift
    return x, f(x)


# ---------------------------------------------------------------- output

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _json_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no NaN or infinity
        return float(f"{v:.17g}") if math.isfinite(v) else None
    return v


def format_table(columns, rows, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps([{c: _json_cell(v) for c, v in zip(columns, row)} for row in rows],
                          indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# phase-amp v{__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _records_table(records):
    cols = [f.name for f in fields(ScanRecord)]
    return cols, [list(asdict(r).values()) for r in records]


def read_scan_csv(text: str) -> list[ScanRecord]:
    """Inverse of writing scan records with :func:`format_table`."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        out.append(ScanRecord(float(row["alpha"]), float(row["psi0"]), float(row["density"]),
                              row["potential"], float(row["k"]), row["converged"] == "true"))
    return out


# ---------------------------------------------------------------- argparse

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="phase-amp", description="Energy-normalised continuum radial functions in phase-amplitude form.")
    p.add_argument("--version", action="version", version=f"phase-amp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--potential", default="coulomb", type=str.lower, choices=KINDS)
        sp.add_argument("--Z", type=float, default=1.0)
        sp.add_argument("--k", type=float, default=1.0)
        sp.add_argument("--r-min", type=float, default=1e-3)
        sp.add_argument("--order", type=int, default=DEFAULT_EXTRA_ORDER,
                        help="collocation points per element (N - nu)")
        sp.add_argument("--method", choices=METHODS, default="linear17")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--output", default=None, help="output path (default: stdout)")
        if grid:
            sp.add_argument("--grid", default="0.001:300:1025", help="lo:hi:count")

    sp = sub.add_parser("solve", help="S, C, Y and Phi on a radial grid")
    common(sp)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--l", type=int, default=0)

    sp = sub.add_parser("benchmark", help="scaled errors of S and C against a reference")
    common(sp)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--l-max", type=int, default=4)
    sp.add_argument("--reference", action="append", default=[],
                    help="fixture table (repeat once per l)")

    sp = sub.add_parser("scan-alpha", help="Psi_0(0) over a screening-parameter grid")
    common(sp, grid=False)
    sp.add_argument("--alpha-grid", default="0.01:100:1025:log", help="lo:hi:count[:log]")
    sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("find-peak", help="maximum of Psi_0(0) over alpha")
    common(sp, grid=False)
    sp.add_argument("--bracket", default="0.5:4", help="lo:hi")
    return p


def _run(args) -> str:
    fmt = args.format
    if args.command in ("solve", "benchmark"):
        cfg = RunConfig(args.potential, args.Z, args.alpha, args.k,
                        getattr(args, "l", 0), args.r_min, args.order, args.method, fmt,
                        parse_grid(args.grid))
        if args.command == "solve":
            return format_table(*cmd_solve(cfg), fmt)
        refs = {}
        for path in args.reference:
            table = read_table(path)
            refs[table.l] = table
        return format_table(*cmd_benchmark(cfg, args.l_max, refs), fmt)
    if args.command == "scan-alpha":
        RunConfig(args.potential, args.Z, 0.0, args.k, 0, args.r_min, args.order,
                  args.method, fmt)
        records = cmd_scan_alpha(args.potential, parse_alpha_grid(args.alpha_grid), args.k,
                                 args.r_min, Z=args.Z, method=args.method, order=args.order,
                                 jobs=args.jobs)
        return format_table(*_records_table(records), fmt)
    RunConfig(args.potential, args.Z, 0.0, args.k, 0, args.r_min, args.order, args.method, fmt)
    try:
        lo, hi = (float(x) for x in args.bracket.split(":"))
    except ValueError:
        raise ConfigurationError(f"bracket {args.bracket!r} is not lo:hi") from None
    alpha, psi0 = cmd_find_peak(args.potential, (lo, hi), args.k, args.r_min, Z=args.Z,
                                method=args.method, order=args.order)
    return format_table(["potential", "alpha", "psi0", "density"],
                        [[args.potential, alpha, psi0, psi0 * psi0]], fmt)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = _run(args)
    except (ConfigurationError, ValueError) as exc:
        print(f"phase-amp: configuration error: {exc}", file=sys.stderr)
        return 2
    except PhaseAmpError as exc:
        print(f"phase-amp: numerical failure: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
