"""Grid scans over (alpha, beta), crossing bisection and single-point reports.

Rows always come out beta-major, alpha ascending. Points are independent,
so they may be farmed out to worker processes; results are collected in
submission order, which keeps the output bytes independent of the worker
count.
"""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional

import numpy as np

from . import jc, oracle, polaron, qfi
from .errors import BranchCrossed, InputError, NoSignChange, NonConvergence, NumericalError
from .units import (
    REFERENCE_B,
    EnergyAnchor,
    FieldPoint,
    MaterialSpec,
    SocStrengths,
    coupling_per_velocity,
    map_parameters,
)

SCHEMA = "soc-rabi/point/v1"

XI_COLUMNS = ("alpha", "beta", "re_xi", "im_xi", "residual", "converged")
GAP_COLUMNS = ("alpha", "beta", "gap", "ground_branch", "source")
QFI_COLUMNS = ("alpha", "beta", "F_B", "method", "branch", "step", "flag")


@dataclass(frozen=True)
class SweepOptions:
    source: str = "approx"
    truncation: Optional[int] = None  # None: automatic per point
    fd_step: Optional[float] = None  # None: 1e-6 * B
    tol: float = polaron.DEFAULT_TOL
    oracle_tol: float = 1.0  # rad/s, truncation convergence

    def __post_init__(self):
        qfi.Source(self.source)
        if self.fd_step is not None and not self.fd_step > 0:
            raise InputError(f"fd_step must be positive, got {self.fd_step!r}")
        if not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol!r}")


@dataclass(frozen=True)
class SweepGrid:
    alpha_range: tuple = (0.0, 1000.0, 101)
    beta_range: tuple = (0.0, 100.0, 101)
    B: float = REFERENCE_B
    material: MaterialSpec = field(default_factory=MaterialSpec)
    anchor: Optional[EnergyAnchor] = None
    options: SweepOptions = field(default_factory=SweepOptions)

    def __post_init__(self):
        for name in ("alpha_range", "beta_range"):
            lo, hi, count = getattr(self, name)
            if int(count) != count or count < 1:
                raise InputError(f"{name} count must be a positive integer, got {count!r}")
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise InputError(f"{name} needs min <= max, got ({lo!r}, {hi!r})")
            if lo < 0:
                raise InputError(f"{name} must be nonnegative, got min {lo!r}")
        FieldPoint(self.B)

    @staticmethod
    def _axis(rng):
        lo, hi, count = rng
        return [float(x) for x in np.linspace(lo, hi, int(count))]

    @property
    def alphas(self):
        return self._axis(self.alpha_range)

    @property
    def betas(self):
        return self._axis(self.beta_range)

    def points(self):
        return [(a, b) for b in self.betas for a in self.alphas]

    def params(self, alpha, beta, B=None):
        return map_parameters(
            self.material, FieldPoint(self.B if B is None else B), SocStrengths(alpha, beta), self.anchor
        )


def run_points(fn, items, workers=1):
    """Map ``fn`` over ``items`` in order, optionally in worker processes."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# -- per-point workers (module level so they pickle) -----------------------------


def xi_row(grid: SweepGrid, point):
    alpha, beta = point
    params = grid.params(alpha, beta)
    try:
        sol = polaron.solve_xi(params, grid.options.tol)
    except NonConvergence as exc:
        sol = exc.solution
    return (alpha, beta, sol.xi.real, sol.xi.imag, sol.residual, sol.converged)


def oracle_gap(params, options: SweepOptions):
    """Signed exact gap and the spectrum it came from.

    The gap is the lowest even-parity level minus the lowest odd-parity
    level; it equals +-(E1 - E0) when the two lowest levels have opposite
    parity, and changes sign exactly where the ground-state parity flips.
    """
    if options.truncation is None:
        N = oracle.converge_truncation(params, tol=options.oracle_tol).truncation
    else:
        N = options.truncation
    spec = oracle.exact_spectrum(params, N, k=min(2 * N, 8))
    return spec.signed_gap(), spec


def _branch_from_gap(gap, scale):
    if abs(gap) <= polaron.DEGENERACY_RTOL * scale:
        return polaron.Branch.DEGENERATE
    return polaron.Branch.G1 if gap > 0 else polaron.Branch.G2


def gap_at(params, options: SweepOptions):
    """(signed gap, branch) for the chosen source."""
    if options.source == "approx":
        _, _, spec = polaron.solve_point(params, options.tol)
        return spec.gap, spec.ground_branch
    gap, _ = oracle_gap(params, options)
    return gap, _branch_from_gap(gap, params.Ea + params.Eb)


def gap_row(grid: SweepGrid, point):
    alpha, beta = point
    params = grid.params(alpha, beta)
    try:
        gap, branch = gap_at(params, grid.options)
        return (alpha, beta, gap, branch.value, grid.options.source)
    except NumericalError:
        return (alpha, beta, None, "failed", grid.options.source)


def qfi_row(grid: SweepGrid, point):
    alpha, beta = point
    opts = grid.options
    step = qfi.default_step(grid.B) if opts.fd_step is None else opts.fd_step
    method = qfi.QfiMethod.OVERLAP_FD.value
    try:
        res = qfi.qfi_ground(
            grid.material,
            SocStrengths(alpha, beta),
            grid.B,
            step,
            source=opts.source,
            anchor=grid.anchor,
            truncation=opts.truncation,
            oracle_tol=opts.oracle_tol,
        )
    except BranchCrossed:
        return (alpha, beta, None, method, "crossed", step, "branch_crossed")
    except NonConvergence:
        return (alpha, beta, None, method, "", step, "nonconverged")
    except NumericalError:
        return (alpha, beta, None, method, "", step, "failed")
    return (alpha, beta, res.value, method, res.branch, step, "")


def _scan(row_fn, columns, grid, workers):
    rows = run_points(partial(row_fn, grid), grid.points(), workers)
    return to_csv(columns, rows)


def scan_xi(grid: SweepGrid, workers=1) -> str:
    return _scan(xi_row, XI_COLUMNS, grid, workers)


def scan_gap(grid: SweepGrid, workers=1) -> str:
    return _scan(gap_row, GAP_COLUMNS, grid, workers)


def scan_qfi(grid: SweepGrid, workers=1) -> str:
    return _scan(qfi_row, QFI_COLUMNS, grid, workers)


def read_csv(text):
    """Parse scan output back into a list of dicts (values left as strings)."""
    return list(csv.DictReader(io.StringIO(text)))


# -- crossing boundary ------------------------------------------------------------


@dataclass(frozen=True)
class CrossingPoint:
    beta: float
    alpha_c: float
    method: str
    bracket: tuple

    def to_dict(self):
        return {
            "beta": self.beta,
            "alpha_c": self.alpha_c,
            "method": self.method,
            "bracket": list(self.bracket),
        }


@dataclass(frozen=True)
class CrossingBoundary:
    points: tuple
    bracket_tol: float

    def to_dict(self):
        return {"bracket_tol": self.bracket_tol, "points": [p.to_dict() for p in self.points]}


def find_crossing(
    beta: float,
    alpha_bracket=(0.0, 1000.0),
    source="approx",
    tol: float = 1e-3,
    B: float = REFERENCE_B,
    material: Optional[MaterialSpec] = None,
    anchor: Optional[EnergyAnchor] = None,
    options: Optional[SweepOptions] = None,
) -> CrossingPoint:
    """Bisect the signed gap in alpha (m/s) until the bracket is at most ``tol``.

    Raises
    ------
    NoSignChange
        If the gap has the same sign at both ends of ``alpha_bracket``.
    """
    material = material or MaterialSpec()
    options = replace(options or SweepOptions(), source=source)
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol!r}")
    lo, hi = map(float, alpha_bracket)
    if not 0 <= lo < hi:
        raise InputError(f"alpha bracket must satisfy 0 <= lo < hi, got ({lo!r}, {hi!r})")

    def gap(alpha):
        params = map_parameters(material, FieldPoint(B), SocStrengths(alpha, beta), anchor)
        return gap_at(params, options)[0]

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0:
        return CrossingPoint(beta, lo, source, (lo, lo))
    if g_hi == 0:
        return CrossingPoint(beta, hi, source, (hi, hi))
    if (g_lo > 0) == (g_hi > 0):
        raise NoSignChange(
            f"gap has the same sign at alpha={lo!r} ({g_lo:.3e}) and alpha={hi!r} ({g_hi:.3e})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if g_mid == 0:
            lo = hi = mid
            break
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return CrossingPoint(beta, 0.5 * (lo + hi), source, (lo, hi))


def crossing_boundary(betas, alpha_bracket=(0.0, 1000.0), source="approx", tol=1e-3, **kwargs):
    points = tuple(find_crossing(b, alpha_bracket, source, tol, **kwargs) for b in betas)
    return CrossingBoundary(points, tol)


def analytic_crossing_alpha(B=REFERENCE_B, material=None, anchor=None) -> float:
    """alpha at |lambda1| = 2 sqrt(Ea Eb) (exact when beta = 0)."""
    params = map_parameters(material or MaterialSpec(), FieldPoint(B), SocStrengths(), anchor)
    return jc.crossing_coupling(params.Ea, params.Eb) / coupling_per_velocity(B)


# -- single point -------------------------------------------------------------------


def point_query(
    material: MaterialSpec,
    B: float,
    alpha: float,
    beta: float,
    options: Optional[SweepOptions] = None,
    anchor: Optional[EnergyAnchor] = None,
    with_oracle: bool = False,
) -> dict:
    """Everything known about one parameter point, as a JSON-ready dict."""
    options = options or SweepOptions()
    params = map_parameters(material, FieldPoint(B), SocStrengths(alpha, beta), anchor)
    doc = {
        "schema": SCHEMA,
        "inputs": {
            "g_factor": material.g_factor,
            "electron_mass": material.electron_mass,
            "mass_ratio": material.effective_mass_ratio,
            "B": B,
            "alpha": alpha,
            "beta": beta,
            "anchored": anchor is not None,
            "source": options.source,
        },
        "mapped": params.to_dict(),
    }
    xi = polaron.solve_xi(params, options.tol)
    tp = polaron.transformed_params(params, xi)
    spec = polaron.approx_spectrum(params, tp)
    doc["xi"] = xi.to_dict()
    doc["transformed"] = tp.to_dict()
    doc["approx_spectrum"] = spec.to_dict()
    if with_oracle or options.source == "oracle":
        gap, exact = oracle_gap(params, options)
        doc["oracle"] = {
            "truncation": exact.truncation,
            "energies": [float(e) for e in exact.energies],
            "parities": exact.parities,
            "gap": gap,
        }
    step = qfi.default_step(B) if options.fd_step is None else options.fd_step
    try:
        res = qfi.qfi_ground(
            material,
            SocStrengths(alpha, beta),
            B,
            step,
            options.source,
            anchor,
            options.truncation,
            options.oracle_tol,
        )
        doc["qfi"] = res.to_dict()
    except BranchCrossed as exc:
        doc["qfi"] = {"F_B": None, "error": "BranchCrossed", "message": str(exc), "step": step}
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False)
