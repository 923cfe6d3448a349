"""Mass-parametrized energy curves and their structural diagnostics.

Scanning a grid of masses yields the curve a -> C_a = inf J on the mass-a
sphere. The checks here probe what makes that curve useful: monotonicity,
strict negativity past a threshold, sub-additivity against splitting into
two bumps, the location of the threshold mass itself, and the infimum of
the quadratic part of the energy (kinetic plus potential) which controls
the small-mass behavior.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import BracketError, StagnationError
from .flow import SolverConfig, minimize
from .grids import GridFunction, RadialGrid, kinetic, laplacian_tridiagonal
from .models import Model, make_model


def vanishing_diagnostic(u: GridFunction, radius: float = 1.0) -> float:
    """Largest mass any ball of the given radius captures.

    Small values flag spreading: the density is everywhere locally thin,
    the discrete signature of a vanishing minimizing sequence.
    """
    g = u.grid
    dens = g.w * u.values**2
    cum = np.concatenate(([0.0], np.cumsum(dens)))
    centers = np.concatenate(([0.0], g.r))
    lo = np.searchsorted(g.r, centers - radius, side="left")
    hi = np.searchsorted(g.r, centers + radius, side="right")
    return float((cum[hi] - cum[lo]).max())


@dataclass(frozen=True)
class CurvePoint:
    a: float
    energy: float
    lam: float
    converged: bool
    nehari: float
    pohozaev: float
    reason: str | None = None


@dataclass(frozen=True)
class EnergyCurve:
    """Scan output plus the fingerprints that pin down how it was made."""

    points: tuple
    model_fingerprint: str
    grid_fingerprint: str
    config_fingerprint: str
    warm_start: bool

    @property
    def partial(self) -> bool:
        return any(not pt.converged for pt in self.points)

    @property
    def failed_masses(self) -> tuple:
        return tuple(pt.a for pt in self.points if not pt.converged)

    def masses(self) -> np.ndarray:
        return np.array([pt.a for pt in self.points])

    def energies(self) -> np.ndarray:
        return np.array([pt.energy for pt in self.points])

    def monotone_violations(self, tol: float = 0.0) -> int:
        e = self.energies()
        return int(np.sum(np.diff(e) > tol))

    def fingerprint(self) -> str:
        payload = {
            "model": self.model_fingerprint,
            "grid": self.grid_fingerprint,
            "config": self.config_fingerprint,
            "mode": "warm-start" if self.warm_start else "parallel-cold",
            "points": [
                [pt.a, pt.energy, pt.lam, pt.converged, pt.nehari, pt.pohozaev]
                for pt in self.points
            ],
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _config_fingerprint(config: SolverConfig) -> str:
    text = json.dumps(dataclasses.asdict(config), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _point_from_result(a, res) -> CurvePoint:
    return CurvePoint(
        a=a, energy=res.energy, lam=res.lam, converged=res.converged,
        nehari=res.residuals.nehari, pohozaev=res.residuals.pohozaev,
        reason=res.reason,
    )


def _scan_worker(payload):
    a, model_dict, grid_desc, config_dict = payload
    model = make_model(N=model_dict["N"], nonlinearity=model_dict["nonlinearity"],
                       potential=model_dict["potential"])
    grid = RadialGrid(N=grid_desc[0], R=grid_desc[1], n=grid_desc[2])
    config = SolverConfig(**config_dict)
    res = minimize(a, model, grid, config)
    return _point_from_result(a, res)


def scan(a_values, model: Model, grid: RadialGrid,
         config: SolverConfig | None = None, warm_start: bool = True,
         parallel: bool = False, max_workers: int | None = None) -> EnergyCurve:
    """Minimize at each mass in a_values and assemble the energy curve.

    Sequential scans reuse the previous minimizer (rescaled to the next
    mass) as a warm start, which keeps the solver on the same branch along
    the curve. Parallel scans run every mass cold from gaussian starts, in
    separate processes; results arrive in mass order either way.
    """
    a_values = [float(a) for a in a_values]
    if len(a_values) < 3:
        raise ValueError("scan needs at least three masses")
    if any(a <= 0 for a in a_values):
        raise ValueError("masses must be positive")
    if any(b <= a for a, b in zip(a_values, a_values[1:])):
        raise ValueError("masses must be strictly increasing")
    if config is None:
        config = SolverConfig()

    if parallel:
        payloads = [
            (a, model.to_dict(), (grid.N, grid.R, grid.n),
             dataclasses.asdict(config))
            for a in a_values
        ]
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            points = list(pool.map(_scan_worker, payloads))
        used_warm = False
    else:
        points = []
        prev = None
        for a in a_values:
            res = minimize(a, model, grid, config, warm_start=prev)
            points.append(_point_from_result(a, res))
            if warm_start and res.converged:
                prev = res.u
        used_warm = warm_start

    return EnergyCurve(
        points=tuple(points),
        model_fingerprint=model.fingerprint(),
        grid_fingerprint=grid.fingerprint(),
        config_fingerprint=_config_fingerprint(config),
        warm_start=used_warm,
    )


def write_curve_csv(curve: EnergyCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("a,C_a,lambda,converged,nehari,pohozaev\n")
        for pt in curve.points:
            fh.write(
                f"{pt.a:.12g},{pt.energy:.12g},{pt.lam:.12g},"
                f"{'true' if pt.converged else 'false'},"
                f"{pt.nehari:.12g},{pt.pohozaev:.12g}\n"
            )


def read_curve_csv(path) -> list:
    """Rows of a written curve file, as CurvePoint instances."""
    points = []
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "a,C_a,lambda,converged,nehari,pohozaev":
            raise ValueError(f"unexpected curve header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, c, lam, conv, neh, poh = line.split(",")
            points.append(CurvePoint(
                a=float(a), energy=float(c), lam=float(lam),
                converged=conv == "true", nehari=float(neh),
                pohozaev=float(poh),
            ))
    return points


@dataclass(frozen=True)
class SubadditivityRow:
    a: float
    b: float
    total: float
    gap: float
    all_converged: bool


@dataclass(frozen=True)
class SubadditivityReport:
    """Gaps C(a+b) - C(a) - C(b) over pairs resolvable on the scanned grid."""

    rows: tuple
    tol: float

    @property
    def violations(self) -> tuple:
        return tuple(r for r in self.rows if r.gap > self.tol)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def strict_count(self) -> int:
        return sum(1 for r in self.rows if r.all_converged and r.gap < -self.tol)


def subadditivity_check(curve: EnergyCurve, tol: float = 1e-6) -> SubadditivityReport:
    """Test C(a+b) <= C(a) + C(b) wherever a, b, a+b all lie on the curve.

    Gaps above +tol count as violations. Equality within tol is accepted;
    strict negativity is only meaningful where all three minimizations
    converged, and those pairs are tallied separately.
    """
    pts = curve.points
    a_arr = np.array([pt.a for pt in pts])
    rows = []
    for i in range(len(pts)):
        for j in range(i, len(pts)):
            target = pts[i].a + pts[j].a
            k = int(np.argmin(np.abs(a_arr - target)))
            if not math.isclose(a_arr[k], target, rel_tol=1e-9, abs_tol=1e-12):
                continue
            gap = pts[k].energy - pts[i].energy - pts[j].energy
            rows.append(SubadditivityRow(
                a=pts[i].a, b=pts[j].a, total=pts[k].a, gap=gap,
                all_converged=(pts[i].converged and pts[j].converged
                               and pts[k].converged),
            ))
    return SubadditivityReport(rows=tuple(rows), tol=tol)


def write_subadditivity_csv(report: SubadditivityReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("a,b,gap\n")
        for r in report.rows:
            fh.write(f"{r.a:.12g},{r.b:.12g},{r.gap:.12g}\n")


@dataclass(frozen=True)
class ThresholdResult:
    """Bisection estimate of the mass where the energy curve turns negative."""

    a0: float
    half_width: float
    below_lower_bracket: bool
    bracket: tuple
    deadband: float
    evaluations: tuple
    note: str

    def to_dict(self) -> dict:
        return {
            "a0": self.a0,
            "half_width": self.half_width,
            "below_lower_bracket": self.below_lower_bracket,
            "bracket": list(self.bracket),
            "deadband": self.deadband,
            "evaluations": [
                {"a": a, "J": j, "converged": c, "reason": r}
                for a, j, c, r in self.evaluations
            ],
            "note": self.note,
        }


def threshold_a0(model: Model, grid: RadialGrid,
                 config: SolverConfig | None = None,
                 bracket: tuple = (1e-3, 8.0), deadband: float = 1e-6,
                 rel_width: float = 1e-2,
                 eval_max_iters: int = 30_000) -> ThresholdResult:
    """Bisect for the smallest mass at which the minimal energy is negative.

    Energies inside the dead band around zero count as "not yet negative";
    this keeps quadrature noise from steering the bisection. Each probe runs
    a capped minimization with an early exit once the energy is decisively
    negative, since the probe only needs a sign.
    """
    a_lo, a_hi = float(bracket[0]), float(bracket[1])
    if not 0 < a_lo < a_hi:
        raise ValueError("bracket must satisfy 0 < a_lo < a_hi")
    if config is None:
        config = SolverConfig()
    floor = -15.0 * deadband
    if config.stop_energy_below is not None:
        floor = max(floor, config.stop_energy_below)
    probe_config = dataclasses.replace(
        config,
        max_iters=min(config.max_iters, eval_max_iters),
        stop_energy_below=floor,
    )

    evaluations = []

    def probe(a: float) -> float:
        res = minimize(a, model, grid, probe_config)
        evaluations.append((a, res.energy, res.converged, res.reason))
        return res.energy

    c_hi = probe(a_hi)
    if not c_hi < -10.0 * deadband:
        raise BracketError(
            f"energy at the upper bracket mass {a_hi:g} is {c_hi:.3g}, not "
            f"decisively negative; enlarge the bracket (the curve dives "
            f"below zero only past the threshold mass)"
        )
    c_lo = probe(a_lo)
    if c_lo < -deadband:
        return ThresholdResult(
            a0=a_lo, half_width=a_lo, below_lower_bracket=True,
            bracket=(a_lo, a_hi), deadband=deadband,
            evaluations=tuple(evaluations),
            note="energy already negative at the lower bracket; the "
                 "threshold is at or below a_lo",
        )
    lo, hi = a_lo, a_hi
    while (hi - lo) > rel_width * 0.5 * (hi + lo):
        mid = 0.5 * (lo + hi)
        if probe(mid) < -deadband:
            hi = mid
        else:
            lo = mid
    return ThresholdResult(
        a0=0.5 * (lo + hi), half_width=0.5 * (hi - lo),
        below_lower_bracket=False, bracket=(a_lo, a_hi), deadband=deadband,
        evaluations=tuple(evaluations), note="",
    )


def quadratic_form_infimum(model: Model, grid: RadialGrid,
                           tol: float = 1e-12,
                           max_iters: int = 10_000) -> float:
    """Infimum of (|grad u|^2 + int V u^2) / |u|^2 by inverse power iteration.

    The reported value is the Rayleigh quotient of the final iterate in the
    symmetric (summed-by-parts) form, so it is a genuine value of the
    quadratic form and in particular never undershoots the exact infimum of
    V by more than the discretization allows.
    """
    V = model.potential.V(grid.r)
    if not np.all(np.isfinite(V)):
        raise ValueError("potential must be finite on the grid")
    lo_band, di, up = laplacian_tridiagonal(grid)
    shift = model.potential.c_ell - 1.0
    A = sp.diags(
        [lo_band[1:], di + V - shift, up[:-1]], offsets=(-1, 0, 1), format="csc"
    )
    solve = splu(A).solve

    x = np.exp(-0.5 * grid.r**2)
    x /= math.sqrt(float(grid.w @ x**2))
    q_prev = math.inf
    for _ in range(max_iters):
        y = solve(x)
        y /= math.sqrt(float(grid.w @ y**2))
        x = y
        u = GridFunction(grid, x)
        q = kinetic(u) + float(grid.w @ (V * x**2))
        if abs(q - q_prev) <= tol * max(1.0, abs(q)):
            return q
        q_prev = q
    raise StagnationError(
        f"inverse power iteration stagnated after {max_iters} steps "
        f"(last change {abs(q - q_prev):.3g})"
    )
