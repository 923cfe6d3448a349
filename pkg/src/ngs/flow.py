"""Constrained gradient-flow minimizer of J on the mass sphere.

One step solves the linearly implicit system
    (I + dt (-Lap + V + shift)) u+ = u + dt (g(u) + (shift + mu) u)
with shift = max(0, -min V) keeping the operator an M-matrix, and the scalar
mu chosen in closed form so the new iterate has the target mass exactly.
Fixed points of the step are exact discrete constrained critical points; a
plain rescale-after-step variant instead converges to an O(dt)-biased
profile, which is why the multiplier enters inside the solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import energy as energy_mod
from . import grids
from .grids import GridFunction, RadialGrid

# fraction of the t = 0.95 R .. R window whose amplitude triggers the
# boundary-contact diagnostic, relative to the profile maximum
BOUNDARY_REL_TOL = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-2
    tol_grad: float = 1e-8
    tol_energy: float = 1e-12
    max_iters: int = 200_000
    starts: int = 3
    seed: int = 0
    initial_width_scale: float = 1.0
    residual_check_every: int = 10
    # iterations without relative residual progress before giving up
    stall_window: int = 5000
    stop_energy_below: float | None = None
    vanishing_fraction: float = 0.05
    deadband: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.tol_grad > 0 and self.tol_energy > 0):
            raise ValueError("tolerances must be positive")
        if self.starts < 1:
            raise ValueError("need at least one start")
        if not self.initial_width_scale > 0:
            raise ValueError("initial width scale must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.residual_check_every < 1 or self.stall_window < 1:
            raise ValueError("check cadence and stall window must be positive")
        if not 0.0 < self.vanishing_fraction < 1.0:
            raise ValueError("vanishing_fraction must lie in (0, 1)")
        if self.deadband < 0:
            raise ValueError("deadband must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "tol_grad": self.tol_grad,
            "tol_energy": self.tol_energy,
            "max_iters": self.max_iters,
            "starts": self.starts,
            "seed": self.seed,
            "initial_width_scale": self.initial_width_scale,
        }


@dataclass
class GroundStateResult:
    u: GridFunction
    a: float
    lam: float
    energy: float                    # J[u], the curve-value estimate
    residuals: energy_mod.IdentityResiduals
    energy_trace: list
    converged: bool
    start_index: int
    reason: str | None = None
    iterations: int = 0
    residual_norm: float = math.inf
    all_start_energies: list = field(default_factory=list)
    start_disagreement: bool = False
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "mass": grids.mass(self.u),
            "lambda": self.lam,
            "C_a_estimate": self.energy,
            "residuals": self.residuals.to_dict(),
            "converged": self.converged,
            "reason": self.reason,
            "start_index": self.start_index,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "all_start_energies": list(self.all_start_energies),
            "start_disagreement": self.start_disagreement,
            "warnings": list(self.warnings),
            "trace_length": len(self.energy_trace),
        }


class _Workspace:
    """Precomputed operators and weights for one (grid, model, dt, a) run."""

    def __init__(self, grid: RadialGrid, model, dt: float, a: float):
        if grid.N != model.N:
            raise ValueError("grid dimension disagrees with model dimension")
        self.grid = grid
        self.model = model
        self.dt = dt
        self.a = a
        self.w = grid.w
        self.V = model.potential.V(grid.r)
        self.shift = max(0.0, -model.potential.c_ell)
        lo, di, up = grids.laplacian_tridiagonal(grid)
        self.lap = (lo, di, up)
        diag = 1.0 + dt * (di + self.V + self.shift)
        if np.any(diag <= 0.0):
            raise ValueError(
                "implicit operator lost positivity; dt too large for this potential"
            )
        matrix = sp.diags(
            [dt * lo[1:], diag, dt * up[:-1]], [-1, 0, 1], format="csc"
        )
        self.solve = spla.splu(matrix).solve
        # edge-sum kinetic weights, gradient-squared form
        om = grids.SPHERE_MEASURE[grid.N]
        h = grid.h
        mid = 0.5 * (grid.r[:-1] + grid.r[1:])
        self.ew_mid = om * mid ** (grid.N - 1) / h
        self.ew_last = om * (grid.r[-1] + 0.5 * h) ** (grid.N - 1) / h
        self.ew_first = om * (0.5 * h) ** (grid.N - 1) / h

    def apply_lap(self, v: np.ndarray) -> np.ndarray:
        lo, di, up = self.lap
        out = di * v
        out[:-1] += up[:-1] * v[1:]
        out[1:] += lo[1:] * v[:-1]
        return out

    def kinetic(self, v: np.ndarray) -> float:
        dv = np.diff(v)
        k = float(self.ew_mid @ (dv * dv))
        k += self.ew_last * v[-1] * v[-1]
        k += self.ew_first * ((v[1] - v[0]) / 3.0) ** 2
        return k

    def energy_J(self, v: np.ndarray) -> float:
        val = 0.5 * self.kinetic(v)
        val += 0.5 * float(self.w @ (self.V * v * v))
        val -= float(self.w @ self.model.nonlinearity.G(v))
        return val

    def multiplier(self, v: np.ndarray) -> float:
        quad = float(self.w @ (v * self.apply_lap(v)))
        gu = float(self.w @ self.model.nonlinearity.g_times_s(v))
        vterm = float(self.w @ (self.V * v * v))
        return (gu - quad - vterm) / float(self.w @ (v * v))

    def residual(self, v: np.ndarray, lam: float) -> float:
        res = self.apply_lap(v) + (self.V + lam) * v - self.model.nonlinearity.g(v)
        return float(np.sqrt((self.w @ (res * res)) / (self.w @ (v * v))))

    def step(self, v: np.ndarray) -> np.ndarray:
        dt = self.dt
        gv = self.model.nonlinearity.g(v)
        v0 = self.solve(v + dt * (gv + self.shift * v))
        q = dt * self.solve(v)
        a2 = float(self.w @ (q * q))
        a1 = 2.0 * float(self.w @ (v0 * q))
        a0 = float(self.w @ (v0 * v0)) - self.a
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc >= 0.0 and a2 > 0.0:
            mu = (-a1 + math.sqrt(disc)) / (2.0 * a2)
            out = v0 + mu * q
        else:
            out = v0
        m = float(self.w @ (out * out))
        if not m > 0.0 or not math.isfinite(m):
            raise ValueError("flow step produced a degenerate field")
        return out * math.sqrt(self.a / m)


def flow_step(u: GridFunction, model, dt: float, a: float | None = None) -> GridFunction:
    """One constrained descent step; the returned field has mass a exactly."""
    if a is None:
        a = grids.mass(u)
    ws = _Workspace(u.grid, model, dt, a)
    return u.with_values(ws.step(u.values.copy()))


def gaussian_start(grid: RadialGrid, width: float, a: float) -> GridFunction:
    vals = np.exp(-grid.r**2 / (2.0 * width * width))
    m = float(grid.w @ (vals * vals))
    return GridFunction(grid, vals * math.sqrt(a / m))


def _start_widths(count: int, scale: float) -> list[float]:
    # 1, 2, 1/2, 4, 1/4, ... times the base scale
    out = []
    for i in range(count):
        k = (i + 1) // 2
        out.append(scale * (2.0**k if i % 2 == 1 else 2.0**-k))
    return out


@dataclass
class _StartOutcome:
    values: np.ndarray
    J: float
    lam: float
    residual: float
    converged: bool
    reason: str | None
    iterations: int
    trace: list
    warnings: list


def _run_start(ws: _Workspace, v: np.ndarray, config: SolverConfig) -> _StartOutcome:
    J = ws.energy_J(v)
    trace = [(0, J)]
    stalled_iters = 0
    res_best = math.inf
    violations = 0
    warnings = []
    converged = False
    reason = None
    lam = ws.multiplier(v)
    res = math.inf
    it = 0
    J_best = J
    for it in range(1, config.max_iters + 1):
        v = ws.step(v)
        J_new = ws.energy_J(v)
        trace.append((it, J_new))
        if not math.isfinite(J_new):
            reason = "diverged"
            warnings.append(f"energy became non-finite at iteration {it}")
            break
        # transient O(dt^2) wiggles are normal; sustained excursions above
        # the best energy seen mean the step size is unstable here
        if J_new > J_best + 1e-6 * (1.0 + abs(J_best)):
            violations += 1
            if violations > 25:
                reason = "descent-violation"
                warnings.append(
                    f"energy rose {J_new - J_best:.3e} above its running "
                    f"minimum at iteration {it}; aborted (reduce dt)"
                )
                J = J_new
                break
        J = J_new
        J_best = min(J_best, J_new)
        if config.stop_energy_below is not None and J < config.stop_energy_below:
            reason = "energy-floor"
            break
        if it % config.residual_check_every == 0:
            lam = ws.multiplier(v)
            res = ws.residual(v, lam)
            if res <= config.tol_grad:
                converged = True
                break
            # stall = the residual has stopped improving: no 0.1% gain on
            # the best value seen over a stall_window stretch of iterations
            if res < (1.0 - 1e-3) * res_best:
                stalled_iters = 0
            else:
                stalled_iters += config.residual_check_every
            res_best = min(res_best, res)
            if stalled_iters >= config.stall_window:
                reason = "stall"
                break
    else:
        reason = "max-iters"
    if not converged:
        lam = ws.multiplier(v)
        res = ws.residual(v, lam)
        if res <= config.tol_grad:
            converged = True
            reason = None
    return _StartOutcome(
        values=v, J=J, lam=lam, residual=res, converged=converged,
        reason=reason, iterations=it, trace=trace, warnings=warnings,
    )


def minimize(a: float, model, grid: RadialGrid, config: SolverConfig | None = None,
             warm_start: GridFunction | None = None) -> GroundStateResult:
    """Best-of-starts constrained minimization of J at mass a.

    Initial profiles are mass-a Gaussians of staggered widths, optionally
    preceded by a caller-supplied warm start (rescaled to mass a). Never
    raises on non-convergence; inspect converged/reason on the result.
    """
    if not a > 0:
        raise ValueError(f"mass must be positive, got {a}")
    if config is None:
        config = SolverConfig()
    ws = _Workspace(grid, model, config.dt, a)
    starts: list[np.ndarray] = []
    if warm_start is not None:
        if warm_start.grid.n != grid.n or warm_start.grid.N != grid.N:
            raise ValueError("warm start lives on an incompatible grid")
        m = grids.mass(warm_start)
        if m <= 0:
            raise ValueError("warm start has zero mass")
        starts.append(warm_start.values * math.sqrt(a / m))
    for width in _start_widths(config.starts - len(starts), config.initial_width_scale):
        starts.append(gaussian_start(grid, width, a).values.copy())

    outcomes = [_run_start(ws, v.copy(), config) for v in starts]

    converged_idx = [i for i, o in enumerate(outcomes) if o.converged]
    if converged_idx:
        best = min(converged_idx, key=lambda i: outcomes[i].J)
    else:
        best = min(range(len(outcomes)), key=lambda i: outcomes[i].J)
    out = outcomes[best]
    u = GridFunction(grid, out.values)

    residuals = energy_mod.IdentityResiduals(
        nehari=energy_mod.nehari_residual(u, model, out.lam),
        pohozaev=energy_mod.pohozaev_residual(u, model),
        lagrange_lambda=out.lam,
    )

    all_J = [o.J for o in outcomes]
    disagreement = False
    if len(converged_idx) > 1:
        spread = [outcomes[i].J for i in converged_idx]
        disagreement = bool(max(spread) - min(spread) > 1e-6)

    warnings = list(out.warnings)
    if disagreement:
        warnings.append(
            "converged starts disagree beyond 1e-6; all basin energies reported"
        )
    peak = float(np.max(np.abs(out.values)))
    edge_zone = grid.r >= 0.95 * grid.R
    contact = False
    if peak > 0 and np.any(edge_zone):
        contact = float(np.max(np.abs(out.values[edge_zone]))) > BOUNDARY_REL_TOL * peak
        if contact:
            warnings.append(
                "profile has not decayed near the domain edge; consider a larger R"
            )

    converged = out.converged
    reason = out.reason
    if math.isfinite(model.potential.V_inf):
        from .curves import vanishing_diagnostic

        vd_frac = vanishing_diagnostic(u) / a
        if vd_frac < config.vanishing_fraction and out.J < -config.deadband:
            converged = False
            reason = "vanishing-suspected"
        elif (vd_frac < config.vanishing_fraction or contact) and out.J >= -config.deadband:
            converged = False
            reason = "no-minimizer-regime"

    return GroundStateResult(
        u=u,
        a=a,
        lam=out.lam,
        energy=out.J,
        residuals=residuals,
        energy_trace=out.trace,
        converged=converged,
        start_index=best,
        reason=None if converged else reason,
        iterations=out.iterations,
        residual_norm=out.residual,
        all_start_energies=all_J,
        start_disagreement=disagreement,
        warnings=warnings,
    )
