"""Energy functionals, stationarity identities, fiber and dilation maps.

Conventions: the full energy of a field u is
    J[u] = (1/2)|grad u|^2 + (1/2) int V u^2 - int G(u),
its potential-free part is I[u] = (1/2)|grad u|^2 - int G(u), and a
constrained critical point with multiplier lam solves
    -Lap u + (V + lam) u = g(u).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from . import grids
from .errors import BracketError, SupportOverflowError
from .grids import GridFunction

# admissible range for the fiber-map parameter t
FIBER_T_MIN = 1e-2
FIBER_T_MAX = 1e2


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float          # (1/2) |grad u|_2^2
    potential_term: float   # (1/2) int V u^2
    nonlinear_term: float   # int G(u)
    J: float
    I: float
    mass: float

    def to_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "potential_term": self.potential_term,
            "nonlinear_term": self.nonlinear_term,
            "J": self.J,
            "I": self.I,
            "mass": self.mass,
        }


@dataclass(frozen=True)
class IdentityResiduals:
    nehari: float
    pohozaev: float
    lagrange_lambda: float

    def to_dict(self) -> dict:
        return {
            "nehari": self.nehari,
            "pohozaev": self.pohozaev,
            "lambda": self.lagrange_lambda,
        }


def evaluate(u: GridFunction, model) -> EnergyReport:
    """All functional values of u under the given model."""
    if np.isnan(u.values).any():
        raise ValueError("field contains NaN")
    g = u.grid
    usq = u.values * u.values
    kin = 0.5 * grids.kinetic(u)
    nonlin = grids.integrate(g, model.nonlinearity.G(u.values))
    if model.potential.is_zero():
        pot = 0.0
    else:
        pot = 0.5 * grids.integrate(g, model.potential.V(g.r) * usq)
    I = kin - nonlin
    return EnergyReport(
        kinetic=kin,
        potential_term=pot,
        nonlinear_term=nonlin,
        J=I + pot,
        I=I,
        mass=float(g.w @ usq),
    )


def lagrange_multiplier(u: GridFunction, model) -> float:
    """The multiplier solving <u, -Lap u> + int (V + lam) u^2 = int g(u) u.

    Uses the quadratic form of the discrete operator (not the edge-sum
    gradient norm) so the returned value is exactly the least-squares
    minimizer of the stationarity residual over lam.
    """
    m = grids.mass(u)
    if m <= 0.0:
        raise ValueError("multiplier needs a field with positive mass")
    g = u.grid
    quad = grids.laplacian_quadratic_form(u)
    gu = grids.integrate(g, model.nonlinearity.g_times_s(u.values))
    if model.potential.is_zero():
        vterm = 0.0
    else:
        vterm = grids.integrate(g, model.potential.V(g.r) * u.values**2)
    return (gu - quad - vterm) / m


def euler_lagrange_residual(u: GridFunction, model, lam: float) -> float:
    """Weighted L2 norm of -Lap u + (V + lam) u - g(u), relative to ||u||."""
    m = grids.mass(u)
    if m <= 0.0:
        raise ValueError("residual needs a field with positive mass")
    g = u.grid
    res = grids.laplacian_apply(u).values + lam * u.values
    if not model.potential.is_zero():
        res = res + model.potential.V(g.r) * u.values
    res = res - model.nonlinearity.g(u.values)
    return float(np.sqrt((g.w @ (res * res)) / m))


def nehari_residual(u: GridFunction, model, lam: float) -> float:
    """Signed defect of <u, -Lap u> + int (V + lam) u^2 - int g(u) u."""
    g = u.grid
    quad = grids.laplacian_quadratic_form(u)
    gu = grids.integrate(g, model.nonlinearity.g_times_s(u.values))
    vterm = 0.0
    if not model.potential.is_zero():
        vterm = grids.integrate(g, model.potential.V(g.r) * u.values**2)
    return quad + vterm + lam * grids.mass(u) - gu


def pohozaev_residual(u: GridFunction, model) -> float:
    """Signed defect of the multiplier-free stationarity identity.

    P(u) = |grad u|^2 - (1/2) int <grad V, x> u^2 + N int [G(u) - g(u)u/2].
    Computed with the edge-sum gradient norm, which makes P(u) exactly the
    t-derivative of the discrete fiber energy at t = 1.
    """
    g = u.grid
    N = g.N
    usq = u.values * u.values
    val = grids.kinetic(u)
    if not model.potential.is_zero():
        val -= 0.5 * grids.integrate(g, model.potential.dV_dot_x(g.r) * usq)
    gv = model.nonlinearity.G(u.values) - 0.5 * model.nonlinearity.g_times_s(u.values)
    val += N * grids.integrate(g, gv)
    return val


def identity_residuals(u: GridFunction, model, lam: float | None = None) -> IdentityResiduals:
    if lam is None:
        lam = lagrange_multiplier(u, model)
    return IdentityResiduals(
        nehari=nehari_residual(u, model, lam),
        pohozaev=pohozaev_residual(u, model),
        lagrange_lambda=lam,
    )


# --- fiber map u_t(x) = t^(N/2) u(tx) and mass-multiplying dilation ---


def _check_t(t: float, t_min: float, t_max: float):
    if not (t_min <= t <= t_max):
        raise ValueError(f"fiber parameter {t} outside [{t_min}, {t_max}]")


def _even_spline(u: GridFunction) -> CubicSpline:
    # knots augmented with the even-reflection origin value and the hard
    # zero at R; clamped to zero slope at the origin
    g = u.grid
    x = np.concatenate(([0.0], g.r, [g.R]))
    y = np.concatenate(([(4.0 * u.values[0] - u.values[1]) / 3.0], u.values, [0.0]))
    return CubicSpline(x, y, bc_type=((1, 0.0), (2, 0.0)))


def fiber_energy(u: GridFunction, t: float, model,
                 t_min: float = FIBER_T_MIN, t_max: float = FIBER_T_MAX) -> float:
    """J[u_t] evaluated analytically in t on the original grid."""
    _check_t(t, t_min, t_max)
    return _fiber_energy_cached(u, t, model, grids.kinetic(u))


def _fiber_energy_cached(u, t, model, kin) -> float:
    g = u.grid
    N = g.N
    val = 0.5 * t * t * kin
    if not model.potential.is_zero():
        usq = u.values * u.values
        val += 0.5 * grids.integrate(g, model.potential.V(g.r / t) * usq)
    scaled = t ** (0.5 * N) * u.values
    val -= t ** (-N) * grids.integrate(g, model.nonlinearity.G(scaled))
    return val


def fiber_energy_derivative(u: GridFunction, t: float, model,
                            t_min: float = FIBER_T_MIN, t_max: float = FIBER_T_MAX) -> float:
    """Exact t-derivative of the discrete fiber energy."""
    _check_t(t, t_min, t_max)
    g = u.grid
    N = g.N
    val = t * grids.kinetic(u)
    usq = u.values * u.values
    if not model.potential.is_zero():
        val -= grids.integrate(g, model.potential.dV_dot_x(g.r / t) * usq) / (2.0 * t)
    scaled = t ** (0.5 * N) * u.values
    gv = model.nonlinearity.G(scaled) - 0.5 * model.nonlinearity.g_times_s(scaled)
    val += N * t ** (-N - 1.0) * grids.integrate(g, gv)
    return val


def fiber_map(u: GridFunction, t: float,
              t_min: float = FIBER_T_MIN, t_max: float = FIBER_T_MAX) -> GridFunction:
    """Resample t^(N/2) u(t r) onto the grid of u, then restore the mass.

    The analytic map preserves mass; cubic resampling does not quite, so the
    result is renormalized to the exact discrete mass of u.
    """
    _check_t(t, t_min, t_max)
    g = u.grid
    spline = _even_spline(u)
    arg = t * g.r
    vals = t ** (0.5 * g.N) * np.where(arg <= g.R, spline(np.minimum(arg, g.R)), 0.0)
    out = GridFunction(g, vals)
    m_new = grids.mass(out)
    if m_new <= 0.0:
        raise ValueError("fiber map produced a vanishing field")
    return out.with_values(out.values * np.sqrt(grids.mass(u) / m_new))


def fiber_minimize(u: GridFunction, model,
                   t_lo: float = FIBER_T_MIN, t_hi: float = FIBER_T_MAX,
                   samples: int = 41) -> tuple[float, float]:
    """Locate the interior minimum of t -> J[u_t].

    Scans a log-spaced bracket (ties resolved toward smaller t), then
    refines with a bounded scalar minimizer. Raises BracketError when no
    interior minimum exists in the bracket, which is the discrete signature
    of the spreading limit dominating the energy.
    """
    if grids.mass(u) <= 0.0:
        raise ValueError("fiber minimization needs a nonzero field")
    kin = grids.kinetic(u)
    ts = np.geomspace(t_lo, t_hi, samples)
    js = np.array([_fiber_energy_cached(u, t, model, kin) for t in ts])
    i = int(np.argmin(js))
    if i == 0 or i == samples - 1:
        raise BracketError(
            "no interior fiber minimum in the bracket: the energy does not "
            "dip below its spreading limit for this field"
        )
    res = minimize_scalar(
        lambda t: _fiber_energy_cached(u, t, model, kin),
        bounds=(ts[i - 1], ts[i + 1]),
        method="bounded",
        options={"xatol": 1e-10},
    )
    t0 = float(res.x)
    return t0, float(res.fun)


def dilate(u: GridFunction, tau: float) -> GridFunction:
    """Mass-multiplying stretch u(r / tau^(1/N)); mass becomes tau * mass(u).

    Requires tau >= 1 and a profile that has decayed below 1e-8 at the
    radius that lands on the boundary after stretching.
    """
    if tau < 1.0:
        raise ValueError(f"dilation factor must be >= 1, got {tau}")
    g = u.grid
    if tau == 1.0:
        return u
    stretch = tau ** (1.0 / g.N)
    spline = _even_spline(u)
    edge = abs(float(spline(g.R / stretch)))
    if edge > 1e-8:
        raise SupportOverflowError(
            f"dilated support leaves the domain: |u| = {edge:.3g} at the "
            f"preimage of R"
        )
    out = GridFunction(g, spline(g.r / stretch))
    target = tau * grids.mass(u)
    m_new = grids.mass(out)
    if m_new <= 0.0:
        raise ValueError("dilation produced a vanishing field")
    return out.with_values(out.values * np.sqrt(target / m_new))
