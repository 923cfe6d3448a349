"""Model definitions: power-sum nonlinearities, radial potentials, classifiers.

A model couples a nonlinearity g with a radial potential V in dimension N.
Nonlinearities are finite sums g(s) = sum_i coef_i |s|^sigma_i s with exact
antiderivative G(s) = sum_i coef_i |s|^(sigma_i+2)/(sigma_i+2); limits needed
by the hypothesis classifiers are decidable for this family, which is why
general continuous g is not supported.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModelFormatError
from .grids import RadialGrid

# relative tolerance for declaring a tabulated potential settled at its tail
TAIL_TOL = 1e-3

# mass in the outer-10% window above which the decay flag is withheld
DVX_DECAY_TOL = 1e-6


@dataclass(frozen=True)
class NonlinearityModel:
    """g(s) = sum coef_i |s|^sigma_i s, or identically zero."""

    kind: str
    terms: tuple[tuple[float, float], ...]
    N: int

    def __post_init__(self):
        if self.kind not in ("power_sum", "zero"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.N not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2, or 3, got {self.N}")
        if self.kind == "zero":
            if self.terms:
                raise ValueError("zero nonlinearity cannot carry terms")
            return
        if not self.terms:
            raise ValueError("power_sum needs at least one term")
        for coef, sigma in self.terms:
            if not coef > 0:
                raise ValueError(f"coefficients must be positive, got {coef}")
            if not sigma > 0:
                raise ValueError(f"exponents must be positive, got {sigma}")
            if self.N >= 3 and sigma >= 4.0 / (self.N - 2):
                raise ValueError(
                    f"exponent {sigma} reaches the energy-critical rate "
                    f"{4.0 / (self.N - 2):g} in dimension {self.N}"
                )

    def g(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for coef, sigma in self.terms:
            out += coef * np.abs(s) ** sigma * s
        return out

    def G(self, s):
        """Exact antiderivative of g with G(0) = 0."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for coef, sigma in self.terms:
            out += coef * np.abs(s) ** (sigma + 2.0) / (sigma + 2.0)
        return out

    def g_times_s(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for coef, sigma in self.terms:
            out += coef * np.abs(s) ** (sigma + 2.0)
        return out

    def is_zero(self) -> bool:
        return self.kind == "zero" or not self.terms

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "terms": [{"coef": c, "sigma": s} for c, s in self.terms],
        }


_POTENTIAL_KINDS = ("zero", "harmonic", "gaussian_well", "power_coercive", "tabulated")


@dataclass(frozen=True)
class PotentialModel:
    """Radial potential with its analytic radial-derivative data.

    dV_dot_x(r) is the value of <grad V(x), x> at |x| = r, i.e. r V'(r).
    V_inf is the limit (or sup) at infinity, math.inf for coercive kinds.
    c_ell is the global minimum value.
    """

    kind: str
    params: tuple[float, ...]
    table_r: tuple[float, ...] = ()
    table_v: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "harmonic":
            k = self.params[0] if self.params else 1.0
            if not k > 0:
                raise ValueError("harmonic strength must be positive")
            object.__setattr__(self, "params", (float(k),))
        elif self.kind == "gaussian_well":
            if not self.params:
                raise ValueError("gaussian_well needs a depth parameter")
            depth = float(self.params[0])
            width = float(self.params[1]) if len(self.params) > 1 else 1.0
            if not depth > 0 or not width > 0:
                raise ValueError("gaussian_well depth and width must be positive")
            object.__setattr__(self, "params", (depth, width))
        elif self.kind == "power_coercive":
            if len(self.params) < 2:
                raise ValueError("power_coercive needs (strength, exponent)")
            c, k = float(self.params[0]), float(self.params[1])
            if not c > 0 or not k >= 1:
                raise ValueError("need strength > 0 and exponent >= 1")
            object.__setattr__(self, "params", (c, k))
        elif self.kind == "tabulated":
            if len(self.table_r) < 8:
                raise ValueError(
                    f"tabulated potential needs at least 8 samples, got {len(self.table_r)}"
                )
            rr = np.asarray(self.table_r)
            if rr[0] != 0.0:
                raise ValueError("tabulated radii must start at 0")
            if np.any(np.diff(rr) <= 0):
                raise ValueError("tabulated radii must be strictly increasing")
            object.__setattr__(self, "params", ())
        else:
            object.__setattr__(self, "params", ())

    # --- evaluation ---

    def V(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "harmonic":
            return self.params[0] * r * r
        if self.kind == "gaussian_well":
            d, w = self.params
            return -d * np.exp(-((r / w) ** 2))
        if self.kind == "power_coercive":
            c, k = self.params
            return c * r**k
        return np.interp(r, self.table_r, self.table_v)

    def dV_dot_x(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "harmonic":
            return 2.0 * self.params[0] * r * r
        if self.kind == "gaussian_well":
            d, w = self.params
            return (2.0 * d / w**2) * r * r * np.exp(-((r / w) ** 2))
        if self.kind == "power_coercive":
            c, k = self.params
            return c * k * r**k
        # one-sided differences: the slope of the table segment containing r
        rr = np.asarray(self.table_r)
        vv = np.asarray(self.table_v)
        slopes = np.diff(vv) / np.diff(rr)
        idx = np.clip(np.searchsorted(rr, r, side="right") - 1, 0, len(slopes) - 1)
        return r * slopes[idx]

    # --- summary data ---

    @property
    def coercive(self) -> bool:
        return self.kind in ("harmonic", "power_coercive")

    @property
    def V_inf(self) -> float:
        if self.coercive:
            return math.inf
        if self.kind in ("zero", "gaussian_well"):
            return 0.0
        tail = self._tail_window()
        return float(np.mean(tail))

    @property
    def c_ell(self) -> float:
        if self.kind in ("zero", "harmonic", "power_coercive"):
            return 0.0
        if self.kind == "gaussian_well":
            return -self.params[0]
        return float(np.min(self.table_v))

    def _tail_window(self):
        k = max(1, len(self.table_v) // 10)
        return np.asarray(self.table_v[-k:])

    def tail_settled(self) -> bool:
        """Whether the declared limit at infinity is trustworthy."""
        if self.kind != "tabulated":
            return True
        tail = self._tail_window()
        spread = float(np.max(tail) - np.min(tail))
        return spread <= TAIL_TOL * max(1.0, abs(self.V_inf))

    def is_zero(self) -> bool:
        return self.kind == "zero"

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": list(self.params)}
        if self.kind == "tabulated":
            out["table"] = {"r": list(self.table_r), "V": list(self.table_v)}
        return out

    @classmethod
    def zero(cls) -> "PotentialModel":
        return cls(kind="zero", params=())


@dataclass(frozen=True)
class Model:
    """Dimension, nonlinearity, and potential bundled with a content hash."""

    N: int
    nonlinearity: NonlinearityModel
    potential: PotentialModel

    def __post_init__(self):
        if self.N != self.nonlinearity.N:
            raise ValueError("nonlinearity dimension disagrees with model dimension")

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "nonlinearity": self.nonlinearity.to_dict(),
            "potential": self.potential.to_dict(),
        }

    def fingerprint(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_zero_potential(self) -> "Model":
        """Same nonlinearity with V forced to zero (reference energy curve)."""
        return Model(N=self.N, nonlinearity=self.nonlinearity,
                     potential=PotentialModel.zero())


def make_model(N: int, nonlinearity: dict, potential: dict, base_dir=None) -> Model:
    terms = tuple(
        (float(t["coef"]), float(t["sigma"])) for t in nonlinearity.get("terms", [])
    )
    nl = NonlinearityModel(kind=nonlinearity["kind"], terms=terms, N=N)
    kind = potential["kind"]
    if kind == "tabulated":
        if "table" in potential and isinstance(potential["table"], dict):
            tr = tuple(float(x) for x in potential["table"]["r"])
            tv = tuple(float(x) for x in potential["table"]["V"])
        elif "table" in potential:
            table_path = Path(potential["table"])
            if base_dir is not None and not table_path.is_absolute():
                table_path = Path(base_dir) / table_path
            tr, tv = _read_potential_csv(table_path)
        else:
            raise ModelFormatError("tabulated potential needs a 'table' entry")
        pot = PotentialModel(kind=kind, params=(), table_r=tr, table_v=tv)
    else:
        pot = PotentialModel(
            kind=kind, params=tuple(float(x) for x in potential.get("params", []))
        )
    return Model(N=N, nonlinearity=nl, potential=pot)


def _read_potential_csv(path) -> tuple[tuple, tuple]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header[:2]] != ["r", "V"]:
            raise ModelFormatError(
                f"potential table must have header 'r,V', got {header!r}"
            )
        for row in reader:
            if not row:
                continue
            rows.append((float(row[0]), float(row[1])))
    return tuple(r for r, _ in rows), tuple(v for _, v in rows)


def load_model(path) -> Model:
    """Parse a model file; malformed JSON reports line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"malformed model JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    try:
        return make_model(
            N=int(data["N"]),
            nonlinearity=data["nonlinearity"],
            potential=data["potential"],
            base_dir=path.parent,
        )
    except KeyError as exc:
        raise ModelFormatError(f"model file missing required key {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"invalid model data: {exc}") from exc


# --- hypothesis classifiers ---


@dataclass(frozen=True)
class GClassification:
    """Growth-hypothesis flags for a nonlinearity in dimension N.

    g1: valid construction (odd, continuous, vanishing at 0)
    g2: superlinear at the origin (g(s)/s -> 0), true for positive exponents
    g3: strictly mass-subcritical growth at infinity (every sigma < 4/N)
    g4: sign condition (nonempty sum, all coefficients positive)
    g5: Ambrosetti-Rabinowitz-type lower bound g(s)s >= alpha G(s) with the
        reported alpha = 2 + min sigma (the largest exponent that works for
        the whole sum)
    small_s_regime: behavior of g(s)/s^(1+4/N) as s -> 0; "superfast" when
        the ratio blows up (min sigma < 4/N), "finite_limsup" otherwise
    """

    g1: bool
    g2: bool
    g3: bool
    g4: bool
    g5: bool
    alpha: float | None
    small_s_regime: str

    def to_dict(self) -> dict:
        return {
            "G1": self.g1,
            "G2": self.g2,
            "G3": self.g3,
            "G4": self.g4,
            "G5": self.g5,
            "alpha": self.alpha,
            "small_s_regime": self.small_s_regime,
        }


def classify_g(model: NonlinearityModel, N: int) -> GClassification:
    if N not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2, or 3, got {N}")
    if model.is_zero():
        return GClassification(
            g1=True, g2=True, g3=True, g4=False, g5=False,
            alpha=None, small_s_regime="indeterminate",
        )
    sigmas = [s for _, s in model.terms]
    if not sigmas:
        raise ValueError("cannot classify an empty term list")
    if min(sigmas) <= 0:
        raise ValueError("exponents must be positive")
    crit = 4.0 / N
    sigma_min = min(sigmas)
    g3 = max(sigmas) < crit
    regime = "superfast" if sigma_min < crit else "finite_limsup"
    return GClassification(
        g1=True,
        g2=True,
        g3=g3,
        g4=all(c > 0 for c, _ in model.terms),
        g5=True,
        alpha=2.0 + sigma_min,
        small_s_regime=regime,
    )


@dataclass(frozen=True)
class VClassification:
    """Potential-hypothesis flags, sampled on a grid.

    v1: the value at infinity is well defined (settled tail for tables) and
        bounds the sampled potential from above
    v2: the minimum is attained at the origin and matches c_ell
    decay_of_dVx: <grad V, x> is negligible on the outer 10% of the grid
    """

    v1: bool
    v2: bool
    decay_of_dVx: bool
    coercive: bool

    def to_dict(self) -> dict:
        return {
            "V1": self.v1,
            "V2": self.v2,
            "decay_of_dVx": self.decay_of_dVx,
            "coercive": self.coercive,
        }


def classify_V(model: PotentialModel, grid: RadialGrid,
               dvx_tol: float = DVX_DECAY_TOL) -> VClassification:
    vals = model.V(grid.r)
    v_inf = model.V_inf
    c_ell = model.c_ell
    scale = max(1.0, abs(c_ell))
    upper_ok = True if math.isinf(v_inf) else bool(
        np.all(vals <= v_inf + TAIL_TOL * max(1.0, abs(v_inf)))
    )
    v1 = model.tail_settled() and upper_ok
    v0 = float(model.V(0.0))
    v2 = bool(np.all(vals >= c_ell - 1e-12 * scale)) and abs(v0 - c_ell) <= 1e-9 * scale
    outer = grid.r >= 0.9 * grid.R
    decay = bool(np.max(np.abs(model.dV_dot_x(grid.r[outer]))) < dvx_tol)
    return VClassification(
        v1=v1, v2=v2, decay_of_dVx=decay, coercive=model.coercive
    )
