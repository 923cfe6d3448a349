"""Shared builders for the test suite."""
from pathlib import Path

import numpy as np

from ngs.energy import evaluate
from ngs.grids import GridFunction, RadialGrid
from ngs.models import Model, make_model

MODELS_DIR = Path(__file__).resolve().parents[1] / "models"

ZERO_G = {"kind": "zero", "params": []}
ZERO_V = {"kind": "zero", "params": []}


def power_g(*terms) -> dict:
    return {
        "kind": "power_sum",
        "terms": [{"coef": float(c), "sigma": float(s)} for c, s in terms],
    }


def harmonic_v(k: float = 1.0) -> dict:
    return {"kind": "harmonic", "params": [k]}


def well_v(depth: float = 1.0, width: float = 1.0) -> dict:
    return {"kind": "gaussian_well", "params": [depth, width]}


def free_power(N: int, sigma: float, coef: float = 1.0) -> Model:
    return make_model(N, power_g((coef, sigma)), ZERO_V)


def bumps(grid: RadialGrid, rng: np.random.Generator,
          n_bumps: int | None = None, r_span: float = 3.0) -> GridFunction:
    """Random smooth even field: mirrored gaussian bumps, decayed well inside R."""
    if n_bumps is None:
        n_bumps = int(rng.integers(1, 4))
    vals = np.zeros_like(grid.r)
    for _ in range(n_bumps):
        c = rng.uniform(0.0, r_span)
        w = rng.uniform(0.6, 2.0)
        amp = rng.uniform(0.3, 1.0)
        vals += amp * (np.exp(-(((grid.r - c) / w) ** 2))
                       + np.exp(-(((grid.r + c) / w) ** 2)))
    return GridFunction(grid, vals)


def crank_negative(u: GridFunction, model: Model,
                   rng: np.random.Generator | None = None) -> GridFunction:
    """Scale the amplitude until the energy is strictly negative.

    Superquadratic G guarantees J(s u) -> -inf as s grows, so doubling
    terminates. An optional extra factor randomizes how deep past the sign
    change the returned field sits.
    """
    s = 1.0
    for _ in range(60):
        if evaluate(u.with_values(s * u.values), model).J < -1e-6:
            break
        s *= 1.3
    else:
        raise AssertionError("could not reach negative energy by scaling")
    if rng is not None:
        s *= rng.uniform(1.0, 1.5)
    return u.with_values(s * u.values)


# acceptance summary lines, printed by the conftest terminal hook
ACCEPTANCE_LINES: list[str] = []


def record(num: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {num} [{'PASS' if ok else 'FAIL'}] {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
