"""Command-line front end.

Subcommands: solve (one mass), scan (a curve of masses), threshold (sign
change of the curve), spectrum (infimum of the quadratic form), validate
(structural classification of a model file). Every run that writes files
also writes a manifest with content hashes; --verify replays a directory
against its manifest instead of recomputing from scratch.

Exit codes: 0 success/converged, 1 failure or partial result, 2 converged
to the spread no-minimizer regime, 3 vanishing suspected, 64 usage errors
including malformed model files.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .curves import (
    quadratic_form_infimum,
    read_curve_csv,
    scan,
    subadditivity_check,
    threshold_a0,
    write_curve_csv,
    write_subadditivity_csv,
)
from .energy import evaluate
from .errors import BracketError, ModelFormatError, StagnationError
from .flow import SolverConfig, minimize
from .grids import RadialGrid, load_profile, save_profile
from .models import classify_V, classify_g, load_model, make_model
from .utils import round_floats, sha256_file, write_json

DEFAULT_GRID = {"R": 20.0, "n": 2000}
MANIFEST_NAME = "manifest.json"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the documented usage exit code is 64
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(64)


def _env_grid_defaults() -> dict:
    spec = os.environ.get("NGS_DEFAULT_GRID", "")
    out = dict(DEFAULT_GRID)
    if not spec.strip():
        return out
    try:
        for part in spec.split(","):
            key, _, value = part.strip().partition("=")
            key = key.strip()
            if key == "R":
                out["R"] = float(value)
            elif key == "n":
                out["n"] = int(value)
            else:
                raise ValueError(f"unknown key {key!r}")
    except ValueError as exc:
        raise SystemExit(
            f"ngs: cannot parse NGS_DEFAULT_GRID={spec!r}: {exc} "
            f"(expected e.g. 'R=20,n=2000')"
        ) from exc
    return out


def _add_common(parser: argparse.ArgumentParser, *, needs_out: bool) -> None:
    parser.add_argument("--model", required=True, help="model JSON file")
    parser.add_argument("--grid-R", type=float, default=None, metavar="X",
                        help="domain radius (default from NGS_DEFAULT_GRID or 20)")
    parser.add_argument("--grid-n", type=int, default=None, metavar="K",
                        help="number of interior grid nodes (default 2000)")
    parser.add_argument("--dt", type=float, default=None, help="flow step size")
    parser.add_argument("--tol", type=float, default=None,
                        help="stationarity residual tolerance")
    parser.add_argument("--seed", type=int, default=0, help="run seed (recorded)")
    parser.add_argument("--max-iters", type=int, default=None,
                        help="iteration cap per start")
    parser.add_argument("--starts", type=int, default=None,
                        help="number of initial profiles")
    parser.add_argument("--out", required=needs_out, default=None, metavar="DIR",
                        help="output directory")
    parser.add_argument("--verify", action="store_true",
                        help="check an existing output directory against its "
                             "manifest instead of recomputing")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ngs", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"ngs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("solve",
                       help="minimize at one mass and write the profile")
    _add_common(p, needs_out=True)
    p.add_argument("--mass", type=float, required=True, help="constraint value a")

    p = sub.add_parser("scan",
                       help="energy curve over a mass grid")
    _add_common(p, needs_out=True)
    p.add_argument("--a-min", type=float, required=True)
    p.add_argument("--a-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True,
                   help="number of masses (at least 3)")
    p.add_argument("--parallel", action="store_true",
                   help="independent cold starts in worker processes "
                        "(disables warm starting)")

    p = sub.add_parser("threshold",
                       help="bisect for the mass where the curve turns negative")
    _add_common(p, needs_out=True)
    p.add_argument("--a-lo", type=float, default=1e-3)
    p.add_argument("--a-hi", type=float, default=8.0)

    p = sub.add_parser("spectrum",
                       help="infimum of the kinetic-plus-potential quadratic form")
    _add_common(p, needs_out=True)

    p = sub.add_parser("validate",
                       help="structural classification of a model file")
    _add_common(p, needs_out=False)
    return parser


def _grid_from_args(args, model) -> RadialGrid:
    env = _env_grid_defaults()
    R = args.grid_R if args.grid_R is not None else env["R"]
    n = args.grid_n if args.grid_n is not None else env["n"]
    return RadialGrid(N=model.N, R=R, n=n)


def _config_from_args(args) -> SolverConfig:
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.tol is not None:
        overrides["tol_grad"] = args.tol
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters
    if args.starts is not None:
        overrides["starts"] = args.starts
    overrides["seed"] = args.seed
    return SolverConfig(**overrides)


def _write_manifest(out_dir: Path, args, model, grid, config,
                    wall: float, extra: dict | None = None) -> None:
    outputs = {}
    for item in sorted(out_dir.iterdir()):
        if item.is_file() and item.name != MANIFEST_NAME:
            outputs[item.name] = sha256_file(item)
    payload = {
        "tool": f"ngs {__version__}",
        "command": sys.argv[1:],
        "subcommand": args.command,
        "model": model.to_dict(),
        "model_fingerprint": model.fingerprint(),
        "grid": grid.descriptor() if grid is not None else None,
        "config": dataclasses.asdict(config) if config is not None else None,
        "wall_seconds": round(wall, 3),
        "outputs": outputs,
    }
    if extra:
        payload.update(extra)
    write_json(out_dir / MANIFEST_NAME, payload)


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_solve(args, model) -> int:
    if not args.mass > 0:
        raise _Usage("mass must be positive")
    grid = _grid_from_args(args, model)
    config = _config_from_args(args)
    out_dir = _prepare_out(args)
    t0 = time.perf_counter()
    result = minimize(args.mass, model, grid, config)
    wall = time.perf_counter() - t0

    payload = result.to_dict()
    payload["model_fingerprint"] = model.fingerprint()
    payload["grid"] = grid.descriptor()
    write_json(out_dir / "result.json", payload)
    save_profile(result.u, out_dir / "profile.csv")
    with open(out_dir / "trace.csv", "w", newline="") as fh:
        fh.write("iter,J\n")
        for it, j in result.energy_trace:
            fh.write(f"{it},{j:.12g}\n")
    _write_manifest(out_dir, args, model, grid, config, wall,
                    extra={"mass": args.mass})

    tag = "converged" if result.converged else (result.reason or "not converged")
    print(f"a = {args.mass:.12g}: J = {result.energy:.12g}, "
          f"lambda = {result.lam:.12g}, residual = {result.residual_norm:.3g} "
          f"({tag}, {result.iterations} iterations)")
    for note in result.warnings:
        print(f"note: {note}")
    if result.converged:
        return 0
    if result.reason == "no-minimizer-regime":
        return 2
    if result.reason == "vanishing-suspected":
        return 3
    return 1


def _cmd_scan(args, model) -> int:
    if not (args.a_min < args.a_max):
        raise _Usage("--a-min must be below --a-max")
    if args.a_min <= 0:
        raise _Usage("masses must be positive")
    if args.steps < 3:
        raise _Usage("--steps must be at least 3")
    grid = _grid_from_args(args, model)
    config = _config_from_args(args)
    out_dir = _prepare_out(args)
    masses = np.linspace(args.a_min, args.a_max, args.steps)

    t0 = time.perf_counter()
    curve = scan(masses, model, grid, config, parallel=args.parallel)
    wall = time.perf_counter() - t0

    write_curve_csv(curve, out_dir / "curve.csv")
    report = subadditivity_check(curve)
    write_subadditivity_csv(report, out_dir / "subadditivity.csv")
    _write_gnuplot_script(out_dir / "curve.gp")
    _write_manifest(out_dir, args, model, grid, config, wall, extra={
        "masses": [round_floats(a) for a in masses.tolist()],
        "curve_fingerprint": curve.fingerprint(),
        "warm_start": curve.warm_start,
    })

    n_conv = sum(1 for pt in curve.points if pt.converged)
    energies = curve.energies()
    neg = energies < 0
    print(f"curve: {len(curve.points)} masses, {n_conv} converged")
    if neg.all():
        sign = "negative throughout"
    elif not neg.any():
        sign = "nonnegative throughout"
    else:
        first = curve.points[int(np.argmax(neg))].a
        sign = f"turns negative by a = {first:.6g}"
    print(f"sign: {sign}")
    mono = curve.monotone_violations(tol=1e-10)
    print(f"monotone nonincreasing: {'yes' if mono == 0 else f'no ({mono} increases)'}")
    print(f"subadditive: {'yes' if report.ok else f'NO ({len(report.violations)} violations)'} "
          f"({len(report.rows)} testable pairs, {report.strict_count} strictly negative gaps)")
    if curve.partial:
        failed = ", ".join(f"{a:.6g}" for a in curve.failed_masses)
        print(f"partial curve: no convergence at a = {failed}")
        return 1
    return 0


def _cmd_threshold(args, model) -> int:
    grid = _grid_from_args(args, model)
    config = _config_from_args(args)
    out_dir = _prepare_out(args)
    t0 = time.perf_counter()
    try:
        found = threshold_a0(model, grid, config, bracket=(args.a_lo, args.a_hi))
    except BracketError as exc:
        print(f"threshold failed: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - t0
    payload = found.to_dict()
    payload["model_fingerprint"] = model.fingerprint()
    payload["grid"] = grid.descriptor()
    write_json(out_dir / "threshold.json", payload)
    _write_manifest(out_dir, args, model, grid, config, wall)
    qualifier = "at or below" if found.below_lower_bracket else "within"
    print(f"a0 = {found.a0:.6g} ({qualifier} the bracket, half-width "
          f"{found.half_width:.3g}, {len(found.evaluations)} evaluations)")
    return 0


def _cmd_spectrum(args, model) -> int:
    grid = _grid_from_args(args, model)
    out_dir = _prepare_out(args)
    t0 = time.perf_counter()
    try:
        value = quadratic_form_infimum(model, grid)
    except (StagnationError, ValueError) as exc:
        print(f"spectrum failed: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - t0
    payload = {
        "infimum": value,
        "potential_lower_bound": model.potential.c_ell,
        "model_fingerprint": model.fingerprint(),
        "grid": grid.descriptor(),
    }
    write_json(out_dir / "spectrum.json", payload)
    _write_manifest(out_dir, args, model, grid, None, wall)
    print(f"quadratic form infimum = {value:.12g} "
          f"(potential lower bound {model.potential.c_ell:.12g})")
    return 0


def _classification_payload(model, grid) -> dict:
    gc = classify_g(model.nonlinearity, model.N)
    vc = classify_V(model.potential, grid)
    return {
        "model_fingerprint": model.fingerprint(),
        "N": model.N,
        "nonlinearity": gc.to_dict(),
        "potential": vc.to_dict(),
    }


def _cmd_validate(args, model) -> int:
    grid = _grid_from_args(args, model)
    payload = _classification_payload(model, grid)
    if args.out:
        out_dir = _prepare_out(args)
        t0 = time.perf_counter()
        write_json(out_dir / "classification.json", payload)
        _write_manifest(out_dir, args, model, grid, None, time.perf_counter() - t0)
    text = json.dumps(round_floats(payload), indent=2, sort_keys=True)
    print(text)
    return 0


def _write_gnuplot_script(path: Path) -> None:
    path.write_text(
        "# gnuplot script for the energy curve in curve.csv\n"
        "set datafile separator ','\n"
        "set xlabel 'a'\n"
        "set ylabel 'C_a'\n"
        "set grid\n"
        "set key left bottom\n"
        "plot 'curve.csv' every ::1 using 1:2 with linespoints title 'C_a', \\\n"
        "     0 with lines dashtype 2 notitle\n"
    )


class _Usage(Exception):
    pass


def _verify_dir(args) -> int:
    """Check outputs in --out against the manifest, then spot-recompute."""
    out_dir = Path(args.out) if args.out else None
    if out_dir is None:
        print("ngs: --verify needs --out pointing at a previous run",
              file=sys.stderr)
        return 64
    manifest_path = out_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        print(f"verification failed: no {MANIFEST_NAME} in {out_dir}",
              file=sys.stderr)
        return 1
    with open(manifest_path) as fh:
        manifest = json.load(fh)

    failures = []
    for name, recorded in manifest.get("outputs", {}).items():
        item = out_dir / name
        if not item.is_file():
            failures.append(f"missing output file {name}")
            continue
        actual = sha256_file(item)
        if actual != recorded:
            failures.append(f"hash mismatch for {name}")
    listed = set(manifest.get("outputs", {}))
    for item in sorted(out_dir.iterdir()):
        if item.is_file() and item.name != MANIFEST_NAME and item.name not in listed:
            failures.append(f"unlisted file {item.name}")

    if not failures:
        failures.extend(_verify_semantics(out_dir, manifest))

    if failures:
        for f in failures:
            print(f"verification failed: {f}", file=sys.stderr)
        return 1
    print(f"verification OK: {len(manifest.get('outputs', {}))} files match "
          f"({manifest.get('subcommand')} run)")
    return 0


def _manifest_model(manifest):
    d = manifest["model"]
    return make_model(N=d["N"], nonlinearity=d["nonlinearity"],
                      potential=d["potential"])


def _manifest_grid(manifest) -> RadialGrid:
    g = manifest["grid"]
    return RadialGrid(N=int(g["N"]), R=float(g["R"]), n=int(g["n"]))


def _verify_semantics(out_dir: Path, manifest: dict) -> list:
    sub = manifest.get("subcommand")
    failures: list[str] = []
    if sub == "solve":
        model = _manifest_model(manifest)
        with open(out_dir / "result.json") as fh:
            stored = json.load(fh)
        u = load_profile(out_dir / "profile.csv")
        j = evaluate(u, model).J
        tol = max(1e-8, 1e-8 * abs(stored["C_a_estimate"]))
        if abs(j - stored["C_a_estimate"]) > tol:
            failures.append(
                f"stored profile evaluates to J = {j:.12g}, result.json says "
                f"{stored['C_a_estimate']:.12g}"
            )
    elif sub == "scan":
        model = _manifest_model(manifest)
        grid = _manifest_grid(manifest)
        config = SolverConfig(**manifest["config"])
        points = read_curve_csv(out_dir / "curve.csv")
        usable = [pt for pt in points if pt.converged]
        picks = []
        if usable:
            picks = sorted({0, len(usable) // 2, len(usable) - 1})
        for idx in picks:
            pt = usable[idx]
            res = minimize(pt.a, model, grid, config)
            tol = max(1e-7, 1e-5 * abs(pt.energy))
            if abs(res.energy - pt.energy) > tol:
                failures.append(
                    f"spot check at a = {pt.a:.6g}: recomputed C = "
                    f"{res.energy:.12g} vs stored {pt.energy:.12g}"
                )
    elif sub == "threshold":
        with open(out_dir / "threshold.json") as fh:
            stored = json.load(fh)
        failures.extend(_replay_threshold(stored))
    elif sub == "spectrum":
        model = _manifest_model(manifest)
        grid = _manifest_grid(manifest)
        with open(out_dir / "spectrum.json") as fh:
            stored = json.load(fh)
        value = quadratic_form_infimum(model, grid)
        if abs(value - stored["infimum"]) > max(1e-9, 1e-9 * abs(value)):
            failures.append(
                f"recomputed infimum {value:.12g} vs stored "
                f"{stored['infimum']:.12g}"
            )
    elif sub == "validate":
        model = _manifest_model(manifest)
        grid = _manifest_grid(manifest)
        with open(out_dir / "classification.json") as fh:
            stored = json.load(fh)
        fresh = round_floats(_classification_payload(model, grid))
        if fresh != stored:
            failures.append("classification no longer matches the stored report")
    return failures


def _replay_threshold(stored: dict) -> list:
    """Re-run the bisection decisions from the recorded probe energies."""
    deadband = stored["deadband"]
    evals = {e["a"]: e["J"] for e in stored["evaluations"]}
    a_lo, a_hi = stored["bracket"]
    if stored.get("below_lower_bracket"):
        ok = evals.get(a_lo, 0.0) < -deadband
        return [] if ok else ["below-bracket flag contradicts recorded energies"]
    lo, hi = a_lo, a_hi
    used = {a_lo, a_hi}
    while True:
        mid = 0.5 * (lo + hi)
        match = [a for a in evals if math.isclose(a, mid, rel_tol=1e-9)]
        if not match:
            break
        used.add(match[0])
        if evals[match[0]] < -deadband:
            hi = mid
        else:
            lo = mid
    a0 = 0.5 * (lo + hi)
    out = []
    if not math.isclose(a0, stored["a0"], rel_tol=1e-9, abs_tol=1e-12):
        out.append(f"bisection replay gives a0 = {a0:.12g}, stored {stored['a0']:.12g}")
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.verify:
        return _verify_dir(args)
    try:
        model = load_model(args.model)
    except ModelFormatError as exc:
        print(f"ngs: bad model file: {exc}", file=sys.stderr)
        return 64
    handler = {
        "solve": _cmd_solve,
        "scan": _cmd_scan,
        "threshold": _cmd_threshold,
        "spectrum": _cmd_spectrum,
        "validate": _cmd_validate,
    }[args.command]
    try:
        return handler(args, model)
    except _Usage as exc:
        print(f"ngs: {exc}", file=sys.stderr)
        return 64
    except ValueError as exc:
        print(f"ngs: {exc}", file=sys.stderr)
        return 64


if __name__ == "__main__":
    sys.exit(main())
