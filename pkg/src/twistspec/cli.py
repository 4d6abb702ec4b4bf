"""Command line front end: ``twistspec <subcommand> --config FILE``.

Exit codes: 0 success, 1 solver non-convergence (or a failed oracle check),
2 configuration error, 3 theorem hypothesis violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import certify, geometry as geo, mesh, oracle
from .config import load_config
from .errors import ConfigError, EmptyGrid, HypothesisViolation, TwistspecError
from .tube import DIRICHLET, LongitudinalGrid, assemble_tube, eigs_tube
from .xsection import assemble_xsection, build_grid, eigs_xsection, richardson

log = logging.getLogger("twistspec")


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _pool_map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------- #
# xsection
# --------------------------------------------------------------------------- #


def _xsection_point(args):
    omega, beta, h, k, tol, max_iter, seed, extrapolate, order = args
    spec = eigs_xsection(assemble_xsection(build_grid(omega, h), beta), k, tol, seed, max_iter)
    extrap = math.nan
    converged = spec.converged.all()
    if extrapolate:
        try:
            coarse = eigs_xsection(assemble_xsection(build_grid(omega, 2 * h), beta), 1, tol, seed, max_iter)
            extrap = richardson(coarse.lowest, spec.lowest, order)
            converged = converged and coarse.converged.all()
        except EmptyGrid:
            pass
    return list(spec.eigenvalues), list(spec.residuals), extrap, bool(converged)


def cmd_xsection(cfg, seed, out, jobs):
    omega = cfg.cross_section
    h = cfg.require("grid", "h")
    k = cfg.get("solver", "k", 1)
    tol = cfg.get("solver", "tol", 1e-8)
    max_iter = cfg.get("solver", "max_iter", 5000)
    betas = cfg.get("xsection", "beta", [0.0])
    extrapolate = cfg.get("xsection", "richardson", True)
    order = cfg.get("xsection", "order", 1.0)
    items = [(omega, b, h, k, tol, max_iter, seed, extrapolate, order) for b in betas]
    results = _pool_map(_xsection_point, items, jobs)
    header = (["beta"] + [f"lambda_{i}" for i in range(1, k + 1)] + [f"residual_{i}" for i in range(1, k + 1)]
              + ["h", "lambda_1_extrapolated"])
    rows = [[b] + vals + res + [h, ex] for b, (vals, res, ex, _) in zip(betas, results)]
    path = Path(out) / "xsection.csv"
    write_csv(path, header, rows)
    log.info("wrote %s", path)
    return 0 if all(r[3] for r in results) else 1


# --------------------------------------------------------------------------- #
# spectrum
# --------------------------------------------------------------------------- #


def _spectrum_point(args):
    omega, profile, h, h1, L, end, k, tol, max_iter, seed = args
    lgrid = LongitudinalGrid.from_spacing(L, h1, end)
    op = assemble_tube(build_grid(omega, h), lgrid, profile)
    res = eigs_tube(op, k, tol=tol, seed=seed, max_iter=max_iter)
    return list(res.eigenvalues), list(res.residuals), res.all_converged


def cmd_spectrum(cfg, seed, out, jobs):
    omega, profile = cfg.cross_section, cfg.profile
    h, h1 = cfg.require("grid", "h"), cfg.require("grid", "h1")
    lengths = cfg.require("grid", "L")
    ends = cfg.get("grid", "ends", [DIRICHLET])
    k = cfg.get("solver", "k", 1)
    tol = cfg.get("solver", "tol", 1e-8)
    max_iter = cfg.get("solver", "max_iter", 5000)
    items = [(omega, profile, h, h1, L, end, k, tol, max_iter, seed) for L in lengths for end in ends]
    results = _pool_map(_spectrum_point, items, jobs)
    header = (["L", "end"] + [f"lambda_{i}" for i in range(1, k + 1)]
              + [f"residual_{i}" for i in range(1, k + 1)])
    rows = [[it[4], it[5]] + vals + res for it, (vals, res, _) in zip(items, results)]
    path = Path(out) / "spectrum.csv"
    write_csv(path, header, rows)
    log.info("wrote %s", path)
    return 0 if all(r[2] for r in results) else 1


# --------------------------------------------------------------------------- #
# certify
# --------------------------------------------------------------------------- #


def _refusal(exc):
    return {"refused": type(exc).__name__, "reason": str(exc)}


def cmd_certify(cfg, seed, out, jobs):
    omega, profile = cfg.cross_section, cfg.profile
    summ = geo.summary(omega)
    report = {
        "cross_section": repr(omega),
        "profile": repr(profile),
        "geometry": asdict(summ),
    }
    code = 0
    try:
        report["thm1_window"] = asdict(certify.thm1_window(summ))
    except HypothesisViolation as exc:
        report["thm1_window"] = _refusal(exc)

    ns = cfg.get("certify", "n", [1])
    density = cfg.get("certify", "density", 10.0)
    bounds = []
    try:
        for n in ns:
            bounds.append(certify.essential_lower_bound(omega, profile, n, density=density))
        report["essential_bounds"] = [b.to_dict() for b in bounds]
    except HypothesisViolation as exc:
        report["essential_bounds"] = _refusal(exc)
        code = exc.exit_code

    if bounds and "L" in cfg.values.get("grid", {}):
        bn = cfg.get("certify", "bracket_n", ns[0])
        cert = next((b for b in bounds if b.n == bn), None)
        L = max(cfg.require("grid", "L"))
        br = certify.bracket_eigenvalues(
            omega, profile, cfg.require("grid", "h"), cfg.require("grid", "h1"), L, bn,
            cfg.get("certify", "K", cfg.get("solver", "k", 1)), tol=cfg.get("solver", "tol", 1e-8),
            seed=seed, density=density, certificate=cert,
        )
        report["brackets"] = br.to_dict()
        if not br.converged:
            code = code or 1

    path = Path(out) / "certify.json"
    path.write_text(json.dumps(_jsonable(report), indent=2) + "\n")
    log.info("wrote %s", path)
    return code


# --------------------------------------------------------------------------- #
# geometry
# --------------------------------------------------------------------------- #


def cmd_geometry(cfg, seed, out, jobs):
    omega, profile = cfg.cross_section, cfg.profile
    x_range = cfg.get("geometry", "x_range", [-4.0, 4.0])
    if len(x_range) != 2 or not x_range[1] > x_range[0]:
        raise ConfigError("[geometry] x_range needs two increasing values")
    slices = cfg.get("geometry", "slices", 64)
    samples = cfg.get("geometry", "boundary_samples", 48)
    points, tris = mesh.tube_surface(omega, profile, x_range, slices, samples)
    vtk_path = Path(out) / "tube.vtk"
    mesh.write_vtk(vtk_path, points, tris)

    stations = cfg.get("geometry", "stations", [4.0, 8.0, 16.0, 32.0])
    density = cfg.get("geometry", "density", 10.0)
    probe = geo.quasibounded_probe(omega, profile, stations, density=density)
    probe_path = Path(out) / "probe.csv"
    write_csv(probe_path, ["x1", "distance_upper_bound"], zip(stations, probe))
    log.info("wrote %s and %s", vtk_path, probe_path)
    return 0


# --------------------------------------------------------------------------- #
# oracle
# --------------------------------------------------------------------------- #


def cmd_oracle(cfg, seed, out, jobs):
    rows = oracle.run_bundle(
        tol=cfg.get("oracle", "tol", 1e-8),
        cap=cfg.get("oracle", "cap", oracle.DENSE_CAP),
        inject_asymmetry=cfg.get("oracle", "inject_asymmetry", False),
        seed=seed,
    )
    path = Path(out) / "oracle.csv"
    write_csv(path, ["operator", "module", "order", "max_abs_diff", "tolerance", "status", "detail"],
              [[r.ident, r.module, r.order, r.max_diff, r.tolerance, r.status, r.detail] for r in rows])
    for r in rows:
        log.info("%-32s %s", r.ident, r.status)
    return 0 if all(r.status == "PASS" for r in rows) else 1


COMMANDS = {
    "xsection": cmd_xsection,
    "spectrum": cmd_spectrum,
    "certify": cmd_certify,
    "geometry": cmd_geometry,
    "oracle": cmd_oracle,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="twistspec", description="Spectral laboratory for twisted tubes.")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment configuration file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.subcommand](cfg, args.seed, args.out, max(1, args.jobs))
    except TwistspecError as exc:
        print(f"twistspec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
