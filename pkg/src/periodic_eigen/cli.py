"""Command-line interface.

    periodic-eigen <subcommand> --config problem.cfg [options]

Subcommands: eigen, ode, elliptic, hj, constants, levelset, sweep,
persistence, verify.  Exit codes: 0 ok, 1 verification failure, 2 config
error, 3 solver error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, elliptic, floquet_ode, hj, levelsets, parabolic, verify
from .coefficients import limit_constants, validate
from .config import load_config
from .errors import ConfigError, PeriodicEigenError
from .grids import integrate_time
from .output import emit_csv, emit_svg_curves, emit_svg_heatmap

SUBCOMMANDS = ("eigen", "ode", "elliptic", "hj", "constants", "levelset",
               "sweep", "persistence", "verify")


@dataclass
class RunRecord:
    subcommand: str
    config_hash: str
    version: str
    ops: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def add(self, name, status, seconds, **extra):
        self.ops.append({"name": name, "status": status,
                         "seconds": round(seconds, 3), **extra})

    def write(self, outdir):
        path = os.path.join(outdir, "record.json")
        os.makedirs(outdir, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"subcommand": self.subcommand,
                       "config_hash": self.config_hash,
                       "version": self.version,
                       "ops": self.ops, "files": self.files},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def build_parser():
    ap = argparse.ArgumentParser(
        prog="periodic-eigen",
        description="Principal eigenvalues of time-periodic cooperative "
                    "parabolic systems: solvers, limit constants, ergodic "
                    "constants, level sets.")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "verify"),
                       help="problem configuration file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="parallel solves in sweeps (cold starts)")
        p.add_argument("--omega", type=str, default=None,
                       help="comma list overriding [sweep] omega")
        p.add_argument("--rho", type=str, default=None,
                       help="comma list overriding [sweep] rho")
        p.add_argument("--theta", type=str, default=None,
                       help="comma list overriding [sweep] theta")
        p.add_argument("--level", type=str, default=None,
                       help="comma list overriding [levelset] levels")
        p.add_argument("--tol", type=float, default=None,
                       help="override solver tolerance")
    return ap


def _values(flag, fallback):
    if flag is None:
        return tuple(fallback)
    return tuple(float(x) for x in flag.split(",") if x.strip())


def _require(vals, what):
    if not vals:
        raise ConfigError([f"{what} required (flag or [sweep] section)"])
    return vals


def run_eigen(cfg, args, outdir, record):
    A, D = cfg.field(), cfg.diffusion()
    grid, tgrid = cfg.grids()
    omegas = _require(_values(args.omega, cfg.omegas), "--omega")
    rhos = _require(_values(args.rho, cfg.rhos), "--rho")
    rows = []
    for om in omegas:
        for rho in rhos:
            t0 = time.time()
            res = parabolic.principal_eigenvalue(
                A, D, grid, tgrid, om, rho, tol=args.tol or cfg.solve["tol"])
            res = parabolic.adjoint_eigenpair(res, A, D)
            record.add(f"eigen({om:g},{rho:g})", res.status, time.time() - t0,
                       iterations=res.iterations, method=res.method)
            rows.append((om, rho, res.lam, res.log_multiplier, res.iterations,
                         res.periodicity_defect, res.pairing, res.status))
    record.files.append(emit_csv(
        os.path.join(outdir, "eigen.csv"),
        ["omega", "rho", "lambda", "log_multiplier", "iterations",
         "periodicity_defect", "pairing", "status"], rows))


def run_ode(cfg, args, outdir, record):
    A = cfg.field()
    grid, tgrid = cfg.grids()
    omegas = _require(_values(args.omega, cfg.omegas), "--omega")
    steps = cfg.solve["ode_steps"]
    rows = []
    for om in omegas:
        t0 = time.time()
        hu, argmin, h_all = floquet_ode.h_under(A, om, grid, steps=steps)
        hb = floquet_ode.h_bar(A, om, grid, tgrid, steps=steps)
        record.add(f"ode({om:g})", "ok", time.time() - t0)
        rows.append((om, hu, hb, len(argmin)))
        prof = [(grid.nodes[j], h_all[j]) for j in range(grid.N)]
        record.files.append(emit_csv(
            os.path.join(outdir, f"ode_profile_{om:g}.csv"),
            ["x", "h"], prof))
    record.files.append(emit_csv(
        os.path.join(outdir, "ode.csv"),
        ["omega", "h_under", "h_bar", "argmin_count"], rows))


def run_elliptic(cfg, args, outdir, record):
    A, D = cfg.field(), cfg.diffusion()
    grid, tgrid = cfg.grids()
    rhos = _require(_values(args.rho, cfg.rhos), "--rho")
    rows = []
    for rho in rhos:
        t0 = time.time()
        lb = elliptic.lambda_bar(A, rho, D, grid, tgrid)
        series = elliptic.lambda0_series(A, rho, D, grid, tgrid)
        lu = float(integrate_time(series))
        record.add(f"elliptic({rho:g})", "ok", time.time() - t0)
        rows.append((rho, lb.lam, lu))
        record.files.append(emit_csv(
            os.path.join(outdir, f"elliptic_lambda0_{rho:g}.csv"),
            ["t", "lambda0"],
            [(tgrid.times[m], series[m]) for m in range(tgrid.M + 1)]))
    record.files.append(emit_csv(
        os.path.join(outdir, "elliptic.csv"),
        ["rho", "lambda_bar", "lambda_under"], rows))


def run_hj(cfg, args, outdir, record):
    A, D = cfg.field(), cfg.diffusion()
    grid, tgrid = cfg.grids()
    thetas = _require(_values(args.theta, cfg.thetas), "--theta")
    c = limit_constants(A, grid, tgrid)
    lattice = hj.HamiltonianLattice(A, D, grid, hj.gradient_bound(c, D),
                                    m_time=min(tgrid.M, 128))
    # the smallest theta needs the widest gradient window; reusing its
    # dissipation coefficient keeps the bias uniform across the table
    rows = []
    alpha = None
    for th in sorted(thetas):
        t0 = time.time()
        res = hj.critical_value(th, A, D, grid, tgrid,
                                lattice=lattice, constants=c,
                                alpha_override=alpha)
        if alpha is None and res.flag != "regime-formula":
            alpha = res.alpha
        record.add(f"hj({th:g})", res.flag, time.time() - t0,
                   periods=res.periods)
        rows.append((th, res.C, res.flag, res.periods, res.alpha, res.dt))
    rows.sort(key=lambda r: r[0])
    record.files.append(emit_csv(
        os.path.join(outdir, "hj.csv"),
        ["theta", "C", "flag", "periods", "alpha", "dt"], rows))


def run_constants(cfg, args, outdir, record):
    A = cfg.field()
    grid, tgrid = cfg.grids()
    t0 = time.time()
    rep = validate(A, grid, tgrid)
    if not rep.ok:
        raise PeriodicEigenError(f"field invalid: {rep.violations}")
    c = limit_constants(A, grid, tgrid)
    record.add("constants", "ok", time.time() - t0, ordered=c.ordered())
    record.files.append(emit_csv(
        os.path.join(outdir, "constants.csv"),
        ["C_under", "C_star", "C_star_plus", "C_under_plus", "C_bar"],
        [(c.c_under, c.c_star, c.c_star_plus, c.c_under_plus, c.c_bar)]))


def run_levelset(cfg, args, outdir, record):
    A, D = cfg.field(), cfg.diffusion()
    grid, tgrid = cfg.grids()
    levels = _require(_values(args.level, cfg.levels), "--level")
    solver = levelsets.LevelSetSolver(A, D, grid, tgrid)
    curves = []
    for k, ell in enumerate(levels):
        t0 = time.time()
        curve = solver.trace_level_set(ell)
        record.add(f"levelset({ell:g})", "ok", time.time() - t0,
                   type=curve.type_tag,
                   summary=_curve_summary(curve))
        rows = [(s.rho, s.omega, s.lam_check) for s in curve.samples]
        record.files.append(emit_csv(
            os.path.join(outdir, f"levelset_{k}.csv"),
            ["rho", "omega", "lambda_check"], rows))
        curves.append((f"l={ell:g} ({curve.type_tag})",
                       [s.rho for s in curve.samples],
                       [s.omega for s in curve.samples]))
    record.files.append(emit_svg_curves(
        os.path.join(outdir, "levelset.svg"), curves,
        title="level sets of the principal eigenvalue"))


def _curve_summary(curve):
    return {"ell": curve.ell, "type": curve.type_tag,
            "rho_ell": curve.rho_ell, "rho_under_ell": curve.rho_under_ell,
            "asymptotes": _jsonable(curve.asymptotes),
            "sqrt_fit": _jsonable(curve.sqrt_fit),
            "ns_residual": curve.ns_residual}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    return obj


def run_sweep(cfg, args, outdir, record):
    A, D = cfg.field(), cfg.diffusion()
    grid, tgrid = cfg.grids()
    omegas = _require(_values(args.omega, cfg.omegas), "--omega")
    rhos = _require(_values(args.rho, cfg.rhos), "--rho")
    pairs = [(om, rho) for om in omegas for rho in rhos]

    def solve(pair):
        om, rho = pair
        res = parabolic.principal_eigenvalue(A, D, grid, tgrid, om, rho,
                                             tol=args.tol or cfg.solve["tol"])
        return pair, res.lam, res.status

    t0 = time.time()
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(solve, pairs))
    else:
        results = [solve(p) for p in pairs]
    results.sort(key=lambda r: (r[0][0], r[0][1]))
    record.add(f"sweep {len(pairs)} points", "ok", time.time() - t0)
    rows = [(om, rho, lam, status) for (om, rho), lam, status in results]
    record.files.append(emit_csv(
        os.path.join(outdir, "sweep.csv"),
        ["omega", "rho", "lambda", "status"], rows))
    lam_grid = np.array([r[2] for r in rows]).reshape(len(omegas), len(rhos))
    record.files.append(emit_svg_heatmap(
        os.path.join(outdir, "sweep.svg"), sorted(rhos), sorted(omegas),
        lam_grid[np.argsort(omegas)][:, np.argsort(rhos)],
        title="principal eigenvalue over the (ρ, ω) plane"))


def run_persistence(cfg, args, outdir, record):
    if cfg.kind != "mutation":
        raise ConfigError(["persistence requires kind = mutation with [rate.i] sections"])
    grid, tgrid = cfg.grids()
    t0 = time.time()
    report = levelsets.persistence_region(
        cfg.field(), cfg.rate_entries(), cfg.diffusion(), grid, tgrid)
    record.add("persistence", report.verdict, time.time() - t0,
               case=report.case_index,
               constants=report.constants.as_dict())
    if report.curve is not None:
        rows = [(s.rho, s.omega, s.lam_check) for s in report.curve.samples]
        record.files.append(emit_csv(
            os.path.join(outdir, "persistence_boundary.csv"),
            ["rho", "omega", "lambda_check"], rows))
        record.files.append(emit_svg_curves(
            os.path.join(outdir, "persistence.svg"),
            [("persistence boundary", [s.rho for s in report.curve.samples],
              [s.omega for s in report.curve.samples])],
            title="persistence region boundary (case %s)" % report.case_index))


def run_verify(cfg, args, outdir, record):
    results = verify.run_all(progress=print)
    for res in results:
        record.add(f"criterion {res.index}: {res.name}",
                   "ok" if res.passed else "fail", res.seconds,
                   details=res.details)
    failed = [r for r in results if not r.passed]
    rows = [(r.index, r.name, "pass" if r.passed else "fail", r.seconds)
            for r in results]
    record.files.append(emit_csv(
        os.path.join(outdir, "verify.csv"),
        ["criterion", "name", "status", "seconds"], rows))
    return 1 if failed else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    outdir = os.environ.get("PERIODIC_EIGEN_OUT", args.out)
    try:
        cfg = load_config(args.config) if args.config else None
    except ConfigError as exc:
        for diag in exc.diagnostics:
            print(f"config error: {diag}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    record = RunRecord(subcommand=args.subcommand,
                       config_hash=cfg.hash() if cfg else "fixtures",
                       version=__version__)
    runner = {"eigen": run_eigen, "ode": run_ode, "elliptic": run_elliptic,
              "hj": run_hj, "constants": run_constants,
              "levelset": run_levelset, "sweep": run_sweep,
              "persistence": run_persistence, "verify": run_verify}[args.subcommand]
    try:
        status = runner(cfg, args, outdir, record)
    except ConfigError as exc:
        for diag in exc.diagnostics:
            print(f"config error: {diag}", file=sys.stderr)
        return 2
    except PeriodicEigenError as exc:
        record.add("error", f"error({type(exc).__name__})", 0.0,
                   message=str(exc))
        record.write(outdir)
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    record.write(outdir)
    for line in (f"wrote {f}" for f in record.files):
        print(line)
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
