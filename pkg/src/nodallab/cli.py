"""Command-line interface: ``nodallab <subcommand> ...``.

Exit codes: 0 success, 1 input error, 2 numerical check failure (with ``--strict``).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from .exceptions import NodalLabError
from .exponents import exponent_table, format_table
from .fitting import fit_power_law
from .geometry import GridSpec, grid_for_wavelength, make_domain
from .growth import growth_beta, positivity_bound_record
from .harmonic import (harmonic_growth, iteration_experiment, make_harmonic, mean_value_check,
                       positive_fraction, random_harmonic)
from .modes import EigenMode, enumerate_eigenvalues, make_mode, make_random_wave, sample
from .nodal import extract_nodal_set, pack_nodal_balls, write_mesh_csv, write_mesh_gnuplot
from .norms import (dong_identity, grad_sup_ratio, holder_chain_check, l1_lower_check, lp_norm,
                    sogge_ratio)
from .sweep import emit_report, load_config, read_csv_points, run_sweep

EXIT_INPUT, EXIT_CHECK = 1, 2


class CheckFailed(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int, default=None, help="grid samples per axis")
    p.add_argument("--out", default=None, help="output file or directory")
    p.add_argument("--format", default=None, help="csv, json, gnuplot or text")
    p.add_argument("--strict", action="store_true", help="exit 2 when a numerical check fails")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _mode_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", default="torus", choices=["torus", "box", "box-dirichlet"])
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--sides", type=float, nargs="+", default=None)
    p.add_argument("--k", type=int, nargs="+", default=None, help="frequency vector")
    p.add_argument("--phase", default=None, help="'sin', 'cos' or a comma list per axis")
    p.add_argument("--lam", type=float, default=None, help="random wave with this eigenvalue")
    p.add_argument("--mode-json", default=None, help="mode descriptor file")
    p.add_argument("--samples-per-wavelength", type=float, default=32)


def _build_mode(args) -> EigenMode:
    if args.mode_json:
        return EigenMode.from_json(Path(args.mode_json).read_text())
    domain = make_domain(args.kind, args.dim, args.sides)
    if args.lam is not None:
        return make_random_wave(domain, args.lam, args.seed)
    if args.k is None:
        raise NodalLabError("give --k, --lam or --mode-json")
    phase = args.phase
    if phase is not None and "," in phase:
        phase = tuple(s.strip() for s in phase.split(","))
    return make_mode(domain, args.k, phase)


def _grid(args, mode: EigenMode) -> GridSpec:
    if args.resolution:
        return GridSpec(mode.domain, args.resolution)
    return grid_for_wavelength(mode.domain, max(mode.lam, 1.0), args.samples_per_wavelength)


def _emit(args, payload, rows: list[dict] | None = None) -> None:
    fmt = args.format or "json"
    if fmt == "csv" and rows is not None:
        text = _csv_text(rows)
    elif fmt == "text":
        text = "\n".join(f"{k}: {v}" for k, v in payload.items())
    else:
        text = json.dumps(payload, indent=1, default=str)
    if args.out:
        Path(args.out).write_text(text + ("" if text.endswith("\n") else "\n"))
    else:
        print(text)


def _csv_text(rows: list[dict]) -> str:
    import io

    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


# -- subcommands ----------------------------------------------------------------
def cmd_modes(args) -> None:
    domain = make_domain(args.kind, args.dim, args.sides)
    entries = enumerate_eigenvalues(domain, args.lambda_max)
    rows = [{"lambda": e.lam, "multiplicity": e.multiplicity,
             "vectors": " ".join("(" + ",".join(map(str, v)) + ")" for v in e.vectors)}
            for e in entries]
    _emit(args, {"domain": domain.to_dict(), "eigenvalues": rows}, rows)


def cmd_field(args) -> None:
    mode = _build_mode(args)
    grid = _grid(args, mode)
    field = sample(mode, grid)
    if (args.format or "json") == "csv":
        pts = grid.all_points()
        rows = [{**{f"x{i}": repr(float(p[i])) for i in range(grid.n)}, "value": repr(float(v))}
                for p, v in zip(pts, field.flat)]
        _emit(args, {}, rows)
    else:
        _emit(args, {"mode": mode.to_dict(), "resolution": grid.resolution,
                     "l2_norm": mode.l2_norm, "max_abs": field.max_abs})


def cmd_nodal(args) -> None:
    mode = _build_mode(args)
    grid = _grid(args, mode)
    mesh = extract_nodal_set(sample(mode, grid))
    fmt = args.format or "json"
    if args.out and fmt in ("csv", "gnuplot"):
        (write_mesh_csv if fmt == "csv" else write_mesh_gnuplot)(mesh, args.out)
    payload = {"lambda": mode.lam, "resolution": grid.resolution, "cells": len(mesh),
               "total_measure": mesh.total_measure}
    if not (args.out and fmt in ("csv", "gnuplot")):
        _emit(args, payload)
    else:
        print(json.dumps(payload))


def cmd_growth(args) -> None:
    mode = _build_mode(args).normalized()
    grid = _grid(args, mode)
    field = sample(mode, grid)
    pack = pack_nodal_balls(field, mode.lam, args.radius_coeff)
    rows = []
    for ball in pack.balls:
        g = growth_beta(field, ball, mode=mode)
        row = {**{f"c{i}": c for i, c in enumerate(ball.center)}, "radius": ball.radius,
               "beta": g.beta, "sup_full": g.sup_full, "sup_half": g.sup_half,
               "vanishing": g.vanishing, "ratio_pos": None, "ratio_neg": None,
               "product_pos": None}
        if g.vanishing:
            rec = positivity_bound_record(field, ball, growth=g)
            row.update(ratio_pos=rec.ratio_pos, ratio_neg=rec.ratio_neg, product_pos=rec.product_pos)
        rows.append(row)
    betas = [r["beta"] for r in rows]
    prods = [r["product_pos"] for r in rows if r["product_pos"] is not None]
    _emit(args, {"lambda": mode.lam, "ball_count": pack.count,
                 "max_beta": max(betas, default=None),
                 "df_ratio": max(betas) / math.sqrt(mode.lam) if betas else None,
                 "min_product_pos": min(prods, default=None)}, rows)


def cmd_dong(args) -> None:
    mode = _build_mode(args)
    grid = _grid(args, mode)
    rep = dong_identity(mode, extract_nodal_set(sample(mode, grid)), grid)
    _emit(args, {"lambda": mode.lam, "resolution": grid.resolution, "lhs": rep.lhs,
                 "rhs": rep.rhs, "rel_err": rep.rel_err, "tolerance": args.tol})
    if args.strict and rep.rel_err > args.tol:
        raise CheckFailed(f"Dong rel_err {rep.rel_err:.3g} above {args.tol}")


def cmd_norms(args) -> None:
    mode = _build_mode(args)
    grid = _grid(args, mode)
    field = sample(mode, grid)
    payload: dict = {"lambda": mode.lam, "resolution": grid.resolution, "norms": {}, "holder": {}}
    for p in args.p:
        payload["norms"][str(p)] = lp_norm(mode if math.isinf(p) else field, p, grid).norm
    failed = []
    for p in args.p:
        if 2 < p < math.inf:
            h = holder_chain_check(field, p)
            payload["holder"][str(p)] = {"lhs": h.lhs, "rhs": h.rhs, "pass": h.passed}
            if not h.passed:
                failed.append(p)
    if mode.lam > 0:
        payload["sogge_ratio"] = {str(p): sogge_ratio(mode, p, grid) for p in args.p if p >= 2}
        l1 = l1_lower_check(mode, grid)
        payload["l1_check"] = {"l1": l1.l1, "floor": l1.floor, "ratio": l1.ratio}
        payload["grad_ratio"] = grad_sup_ratio(mode, grid)
    _emit(args, payload)
    if args.strict and failed:
        raise CheckFailed(f"Hoelder chain failed at p={failed}")


def cmd_exponents(args) -> None:
    ns = [args.n] if args.n is not None else list(range(2, 7))
    tables = [exponent_table(n) for n in ns]
    fmt = args.format or "text"
    if fmt == "text":
        text = "\n\n".join(f"n = {t.n}\n{format_table(t)}" for t in tables)
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
    else:
        rows = [{**t.as_strings(), **{f"chain_{k}": v for k, v in t.chain_identities().items()}}
                for t in tables]
        _emit(args, {"tables": rows}, rows)
    if args.strict and not all(all(t.chain_identities().values()) for t in tables):
        raise CheckFailed("exponent chain identity failed")


def cmd_harmonic(args) -> None:
    if args.terms:
        desc = []
        for entry in args.terms:
            d, c, i = entry.split(":")
            desc.append((int(d), float(c), int(i)))
        u = make_harmonic(desc, args.dim)
    else:
        u = random_harmonic(args.dim, args.k_max, args.seed, args.scale)
    payload: dict = {"n": u.n, "terms": [list(t) for t in u.terms], "u0": u.value_at_zero,
                     "positive_fraction": positive_fraction(u)}
    try:
        payload["beta"] = harmonic_growth(u)
    except NodalLabError as exc:
        payload["beta"] = None
        payload["beta_error"] = str(exc)
    failed = False
    if u.value_at_zero > 0:
        mv = mean_value_check(u)
        payload["mean_value"] = {"vol_pos": mv.vol_pos, "sup": mv.sup, "bound": mv.bound,
                                 "pass": mv.passed}
        failed = not mv.passed
        it = iteration_experiment(u, args.depth)
        payload["iteration"] = {"best_bound": it.best_bound, "resolved": it.resolved,
                                "beta": it.beta, "log_M": it.log_m,
                                "vol_pos_fraction": it.vol_pos_fraction,
                                "product_beta_n_minus_1": it.product_beta_n_minus_1,
                                "product_beta_n": it.product_beta_n, "levels": it.levels}
    _emit(args, payload)
    if args.strict and failed:
        raise CheckFailed("mean-value check failed")


def cmd_sweep(args) -> None:
    config = load_config(args.config)
    report = run_sweep(config)
    out = args.out or config.output_dir or "."
    formats = ["csv", "json", "gnuplot"] if (args.format or "csv") == "all" else [args.format or "csv"]
    paths = [str(emit_report(report, f, out)) for f in formats if f != "gnuplot" or report.rows]
    print(json.dumps({"rows": len(report.rows), "files": paths, "fits": report.fits}, indent=1))


def cmd_fit(args) -> None:
    pts = read_csv_points(args.csv, args.quantity, args.x)
    fit = fit_power_law(pts)
    _emit(args, {"quantity": args.quantity, "points": len(pts), "slope": fit.slope,
                 "intercept": fit.intercept, "r2": fit.r2})


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="nodallab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", parents=[common], help="enumerate eigenvalues")
    p.add_argument("--kind", default="torus", choices=["torus", "box", "box-dirichlet"])
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--sides", type=float, nargs="+", default=None)
    p.add_argument("--lambda-max", type=float, default=10)
    p.set_defaults(func=cmd_modes)

    for name, func, text in [("field", cmd_field, "sample and export a mode"),
                             ("nodal", cmd_nodal, "extract and measure the nodal set"),
                             ("growth", cmd_growth, "growth over packed nodal balls"),
                             ("dong", cmd_dong, "nodal gradient identity"),
                             ("norms", cmd_norms, "L^p norms and bound checks")]:
        p = sub.add_parser(name, parents=[common], help=text)
        _mode_args(p)
        p.set_defaults(func=func)
        if name == "growth":
            p.add_argument("--radius-coeff", type=float, default=1.0)
        if name == "dong":
            p.add_argument("--tol", type=float, default=0.01)
        if name == "norms":
            p.add_argument("--p", type=float, nargs="+", default=[1, 2, 6, math.inf])

    p = sub.add_parser("exponents", parents=[common], help="print exponent tables")
    p.add_argument("n", type=int, nargs="?", default=None)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("harmonic", parents=[common], help="harmonic sandbox experiments")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--terms", nargs="+", default=None, help="degree:coef:index entries")
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--depth", type=int, default=6)
    p.set_defaults(func=cmd_harmonic)

    p = sub.add_parser("sweep", parents=[common], help="run a lambda sweep from a JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", parents=[common], help="power-law fit of a CSV column")
    p.add_argument("csv")
    p.add_argument("--quantity", default="nodal_measure")
    p.add_argument("--x", default="lambda")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (NodalLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
