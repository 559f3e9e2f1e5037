"""Eigenvalue sweeps: per-mode measurements, power-law fits and report files.

CSV columns (one row per ``(lambda, seed)``, sorted by lambda then seed).
Norm and gradient columns refer to the L2-normalized mode; ``p*`` is the
kink exponent ``2(n+1)/(n-1)`` of the domain dimension.

==========================  =====================================================
``lambda``                  eigenvalue
``seed``                    random-wave seed (empty for catalog modes)
``resolution``              grid samples per axis
``nodal_measure``           (n-1)-measure of the nodal mesh
``ball_count``              greedy disjoint nodal balls, radius ``c/sqrt(lambda)``
``ball_volume_fraction``    total packed volume / domain volume
``vanishing_balls``         packed balls whose half ball sees a sign change
``max_beta``                largest growth over the packed balls
``df_ratio``                ``max_beta / sqrt(lambda)``
``min_product_pos``         min of ``vol+/vol(B) * max(beta, log 2)^(n-1)``
``min_product_neg``         same for the negative set
``min_isoperimetric``       min of ``nodal(B) / min(vol+, vol-)^((n-1)/n)``
``l1`` ``l2`` ``lp_kink``   L^1, L^2, L^p* norms
``linf``                    sup norm
``sogge_ratio_kink``        ``||phi||_p* / lambda^delta(p*)``
``l1_ratio``                ``||phi||_1 / lambda^(-(n-1)/8)``
``grad_sup`` ``grad_ratio`` ``sup|grad phi|`` and its ratio to ``lambda^((n+1)/4)``
``dong_lhs`` ``dong_rhs``   both sides of the nodal gradient identity
``dong_rel_err``            their relative difference
``error``                   reason the row was aborted (empty otherwise)
``mode``                    JSON mode descriptor
==========================  =====================================================
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import FitError, NodalLabError
from .exponents import exponent_table
from .fitting import fit_power_law
from .geometry import Domain, GridSpec, ball_volume, domain_from_dict, grid_for_wavelength
from .growth import growth_beta, positivity_bound_record
from .modes import EigenMode, Term, enumerate_eigenvalues, make_mode, make_random_wave, sample
from .nodal import (extract_nodal_set, isoperimetric_constant, nodal_measure_in_ball,
                    pack_nodal_balls)
from .norms import (dong_identity, grad_sup, l1_lower_check, lp_norm, sogge_delta, sogge_kink)

log = logging.getLogger(__name__)

COLUMNS = [
    "lambda", "seed", "resolution", "nodal_measure", "ball_count", "ball_volume_fraction",
    "vanishing_balls", "max_beta", "df_ratio", "min_product_pos", "min_product_neg",
    "min_isoperimetric", "l1", "l2", "lp_kink", "linf", "sogge_ratio_kink", "l1_ratio",
    "grad_sup", "grad_ratio", "dong_lhs", "dong_rhs", "dong_rel_err", "error", "mode",
]
DEFAULT_QUANTITIES = ["nodal_measure", "ball_count", "max_beta", "grad_sup", "l1",
                      "min_product_pos"]


@dataclass
class SweepConfig:
    domain: Domain
    lambda_list: list[float] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0])
    samples_per_wavelength: float = 32
    radius_coeff: float = 1.0
    quantities: list[str] = field(default_factory=lambda: list(DEFAULT_QUANTITIES))
    output_dir: str | None = None
    modes: list[dict] | None = None  # catalog modes instead of random waves
    resolution_cap: int = 1024

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        domain = domain_from_dict(d.get("domain", {}))
        lams = d.get("lambda_list")
        if lams is None and "lambda_max" in d:
            lams = [e.lam for e in enumerate_eigenvalues(domain, float(d["lambda_max"])) if e.lam > 0]
        return cls(
            domain=domain,
            lambda_list=[float(x) for x in (lams or [])],
            seeds=[int(s) for s in d.get("seeds", [0])],
            samples_per_wavelength=float(d.get("samples_per_wavelength", 32)),
            radius_coeff=float(d.get("radius_coeff", 1.0)),
            quantities=list(d.get("quantities", DEFAULT_QUANTITIES)),
            output_dir=d.get("output_dir"),
            modes=d.get("modes"),
            resolution_cap=int(d.get("resolution_cap", 1024)),
        )

    def to_dict(self) -> dict:
        d = {
            "domain": self.domain.to_dict(), "lambda_list": self.lambda_list, "seeds": self.seeds,
            "samples_per_wavelength": self.samples_per_wavelength,
            "radius_coeff": self.radius_coeff, "quantities": self.quantities,
            "output_dir": self.output_dir, "resolution_cap": self.resolution_cap,
        }
        if self.modes is not None:
            d["modes"] = self.modes
        return d


def load_config(path: str | Path) -> SweepConfig:
    with open(path) as fh:
        return SweepConfig.from_dict(json.load(fh))


@dataclass
class SweepReport:
    config: dict
    rows: list[dict]
    fits: list[dict]
    exponents: dict | None = None

    def to_dict(self) -> dict:
        return {"config": self.config, "exponents": self.exponents, "rows": self.rows,
                "fits": self.fits}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepReport":
        return cls(d["config"], d["rows"], d["fits"], d.get("exponents"))

    @classmethod
    def from_json(cls, s: str) -> "SweepReport":
        return cls.from_dict(json.loads(s))

    def fit(self, quantity: str) -> dict | None:
        return next((f for f in self.fits if f["quantity"] == quantity), None)

    def values(self, quantity: str, lam: float | None = None) -> list[float]:
        return [r[quantity] for r in self.rows if r.get(quantity) is not None
                and (lam is None or r["lambda"] == lam)]


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def measure_mode(mode: EigenMode, grid: GridSpec, radius_coeff: float = 1.0) -> dict:
    """All per-mode statistics of a sweep row (see module docstring)."""
    n = mode.n
    lam = mode.lam
    unit = mode.normalized()
    field_ = sample(unit, grid)
    row: dict = {"lambda": lam, "resolution": grid.resolution}

    p_star = float(sogge_kink(n)) if n >= 2 else 6.0
    row["l1"] = lp_norm(field_, 1).norm
    row["l2"] = lp_norm(field_, 2).norm
    row["lp_kink"] = lp_norm(field_, p_star).norm
    row["linf"] = lp_norm(unit, math.inf, grid).norm
    row["sogge_ratio_kink"] = row["lp_kink"] / (row["l2"] * lam ** float(sogge_delta(n, p_star)))
    row["l1_ratio"] = l1_lower_check(unit, grid).ratio
    row["grad_sup"] = grad_sup(unit, grid)
    row["grad_ratio"] = row["grad_sup"] / lam ** ((n + 1) / 4)

    if n in (2, 3):
        mesh = extract_nodal_set(field_)
        row["nodal_measure"] = mesh.total_measure
        if grid.domain.is_torus:
            dong = dong_identity(unit, mesh, grid)
            row.update(dong_lhs=dong.lhs, dong_rhs=dong.rhs, dong_rel_err=dong.rel_err)
        pack = pack_nodal_balls(field_, lam, radius_coeff, mesh)
        row["ball_count"] = pack.count
        row["ball_volume_fraction"] = pack.total_volume() / grid.domain.volume
        betas, prod_pos, prod_neg, iso = [], [], [], []
        vanishing = 0
        for ball in pack.balls:
            g = growth_beta(field_, ball, mode=unit)
            betas.append(g.beta)
            if not g.vanishing:
                continue
            vanishing += 1
            rec = positivity_bound_record(field_, ball, growth=g)
            prod_pos.append(rec.product_pos)
            prod_neg.append(rec.product_neg)
            vol = ball_volume(ball)
            vp, vn = rec.ratio_pos * vol, rec.ratio_neg * vol
            iso.append(isoperimetric_constant(vp, vn, nodal_measure_in_ball(mesh, ball), n))
        row["vanishing_balls"] = vanishing
        if betas:
            row["max_beta"] = max(betas)
            row["df_ratio"] = max(betas) / math.sqrt(lam)
        if prod_pos:
            row["min_product_pos"] = min(prod_pos)
            row["min_product_neg"] = min(prod_neg)
            row["min_isoperimetric"] = min(iso)
    return {k: (_finite(v) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()}


def _catalog_mode(domain: Domain, desc: dict) -> EigenMode:
    if "terms" in desc:
        terms = tuple(Term.from_dict(t) for t in desc["terms"])
        return EigenMode(domain, float(desc["lambda"]), terms)
    return make_mode(domain, desc["k"], desc.get("phase"), desc.get("amplitude", 1.0))


def _jobs(config: SweepConfig) -> list[tuple[float, int | None, dict | None]]:
    if config.modes is not None:
        return [(None, None, m) for m in config.modes]
    return [(lam, seed, None) for lam in config.lambda_list for seed in config.seeds]


def run_sweep(config: SweepConfig | dict) -> SweepReport:
    if isinstance(config, dict):
        config = SweepConfig.from_dict(config)
    rows = []
    for lam, seed, desc in _jobs(config):
        row: dict = {c: None for c in COLUMNS}
        row.update({"lambda": lam, "seed": seed})
        try:
            if desc is not None:
                mode = _catalog_mode(config.domain, desc)
            else:
                mode = make_random_wave(config.domain, lam, seed)
            row["lambda"] = mode.lam
            row["mode"] = mode.to_json()
            grid = grid_for_wavelength(config.domain, mode.lam, config.samples_per_wavelength,
                                       cap=config.resolution_cap)
            row.update(measure_mode(mode, grid, config.radius_coeff))
        except (NodalLabError, ValueError) as exc:
            log.warning("row lambda=%s seed=%s aborted: %s", lam, seed, exc)
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    rows.sort(key=lambda r: (r["lambda"] if r["lambda"] is not None else -1.0,
                             r["seed"] if r["seed"] is not None else -1))
    fits = fit_quantities(rows, config.quantities)
    n = config.domain.n
    exps = exponent_table(n).as_strings() if 2 <= n <= 8 else None
    return SweepReport(config.to_dict(), rows, fits, exps)


def fit_quantities(rows: list[dict], quantities: list[str]) -> list[dict]:
    """Power-law fit per quantity on per-lambda means of the valid rows."""
    fits = []
    for q in quantities:
        by_lam: dict[float, list[float]] = {}
        for r in rows:
            v = r.get(q)
            if r.get("error") or v is None or r.get("lambda") is None or not v > 0:
                continue
            by_lam.setdefault(r["lambda"], []).append(float(v))
        points = [(lam, float(np.mean(vs))) for lam, vs in sorted(by_lam.items())]
        try:
            fit = fit_power_law(points)
        except FitError as exc:
            log.info("no fit for %s: %s", q, exc)
            continue
        fits.append({"quantity": q, "slope": fit.slope, "intercept": fit.intercept,
                     "r2": fit.r2, "points": len(points)})
    return fits


# -- emission -----------------------------------------------------------------
def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in report.rows:
        w.writerow([_cell(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def report_gnuplot(report: SweepReport) -> str:
    numeric = [c for c in COLUMNS if c not in ("error", "mode")]
    lines = ["# " + " ".join(numeric)]
    rows = sorted((r for r in report.rows if r.get("lambda") is not None),
                  key=lambda r: (r["lambda"], r["seed"] if r["seed"] is not None else -1))
    for r in rows:
        lines.append(" ".join("NaN" if r.get(c) is None else _cell(r.get(c)) for c in numeric))
    return "\n".join(lines) + "\n"


def emit_report(report: SweepReport, fmt: str = "csv", out_dir: str | Path = ".",
                stem: str = "sweep") -> Path:
    """Write the report as ``csv``, ``json`` or ``gnuplot`` and return the path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path, text = out / f"{stem}.csv", report_csv(report)
    elif fmt == "json":
        path, text = out / f"{stem}.json", report.to_json()
    elif fmt == "gnuplot":
        if not report.rows:
            raise NodalLabError("cannot write gnuplot data for an empty report")
        path, text = out / f"{stem}.dat", report_gnuplot(report)
    else:
        raise NodalLabError(f"unknown format {fmt!r}")
    path.write_text(text)
    return path


def read_csv_points(path: str | Path, quantity: str, x: str = "lambda") -> list[tuple[float, float]]:
    """Per-lambda mean of ``quantity`` from a sweep CSV (or any CSV with those columns)."""
    by_x: dict[float, list[float]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            if r.get("error") or not r.get(quantity) or not r.get(x):
                continue
            by_x.setdefault(float(r[x]), []).append(float(r[quantity]))
    return [(k, float(np.mean(v))) for k, v in sorted(by_x.items())]
