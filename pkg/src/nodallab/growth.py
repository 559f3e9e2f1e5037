"""Growth of eigenfunctions in balls and the positivity-volume relation.

The growth of ``phi`` in a ball ``B`` is ``log(sup_B |phi| / sup_{B/2} |phi|)``.
Sups are grid maxima; when the closed-form mode is available the maximum is
refined once on a ``3^n`` stencil of half-step offsets around the grid
argmax, identically for both balls.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateBallError, NodalLabError, NonVanishingBallError
from .geometry import (Ball, GridSpec, ScalarField, ball_volume, check_ball, points_in_ball,
                       sphere_area, sphere_points)
from .modes import EigenMode, evaluate, sample
from .nodal import BallPack, is_vanishing, sign_volumes

BETA_FLOOR = math.log(2)


@dataclass(frozen=True)
class GrowthRecord:
    ball: Ball
    beta: float
    sup_full: float
    sup_half: float
    vanishing: bool


def _sphere_count(n: int, radius: float, h: float) -> int:
    """Sphere samples spaced about ``h/2`` apart (capped for large balls)."""
    ratio = 2 * radius / h
    if n == 1:
        return 2
    return int(min(math.ceil(sphere_area(n, 1.0) * ratio ** (n - 1)), 20000))


def sup_abs(field: ScalarField, ball: Ball, mode: EigenMode | None = None) -> float:
    """Estimate of ``sup_ball |phi|``.

    Grid max over the ball. With ``mode`` the value is refined at a half-step
    ``3^n`` stencil around the grid argmax and by evaluating the mode on the
    boundary sphere at a spacing of about half a grid step.
    """
    grid = field.grid
    idx = points_in_ball(grid, ball)
    vals = np.abs(field.values[idx])
    if not len(vals):
        return 0.0
    best = int(np.argmax(vals))
    sup = float(vals[best])
    if mode is None:
        return sup
    domain = grid.domain
    center = np.asarray(ball.center)
    h = np.asarray(grid.spacing)
    x0 = np.array([i[best] for i in idx], dtype=float) * h
    steps = np.array(list(itertools.product((-0.5, 0.0, 0.5), repeat=grid.n))) * h
    cand = x0 + steps
    cand = cand[np.linalg.norm(domain.delta(center, cand), axis=1) <= ball.radius]
    count = _sphere_count(grid.n, ball.radius, float(h.min()))
    cand = np.concatenate([cand, center + ball.radius * sphere_points(grid.n, count)])
    if domain.is_torus:
        cand = domain.wrap(cand)
    else:
        cand = np.clip(cand, 0.0, np.asarray(domain.sides))
    return max(sup, float(np.max(np.abs(evaluate(mode, cand)))))


def _as_field(source, grid: GridSpec | None) -> tuple[ScalarField, EigenMode | None]:
    if isinstance(source, EigenMode):
        if grid is None:
            raise NodalLabError("a grid is required to sample a mode")
        return sample(source, grid), source
    return source, None


def growth_beta(source, ball: Ball, grid: GridSpec | None = None, mode: EigenMode | None = None
                ) -> GrowthRecord:
    """Growth of a field (or mode sampled on ``grid``) in ``ball``."""
    field, sampled_mode = _as_field(source, grid)
    mode = mode or sampled_mode
    check_ball(field.grid.domain, ball)
    sup_full = sup_abs(field, ball, mode)
    sup_half = sup_abs(field, ball.half, mode)
    if sup_half <= 0:
        raise DegenerateBallError("field vanishes on the half ball (or it holds no grid points)")
    beta = max(0.0, math.log(sup_full / sup_half))
    return GrowthRecord(ball, beta, sup_full, sup_half, is_vanishing(field, ball))


def df_bound_ratio(mode: EigenMode, pack: BallPack, field: ScalarField | None = None,
                   grid: GridSpec | None = None) -> float:
    """``max beta over the pack / sqrt(lam)``: a measured stand-in for the constant."""
    if mode.lam <= 0:
        raise NodalLabError("growth bound needs a positive eigenvalue")
    if not pack.balls:
        raise NodalLabError("empty ball pack")
    if field is None:
        field, _ = _as_field(mode, grid)
    betas = [growth_beta(field, b, mode=mode).beta for b in pack.balls]
    return max(betas) / math.sqrt(mode.lam)


@dataclass(frozen=True)
class PositivityRecord:
    ratio_pos: float
    ratio_neg: float
    beta: float
    beta_eff: float
    product_pos: float
    product_neg: float


def positivity_bound_record(field: ScalarField, ball: Ball, mode: EigenMode | None = None,
                            growth: GrowthRecord | None = None) -> PositivityRecord:
    """Sign-volume fractions of a vanishing ball against ``beta^-(n-1)``.

    ``product_pos = ratio_pos * max(beta, log 2)^(n-1)``; the floor keeps the
    statistic meaningful for nearly flat balls.
    """
    growth = growth or growth_beta(field, ball, mode=mode)
    if not growth.vanishing:
        raise NonVanishingBallError("field does not vanish in the half ball")
    n = field.grid.n
    vol = ball_volume(ball, field.grid.domain)
    vol_pos, vol_neg = sign_volumes(field, ball)
    beta_eff = max(growth.beta, BETA_FLOOR)
    scale = beta_eff ** (n - 1)
    return PositivityRecord(vol_pos / vol, vol_neg / vol, growth.beta, beta_eff,
                            vol_pos / vol * scale, vol_neg / vol * scale)
