"""L^p norms, L^p exponents, the Hoelder chain, gradient sups and Dong's identity."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exceptions import NodalLabError
from .geometry import GridSpec, ScalarField
from .modes import EigenMode, evaluate, evaluate_gradient, sample, sample_gradient
from .nodal import NodalMesh

INF = math.inf


@dataclass(frozen=True)
class NormReport:
    p: float
    norm: float
    normalized: bool = False


@dataclass(frozen=True)
class DongReport:
    lhs: float
    rhs: float
    rel_err: float


def _refined_sup(mode: EigenMode, grid: GridSpec, values: np.ndarray, fn) -> float:
    """Grid max of ``values`` refined on a half-step ``3^n`` stencil via ``fn``."""
    flat = int(np.argmax(values))
    idx = np.unravel_index(flat, grid.shape)
    x0 = np.array(idx, dtype=float) * np.asarray(grid.spacing)
    steps = np.array(list(itertools.product((-0.5, 0.0, 0.5), repeat=grid.n))) * np.asarray(grid.spacing)
    cand = x0 + steps
    cand = grid.domain.wrap(cand) if grid.domain.is_torus else np.clip(
        cand, 0.0, np.asarray(grid.domain.sides))
    return max(float(values.ravel()[flat]), float(np.max(fn(cand))))


def sup_norm(source, grid: GridSpec | None = None) -> float:
    if isinstance(source, EigenMode):
        field = sample(source, grid)
        return _refined_sup(source, grid, np.abs(field.values), lambda p: np.abs(evaluate(source, p)))
    return source.max_abs


def _values(source, grid):
    if isinstance(source, EigenMode):
        if grid is None:
            raise NodalLabError("a grid is required to sample a mode")
        return sample(source, grid)
    return source


def lp_norm(source, p: float, grid: GridSpec | None = None, normalized: bool = False) -> NormReport:
    """Midpoint/trapezoid quadrature norm of a field or a sampled mode.

    ``normalized`` divides by the L2 norm computed with the same quadrature.
    """
    p = float(p)
    if p < 1:
        raise NodalLabError("p must be >= 1")
    field = _values(source, grid)
    g = field.grid
    if p == INF:
        norm = sup_norm(source, g) if isinstance(source, EigenMode) else field.max_abs
    else:
        norm = _scaled_norm(field, p)
    if normalized:
        norm /= _scaled_norm(field, 2.0)
    return NormReport(p, float(norm), normalized)


def _scaled_norm(field: ScalarField, p: float) -> float:
    # factor out the max so |v|^p neither underflows nor overflows
    m = field.max_abs
    if m == 0:
        return 0.0
    return field.grid.integrate((np.abs(field.values) / m) ** p) ** (1 / p) * m


def _frac(p) -> Fraction | None:
    if p == INF or (isinstance(p, float) and math.isinf(p)):
        return None
    return Fraction(p).limit_denominator(10**6) if isinstance(p, float) else Fraction(p)


def sogge_kink(n: int) -> Fraction:
    if n < 2:
        raise NodalLabError("n must be >= 2")
    return Fraction(2 * (n + 1), n - 1)


def sogge_delta_branches(n: int, p) -> tuple[Fraction, Fraction]:
    """Both branch formulas evaluated at ``p`` (low branch, high branch)."""
    q = _frac(p)
    inv = Fraction(0) if q is None else 1 / q
    low = Fraction(n - 1, 4) * (Fraction(1, 2) - inv)
    high = Fraction(n, 2) * (Fraction(1, 2) - inv) - Fraction(1, 4)
    return low, high


def sogge_delta(n: int, p) -> Fraction:
    """Exponent of the sharp eigenfunction L^p bound, as an exact rational."""
    if n < 2:
        raise NodalLabError("n must be >= 2")
    q = _frac(p)
    if q is not None and q < 2:
        raise NodalLabError("p must be >= 2")
    low, high = sogge_delta_branches(n, p)
    if q is not None and q <= sogge_kink(n):
        return low
    return high


def sobolev_exponent(n: int, p) -> Fraction:
    if n < 1:
        raise NodalLabError("n must be >= 1")
    q = _frac(p)
    if q is not None and q < 2:
        raise NodalLabError("p must be >= 2")
    inv = Fraction(0) if q is None else 1 / q
    return Fraction(n, 2) * (Fraction(1, 2) - inv)


def sogge_ratio(mode: EigenMode, p: float, grid: GridSpec) -> float:
    """``||phi||_p / (||phi||_2 lam^delta(p))``."""
    if mode.lam <= 0:
        raise NodalLabError("sogge ratio needs a positive eigenvalue")
    field = sample(mode, grid)
    num = lp_norm(mode if p == INF else field, p, grid).norm
    den = lp_norm(field, 2).norm * mode.lam ** float(sogge_delta(mode.n, p))
    return num / den


@dataclass(frozen=True)
class HolderCheck:
    lhs: float
    rhs: float
    passed: bool


def holder_chain_check(field: ScalarField, p: float) -> HolderCheck:
    """``||f||_2^2 <= ||f||_1^((p-2)/(p-1)) ||f||_p^(p/(p-1))`` with one quadrature."""
    if p <= 2:
        raise NodalLabError("p must exceed 2")
    # both sides are 2-homogeneous: compare at unit sup, report at true scale
    m = field.max_abs
    unit = field.scaled(1 / m) if m > 0 else field
    l1 = lp_norm(unit, 1).norm
    l2 = lp_norm(unit, 2).norm
    lp = lp_norm(unit, p).norm
    lhs = l2 * l2
    rhs = l1 ** ((p - 2) / (p - 1)) * lp ** (p / (p - 1))
    s2 = m * m if m > 0 else 1.0
    return HolderCheck(lhs * s2, rhs * s2, lhs <= rhs * (1 + 1e-9))


@dataclass(frozen=True)
class L1Check:
    l1: float
    floor: float
    ratio: float


def l1_lower_check(mode: EigenMode, grid: GridSpec) -> L1Check:
    """L1 norm of the L2-normalized mode against ``lam^(-(n-1)/8)``."""
    if mode.lam <= 0:
        raise NodalLabError("L1 floor needs a positive eigenvalue")
    l1 = lp_norm(mode.normalized(), 1, grid).norm
    floor = mode.lam ** (-(mode.n - 1) / 8)
    return L1Check(l1, floor, l1 / floor)


def grad_sup(mode: EigenMode, grid: GridSpec) -> float:
    """Sup of ``|grad phi|`` from the closed-form gradient, grid max plus refinement."""
    g = sample_gradient(mode, grid)
    mag = np.sqrt(np.sum(g * g, axis=0))
    return _refined_sup(mode, grid, mag,
                        lambda p: np.linalg.norm(evaluate_gradient(mode, p), axis=1))


def grad_sup_ratio(mode: EigenMode, grid: GridSpec) -> float:
    """``sup |grad phi| / lam^((n+1)/4)`` for the L2-normalized mode."""
    if mode.lam <= 0:
        raise NodalLabError("gradient bound needs a positive eigenvalue")
    return grad_sup(mode.normalized(), grid) / mode.lam ** ((mode.n + 1) / 4)


def dong_identity(mode: EigenMode, mesh: NodalMesh, grid: GridSpec) -> DongReport:
    """Both sides of ``lam * int |phi| = 2 * int_{phi=0} |grad phi|``.

    The right side uses the closed-form gradient at cell centroids.
    """
    if mode.n not in (2, 3):
        raise NodalLabError("Dong identity check supports n in {2, 3}")
    if not mode.domain.is_torus:
        raise NodalLabError("Dong identity is checked on closed domains (tori) only")
    if mode.lam == 0 and len(mesh):
        raise NodalLabError("constant mode with a nonempty nodal mesh")
    lhs = mode.lam * lp_norm(mode, 1, grid).norm
    if len(mesh):
        cen = mesh.domain.wrap(mesh.centroids)
        grad = np.linalg.norm(evaluate_gradient(mode, cen), axis=1)
        rhs = 2.0 * float(np.sum(grad * mesh.measures))
    else:
        rhs = 0.0
    denom = max(lhs, rhs, 1e-300)
    return DongReport(float(lhs), rhs, abs(lhs - rhs) / denom)
