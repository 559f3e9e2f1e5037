"""Matrix-free finite-difference Laplacian and shifted inverse iteration.

Used as an independent check on the analytic catalog: nothing here knows
about closed-form modes except :func:`validate_against_catalog`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg, minres

from .exceptions import GridMismatchError, NodalLabError
from .geometry import GridSpec, ScalarField
from .modes import EigenMode, eigenspace_basis

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiscreteOperator:
    """``-Delta_h`` with the (2n+1)-point stencil.

    On a torus the unknowns are all grid values (periodic wrap). On a box the
    unknowns are the interior values; boundary values are held at zero.
    """

    grid: GridSpec

    @property
    def periodic(self) -> bool:
        return self.grid.domain.is_torus

    @property
    def unknown_shape(self) -> tuple[int, ...]:
        m = self.grid.resolution if self.periodic else self.grid.resolution - 2
        return (m,) * self.grid.n

    @property
    def size(self) -> int:
        return int(np.prod(self.unknown_shape))

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float).reshape(self.unknown_shape)
        out = np.zeros_like(u)
        for axis, h in enumerate(self.grid.spacing):
            if self.periodic:
                left, right = np.roll(u, 1, axis), np.roll(u, -1, axis)
            else:
                pad = [(0, 0)] * u.ndim
                pad[axis] = (1, 1)
                padded = np.pad(u, pad)
                lo = [slice(None)] * u.ndim
                hi = [slice(None)] * u.ndim
                lo[axis], hi[axis] = slice(0, -2), slice(2, None)
                left, right = padded[tuple(lo)], padded[tuple(hi)]
            out += (2 * u - left - right) / h**2
        return out.ravel()

    def embed(self, u: np.ndarray) -> ScalarField:
        """Unknown vector as a field on the full grid (zero boundary on boxes)."""
        u = np.asarray(u, dtype=float).reshape(self.unknown_shape)
        if self.periodic:
            return ScalarField(self.grid, u)
        return ScalarField(self.grid, np.pad(u, 1))

    def restrict(self, f: ScalarField) -> np.ndarray:
        v = f.values
        if self.periodic:
            return v.ravel().copy()
        return v[(slice(1, -1),) * self.grid.n].ravel().copy()


def assemble_operator(grid: GridSpec, boundary: str | None = None) -> DiscreteOperator:
    """``boundary`` is informational; the closure follows the grid's domain."""
    if boundary is not None:
        expected = "periodic" if grid.domain.is_torus else "dirichlet"
        if boundary not in (expected, grid.domain.kind):
            raise NodalLabError(f"boundary {boundary!r} does not match domain {grid.domain.kind}")
    return DiscreteOperator(grid)


@dataclass
class EigenpairEstimate:
    lambda_hat: float
    field: ScalarField = field(repr=False)
    residual_norm: float
    converged: bool = True
    iterations: int = 0


def _rayleigh(op: DiscreteOperator, x: np.ndarray) -> float:
    return float(x @ op.apply(x) / (x @ x))


def solve_eigenpair(op: DiscreteOperator, shift: float, tol: float = 1e-10, max_iter: int = 100,
                    seed: int = 0, deflate_constant: bool = True) -> EigenpairEstimate:
    """Shifted inverse power iteration for the eigenvalue nearest ``shift``.

    Inner solves use conjugate gradients (relative tolerance 1e-8) and fall
    back to MINRES when the shifted system turns out to be indefinite.
    Stops when successive Rayleigh quotients differ by less than ``tol``.
    """
    if tol <= 0:
        raise NodalLabError("tol must be positive")
    N = op.size
    deflate = deflate_constant and op.periodic

    def project(v):
        return v - v.mean() if deflate else v

    def matvec(v):
        v = np.asarray(v).ravel()
        return project(op.apply(project(v)) - shift * project(v))

    A = LinearOperator((N, N), matvec=matvec, dtype=float)
    rng = np.random.Generator(np.random.Philox(seed))
    x = project(rng.standard_normal(N))
    x /= np.linalg.norm(x)
    rq_prev = _rayleigh(op, x)
    converged = False
    it = 0
    rq = rq_prev
    for it in range(1, max_iter + 1):
        y, info = cg(A, x, rtol=1e-8, maxiter=10 * N)
        if info != 0:
            y, info = minres(A, x, rtol=1e-8, maxiter=10 * N)
        y = project(y)
        norm = np.linalg.norm(y)
        if not np.isfinite(norm) or norm == 0:
            raise NodalLabError(f"shifted system singular at shift {shift}")
        x = y / norm
        rq = _rayleigh(op, x)
        if abs(rq - rq_prev) < tol:
            converged = True
            break
        rq_prev = rq
    if not converged:
        log.warning("inverse iteration did not converge in %d steps", max_iter)
    residual = float(np.linalg.norm(op.apply(x) - rq * x))
    return EigenpairEstimate(rq, op.embed(x), residual, converged, it)


def discrete_eigenvalue(grid: GridSpec, k) -> float:
    """Exact eigenvalue of ``-Delta_h`` on a sampled Fourier/sine mode."""
    factor = 2 * math.pi if grid.domain.is_torus else math.pi
    total = 0.0
    for ki, L, h in zip(k, grid.domain.sides, grid.spacing):
        w = ki * factor / L
        total += (2 - 2 * math.cos(w * h)) / h**2
    return total


def validate_against_catalog(estimate: EigenpairEstimate, mode: EigenMode) -> dict:
    """Relative eigenvalue error and angle to the sampled eigenspace of ``mode``."""
    grid = estimate.field.grid
    if grid.domain != mode.domain:
        raise GridMismatchError("estimate and mode live on different domains")
    lam = mode.lam
    rel = abs(estimate.lambda_hat - lam) / lam if lam > 0 else abs(estimate.lambda_hat)
    basis = eigenspace_basis(mode.domain, lam, grid)
    f = estimate.field.flat
    cos_angle = np.linalg.norm(basis @ f) / np.linalg.norm(f)
    angle = float(np.arccos(min(1.0, cos_angle)))
    return {"lambda_rel_err": float(rel), "subspace_angle": angle}
