"""Nodal-set extraction and measurement.

Meshing: marching squares (n=2, asymptotic decider on saddle cells) and
Lewiner marching cubes from scikit-image (n=3). Vertices are placed by linear
interpolation along sign-changing grid edges. Grid values with
``|v| <= 1e-12 max|v|`` are moved to ``+1e-12 max|v|`` first so that nodal
lines running exactly through grid points give no degenerate cases.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import DomainError, NodalLabError, OneSignedFieldError
from .geometry import (Ball, Domain, GridSpec, ScalarField, ball_volume, check_ball,
                       points_in_ball, sphere_area)

ZERO_SNAP = 1e-12
VANISH_TOL = 1e-9


@dataclass(eq=False)
class NodalMesh:
    """Simplices approximating ``{phi = 0}``.

    ``cells`` has shape ``(m, n, n)``: ``m`` simplices of ``n`` vertices in
    ``R^n`` (segments for n=2, triangles for n=3). On a torus coordinates may
    exceed the period by up to one grid step; use :attr:`domain` to wrap.
    """

    domain: Domain
    cells: np.ndarray = field(repr=False)
    measures: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.domain.n

    @property
    def total_measure(self) -> float:
        return float(np.sum(self.measures))

    def __len__(self) -> int:
        return len(self.cells)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.cells.mean(axis=1) if len(self.cells) else np.zeros((0, self.dim))

    @cached_property
    def vertices(self) -> np.ndarray:
        """Distinct vertices (wrapped on tori) in lexicographic order."""
        if not len(self.cells):
            return np.zeros((0, self.dim))
        pts = self.domain.wrap(self.cells.reshape(-1, self.dim))
        pts = np.unique(np.round(pts, 11), axis=0)
        if self.domain.is_torus:
            pts = np.mod(pts, np.asarray(self.domain.sides))
            pts = np.unique(pts, axis=0)
        return pts

    @cached_property
    def _tree(self) -> cKDTree:
        pts = self.centroids
        if self.domain.is_torus:
            L = np.asarray(self.domain.sides)
            pts = np.mod(pts, L)
            pts[pts >= L] = 0.0
            return cKDTree(pts, boxsize=L)
        return cKDTree(pts)

    @cached_property
    def _reach(self) -> float:
        if not len(self.cells):
            return 0.0
        return float(np.max(np.linalg.norm(self.cells - self.centroids[:, None, :], axis=2)))


def _snap(values: np.ndarray) -> np.ndarray:
    m = np.max(np.abs(values))
    eps = ZERO_SNAP * m
    return np.where(np.abs(values) <= eps, eps, values)


def _extended(field: ScalarField) -> tuple[np.ndarray, tuple[float, ...]]:
    v = _snap(field.values)
    if field.grid.domain.is_torus:
        v = np.pad(v, [(0, 1)] * v.ndim, mode="wrap")
    return v, field.grid.spacing


def _marching_squares(v: np.ndarray, h: tuple[float, float]) -> np.ndarray:
    hx, hy = h
    v00, v10, v01, v11 = v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]
    X, Y = np.meshgrid(np.arange(v.shape[0] - 1) * hx, np.arange(v.shape[1] - 1) * hy, indexing="ij")
    s00, s10, s01, s11 = v00 > 0, v10 > 0, v01 > 0, v11 > 0

    with np.errstate(divide="ignore", invalid="ignore"):
        # edge order: bottom (y=y_j), right (x=x_i+1), top (y=y_j+1), left (x=x_i)
        edge_pts = np.stack([
            np.stack([X + v00 / (v00 - v10) * hx, Y], -1),
            np.stack([X + hx, Y + v10 / (v10 - v11) * hy], -1),
            np.stack([X + v01 / (v01 - v11) * hx, Y + hy], -1),
            np.stack([X, Y + v00 / (v00 - v01) * hy], -1),
        ], axis=2)  # (nx, ny, 4, 2)
    crosses = np.stack([s00 != s10, s10 != s11, s01 != s11, s00 != s01], axis=-1)
    count = crosses.sum(axis=-1)

    segs = []
    two = count == 2
    if np.any(two):
        ci, cj, e = np.nonzero(crosses & two[..., None])
        e = e.reshape(-1, 2)
        ci, cj = ci[::2], cj[::2]
        segs.append(np.stack([edge_pts[ci, cj, e[:, 0]], edge_pts[ci, cj, e[:, 1]]], axis=1))
    four = count == 4
    if np.any(four):
        ci, cj = np.nonzero(four)
        a, b, c, d = v00[ci, cj], v10[ci, cj], v01[ci, cj], v11[ci, cj]
        saddle = (a * d - b * c) / (a + d - b - c)
        joined = (saddle > 0) == (a > 0)  # corners 00 and 11 connected through the center
        P = edge_pts[ci, cj]
        first = np.where(joined[:, None], 0, 3)
        second = np.where(joined[:, None], 1, 0)
        third = np.where(joined[:, None], 2, 1)
        fourth = np.where(joined[:, None], 3, 2)
        rows = np.arange(len(ci))[:, None]
        segs.append(np.stack([P[rows, first][:, 0], P[rows, second][:, 0]], axis=1))
        segs.append(np.stack([P[rows, third][:, 0], P[rows, fourth][:, 0]], axis=1))
    if not segs:
        return np.zeros((0, 2, 2))
    return np.concatenate(segs)


def _marching_cubes(v: np.ndarray, h: tuple[float, ...]) -> np.ndarray:
    from skimage.measure import marching_cubes

    if v.min() > 0 or v.max() < 0:
        return np.zeros((0, 3, 3))
    verts, faces, _, _ = marching_cubes(v, level=0.0, spacing=h, method="lewiner",
                                        allow_degenerate=False)
    return verts[faces]


def simplex_measures(cells: np.ndarray) -> np.ndarray:
    if not len(cells):
        return np.zeros(0)
    n = cells.shape[2]
    if n == 2:
        return np.linalg.norm(cells[:, 1] - cells[:, 0], axis=1)
    if n == 3:
        return 0.5 * np.linalg.norm(np.cross(cells[:, 1] - cells[:, 0], cells[:, 2] - cells[:, 0]), axis=1)
    raise NodalLabError("only segments and triangles are supported")


def extract_nodal_set(field: ScalarField) -> NodalMesh:
    n = field.grid.n
    if n not in (2, 3):
        raise NodalLabError(f"nodal meshing supports n in {{2, 3}}, got n={n}")
    domain = field.grid.domain
    if field.max_abs == 0:
        return NodalMesh(domain, np.zeros((0, n, n)), np.zeros(0))
    v, h = _extended(field)
    cells = _marching_squares(v, h) if n == 2 else _marching_cubes(v, h)
    measures = simplex_measures(cells)
    keep = measures > 0
    if not domain.is_torus:
        keep &= ~_on_box_face(cells, domain.sides, h)
    return NodalMesh(domain, cells[keep], measures[keep])


def _on_box_face(cells: np.ndarray, sides, h) -> np.ndarray:
    """Cells with every vertex on the box boundary.

    The Dirichlet zero is imposed there, not nodal; this drops face sheets and
    the corner chords left by snapping the boundary zeros.
    """
    on = np.zeros(cells.shape[:2], dtype=bool)
    for axis, (L, step) in enumerate(zip(sides, h)):
        c = cells[:, :, axis]
        tol = 1e-6 * step
        on |= (c <= tol) | (c >= L - tol)
    return np.all(on, axis=1)


# -- measurement inside balls ---------------------------------------------
def _local_cells(mesh: NodalMesh, ball: Ball) -> np.ndarray:
    """Cells near the ball, translated so the ball center is the origin."""
    if not len(mesh):
        return np.zeros((0, mesh.dim, mesh.dim))
    c = np.asarray(ball.center, dtype=float)
    query = mesh.domain.wrap(c) if mesh.domain.is_torus else c
    if mesh.domain.is_torus:
        query = np.where(query >= np.asarray(mesh.domain.sides), 0.0, query)
    idx = mesh._tree.query_ball_point(query, ball.radius + mesh._reach + 1e-12)
    if not idx:
        return np.zeros((0, mesh.dim, mesh.dim))
    idx = np.sort(np.asarray(idx))
    cells = mesh.cells[idx]
    mids = mesh.centroids[idx]
    shift = mesh.domain.delta(c, mids) - mids  # minimal-image offset per cell
    return cells + shift[:, None, :]


def _segment_length_in_disk(cells: np.ndarray, r: float) -> float:
    P, D = cells[:, 0], cells[:, 1] - cells[:, 0]
    a = np.einsum("ij,ij->i", D, D)
    b = 2 * np.einsum("ij,ij->i", P, D)
    c = np.einsum("ij,ij->i", P, P) - r * r
    disc = b * b - 4 * a * c
    ok = (disc > 0) & (a > 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(ok, (-b - sq) / (2 * a), 0.0)
        t2 = np.where(ok, (-b + sq) / (2 * a), 0.0)
    span = np.clip(np.minimum(t2, 1.0) - np.maximum(t1, 0.0), 0.0, None)
    return float(np.sum(span * np.sqrt(a)))


def _triangle_area_in_ball(tris: np.ndarray, r: float, depth: int = 5) -> float:
    total = 0.0
    for _ in range(depth + 1):
        if not len(tris):
            break
        inside = np.linalg.norm(tris, axis=2) <= r
        full = inside.all(axis=1)
        total += float(simplex_measures(tris[full]).sum())
        part = tris[inside.any(axis=1) & ~full]
        if _ == depth:
            cen = part.mean(axis=1)
            total += float(simplex_measures(part[np.linalg.norm(cen, axis=1) <= r]).sum())
            break
        a, b, c = part[:, 0], part[:, 1], part[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        tris = np.concatenate([np.stack(t, axis=1) for t in
                               ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))])
    return total


def nodal_measure_in_ball(mesh: NodalMesh, ball: Ball) -> float:
    """(n-1)-measure of the mesh inside the ball.

    Segments are clipped to the disk exactly. Triangles crossing the sphere
    are bisected on edges a fixed number of times and the fragments kept by
    centroid.
    """
    cells = _local_cells(mesh, ball)
    if not len(cells):
        return 0.0
    if mesh.dim == 2:
        return _segment_length_in_disk(cells, ball.radius)
    return _triangle_area_in_ball(cells, ball.radius)


def _ball_values(field: ScalarField, ball: Ball) -> np.ndarray:
    check_ball(field.grid.domain, ball)
    return field.values[points_in_ball(field.grid, ball)]


def sign_volumes(field: ScalarField, ball: Ball) -> tuple[float, float]:
    """Grid-point counts times ``h^n`` of ``{phi>0}`` and ``{phi<0}`` in the ball.

    Points where the field vanishes (up to 1e-12 of its max) count half for each sign.
    """
    vals = _ball_values(field, ball)
    eps = ZERO_SNAP * field.max_abs
    zero = np.abs(vals) <= eps
    pos = np.count_nonzero((vals > 0) & ~zero) + 0.5 * np.count_nonzero(zero)
    neg = np.count_nonzero((vals < 0) & ~zero) + 0.5 * np.count_nonzero(zero)
    w = field.grid.cell_volume
    return pos * w, neg * w


def is_vanishing(field: ScalarField, ball: Ball) -> bool:
    """Sign change, or a near-zero value, at some grid point of the half ball."""
    vals = _ball_values(field, ball.half)
    if not len(vals):
        return False
    if np.any(np.abs(vals) < VANISH_TOL * field.max_abs):
        return True
    return bool(vals.max() > 0 and vals.min() < 0)


def isoperimetric_constant(vol_pos: float, vol_neg: float, nodal_in_ball: float, n: int) -> float:
    """Ratio ``nodal / min(vol_pos, vol_neg)^((n-1)/n)``; ``inf`` if one sign is absent."""
    smaller = min(vol_pos, vol_neg)
    if smaller <= 0:
        return math.inf
    if nodal_in_ball <= 0:
        raise NodalLabError("ball contains both signs but no nodal set")
    return nodal_in_ball / smaller ** ((n - 1) / n)


def local_density(field: ScalarField, ball: Ball, mesh: NodalMesh) -> float:
    check_ball(field.grid.domain, ball)
    return nodal_measure_in_ball(mesh, ball) / sphere_area(field.grid.n, ball.radius)


# -- packing ----------------------------------------------------------------
@dataclass
class BallPack:
    balls: list[Ball]
    radius_coeff: float
    radius: float
    lam: float

    @property
    def count(self) -> int:
        return len(self.balls)

    def total_volume(self) -> float:
        if not self.balls:
            return 0.0
        return self.count * ball_volume(self.balls[0])

    def min_center_distance(self, domain: Domain) -> float:
        if self.count < 2:
            return math.inf
        c = np.array([b.center for b in self.balls])
        d = np.linalg.norm(domain.delta(c[:, None, :], c[None, :, :]), axis=-1)
        d[np.diag_indices(len(c))] = np.inf
        return float(d.min())


def pack_nodal_balls(field: ScalarField, lam: float, radius_coeff: float = 1.0,
                     mesh: NodalMesh | None = None) -> BallPack:
    """Greedy disjoint balls of radius ``c / sqrt(lam)`` centered on nodal vertices.

    Vertices are scanned in lexicographic coordinate order; a ball is accepted
    when its center is more than two radii from every accepted center. On a
    box, balls that would cross the boundary are skipped.
    """
    if lam <= 0:
        raise NodalLabError("packing needs a positive eigenvalue")
    grid = field.grid
    domain = grid.domain
    if not (field.values.max() > 0 and field.values.min() < 0):
        raise OneSignedFieldError("field does not change sign")
    r = radius_coeff / math.sqrt(lam)
    if r <= 2 * max(grid.spacing):
        raise DomainError(f"ball radius {r:.4g} not resolved by grid spacing {max(grid.spacing):.4g}")
    if domain.is_torus and r >= min(domain.sides) / 2:
        raise DomainError("ball radius too large for the torus")
    if mesh is None:
        mesh = extract_nodal_set(field)
    verts = mesh.vertices
    if not domain.is_torus and len(verts):
        sides = np.asarray(domain.sides)
        verts = verts[np.all((verts - r >= 0) & (verts + r <= sides), axis=1)]

    sides = [float(s) for s in domain.sides]
    dims = [max(int(math.floor(s / (2 * r))), 1) for s in sides]
    cell_size = [s / d for s, d in zip(sides, dims)]
    periodic = domain.is_torus
    offsets = list(itertools.product((-1, 0, 1), repeat=domain.n))
    limit = (2 * r) ** 2
    buckets: dict[tuple, list[tuple]] = {}
    accepted: list[Ball] = []
    for v in verts.tolist():
        key = [int(math.floor(x / c)) for x, c in zip(v, cell_size)]
        if periodic:
            key = [k % d for k, d in zip(key, dims)]
        clash = False
        for off in offsets:
            k = tuple((a + o) % d if periodic else a + o for a, o, d in zip(key, off, dims))
            for other in buckets.get(k, ()):
                d2 = 0.0
                for x, y, L in zip(v, other, sides):
                    dx = y - x
                    if periodic:
                        dx -= L * round(dx / L)
                    d2 += dx * dx
                if d2 <= limit:
                    clash = True
                    break
            if clash:
                break
        if not clash:
            buckets.setdefault(tuple(key), []).append(v)
            accepted.append(Ball(tuple(v), r))
    return BallPack(accepted, radius_coeff, r, lam)


# -- export -----------------------------------------------------------------
def write_mesh_csv(mesh: NodalMesh, path: str | Path) -> Path:
    """One row per simplex: vertex coordinates then its measure."""
    path = Path(path)
    n = mesh.dim
    header = [f"v{i}_x{j}" for i in range(n) for j in range(n)] + ["measure"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for cell, m in zip(mesh.cells, mesh.measures):
            w.writerow([repr(float(x)) for x in cell.ravel()] + [repr(float(m))])
    return path


def write_mesh_gnuplot(mesh: NodalMesh, path: str | Path) -> Path:
    """Segments as blank-line separated two-point polylines (n=2 only)."""
    if mesh.dim != 2:
        raise NodalLabError("gnuplot polylines are only written for n=2")
    path = Path(path)
    with path.open("w") as fh:
        for (a, b) in mesh.cells:
            fh.write(f"{a[0]!r} {a[1]!r}\n{b[0]!r} {b[1]!r}\n\n")
    return path
