"""Flat model domains, regular grids, balls and grid quadrature.

Coordinates start at the origin: a box is ``[0, L_1] x ... x [0, L_n]`` and
its grid includes both faces; a torus is ``[0, L_1) x ... x [0, L_n)`` and its
grid omits the duplicated right face.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .exceptions import DomainError, GridMismatchError

TORUS = "torus"
BOX = "box-dirichlet"
_KIND_ALIASES = {"torus": TORUS, "box": BOX, "box-dirichlet": BOX, "dirichlet": BOX}


@dataclass(frozen=True)
class Domain:
    kind: str
    n: int
    sides: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in (TORUS, BOX):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if not 1 <= self.n <= 4:
            raise DomainError(f"dimension out of range: n={self.n} (expected 1..4)")
        if len(self.sides) != self.n:
            raise DomainError(f"expected {self.n} side lengths, got {len(self.sides)}")
        if any(not (s > 0 and math.isfinite(s)) for s in self.sides):
            raise DomainError(f"non-positive side in {self.sides}")

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    @property
    def volume(self) -> float:
        return float(math.prod(self.sides))

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.n,):
            return False
        upper = np.asarray(self.sides)
        if self.is_torus:
            return bool(np.all(p >= 0) and np.all(p < upper))
        return bool(np.all(p >= 0) and np.all(p <= upper))

    def wrap(self, points):
        """Reduce points modulo the periods (identity for boxes)."""
        p = np.asarray(points, dtype=float)
        if not self.is_torus:
            return p
        return np.mod(p, np.asarray(self.sides))

    def delta(self, a, b):
        """Displacement ``b - a``; minimal image on the torus."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.is_torus:
            L = np.asarray(self.sides)
            d = d - L * np.round(d / L)
        return d

    def distance(self, a, b):
        return np.linalg.norm(self.delta(a, b), axis=-1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "sides": list(self.sides)}


def make_domain(kind: str = TORUS, n: int = 2, sides: Sequence[float] | None = None) -> Domain:
    """Build a domain; sides default to 2*pi (torus) or pi (Dirichlet box)."""
    try:
        kind = _KIND_ALIASES[kind]
    except KeyError:
        raise DomainError(f"unknown domain kind {kind!r}") from None
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= 4:
        raise DomainError(f"dimension out of range: n={n} (expected 1..4)")
    if sides is None or len(sides) == 0:
        default = 2 * math.pi if kind == TORUS else math.pi
        sides = [default] * int(n)
    return Domain(kind, int(n), tuple(float(s) for s in sides))


def domain_from_dict(d: dict) -> Domain:
    return make_domain(d.get("kind", TORUS), int(d.get("n", 2)), d.get("sides"))


@dataclass(frozen=True)
class GridSpec:
    domain: Domain
    resolution: int

    def __post_init__(self):
        if self.resolution < 4:
            raise DomainError(f"resolution must be >= 4, got {self.resolution}")

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.n

    @property
    def size(self) -> int:
        return self.resolution**self.n

    @property
    def spacing(self) -> tuple[float, ...]:
        denom = self.resolution if self.domain.is_torus else self.resolution - 1
        return tuple(s / denom for s in self.domain.sides)

    @property
    def cell_volume(self) -> float:
        return float(math.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [np.arange(self.resolution) * h for h in self.spacing]

    def points(self, index) -> np.ndarray:
        """Coordinates of multi-indices given as a tuple of index arrays."""
        return np.stack([np.asarray(i) * h for i, h in zip(index, self.spacing)], axis=-1)

    def all_points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def weights(self) -> np.ndarray | float:
        """Quadrature weights: uniform on the torus, trapezoid on the box."""
        if self.domain.is_torus:
            return self.cell_volume
        w = np.ones(self.shape)
        for axis in range(self.n):
            sl = [slice(None)] * self.n
            sl[axis] = 0
            w[tuple(sl)] *= 0.5
            sl[axis] = -1
            w[tuple(sl)] *= 0.5
        return w * self.cell_volume

    def integrate(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float).reshape(self.shape)
        w = self.weights()
        if np.isscalar(w):
            return float(np.sum(values) * w)
        return float(np.sum(values * w))


def grid_for_wavelength(domain: Domain, lam: float, samples_per_wavelength: float = 32,
                        cap: int = 1024, minimum: int = 16) -> GridSpec:
    """Grid with the given number of samples per wavelength ``2*pi/sqrt(lam)``."""
    import logging

    freq = math.sqrt(max(lam, 0.0))
    side = max(domain.sides)
    res = math.ceil(samples_per_wavelength * side * freq / (2 * math.pi) - 1e-9)
    if not domain.is_torus:
        res += 1
    res = max(res, minimum)
    if res > cap:
        logging.getLogger(__name__).warning(
            "resolution %d exceeds cap %d; using the cap", res, cap)
        res = cap
    return GridSpec(domain, res)


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")

    @property
    def half(self) -> "Ball":
        return Ball(self.center, self.radius / 2)

    def clipped(self, domain: Domain) -> bool:
        """True if the ball pokes out of a box (never on a torus)."""
        if domain.is_torus:
            return False
        c = np.asarray(self.center)
        return bool(np.any(c - self.radius < 0) or np.any(c + self.radius > np.asarray(domain.sides)))


def check_ball(domain: Domain, ball: Ball) -> None:
    if len(ball.center) != domain.n or not domain.contains(ball.center):
        raise DomainError(f"ball center {ball.center} outside domain")
    if ball.clipped(domain):
        raise DomainError("ball straddles the Dirichlet boundary")


@dataclass(eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise GridMismatchError(f"{v.size} values for a grid of {self.grid.size} points")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        self.values = v

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @cached_property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * c)


def points_in_ball(grid: GridSpec, ball: Ball) -> tuple[np.ndarray, ...]:
    """Multi-indices of grid points within ``ball.radius`` of the center.

    Returned as a tuple of index arrays (usable as ``values[idx]``), ordered
    row-major. Distances use the wrap-around metric on tori.
    """
    domain = grid.domain
    c = np.asarray(ball.center, dtype=float)
    if c.shape != (domain.n,) or not domain.contains(c):
        raise DomainError(f"ball center {ball.center} outside domain")
    r = ball.radius
    axis_idx, axis_off = [], []
    for ci, h in zip(c, grid.spacing):
        lo, hi = math.ceil((ci - r) / h - 1e-12), math.floor((ci + r) / h + 1e-12)
        if domain.is_torus:
            if hi - lo + 1 >= grid.resolution:
                idx = np.arange(grid.resolution)
                off = _wrap1(idx * h - ci, grid.resolution * h)
            else:
                raw = np.arange(lo, hi + 1)
                idx = np.mod(raw, grid.resolution)
                off = raw * h - ci
        else:
            raw = np.arange(max(lo, 0), min(hi, grid.resolution - 1) + 1)
            idx, off = raw, raw * h - ci
        axis_idx.append(idx)
        axis_off.append(off)
    d2 = np.zeros([len(o) for o in axis_off])
    for axis, off in enumerate(axis_off):
        shape = [1] * domain.n
        shape[axis] = len(off)
        d2 = d2 + (off**2).reshape(shape)
    inside = np.nonzero(d2 <= r * r * (1 + 1e-12))
    return tuple(axis_idx[a][inside[a]] for a in range(domain.n))


def _wrap1(d: np.ndarray, period: float) -> np.ndarray:
    return d - period * np.round(d / period)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def ball_volume(ball: Ball, domain: Domain | None = None) -> float:
    """Euclidean volume ``omega_n r^n`` of the ball."""
    n = len(ball.center)
    if domain is not None and domain.is_torus and ball.radius >= min(domain.sides) / 2:
        raise DomainError(
            f"radius {ball.radius} too large for torus with sides {domain.sides}")
    return unit_ball_volume(n) * ball.radius**n


def sphere_points(n: int, count: int) -> np.ndarray:
    """Deterministic, roughly uniform points on the unit sphere ``S^(n-1)``.

    Equispaced angles for n=2, a Fibonacci lattice for n=3 and normalized
    Gaussians from a fixed Philox stream otherwise.
    """
    count = max(int(count), 2)
    if n == 1:
        return np.array([[-1.0], [1.0]])
    if n == 2:
        t = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if n == 3:
        i = np.arange(count) + 0.5
        phi = np.arccos(1 - 2 * i / count)
        theta = np.pi * (1 + 5**0.5) * i
        return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)
    g = np.random.Generator(np.random.Philox(0)).standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_area(n: int, radius: float) -> float:
    """(n-1)-measure of the boundary sphere of an n-ball."""
    return n * unit_ball_volume(n) * radius ** (n - 1)
