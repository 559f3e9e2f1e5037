"""Harmonic polynomials on the unit ball and the dyadic positivity argument.

Bases: for ``n=2``, index 0/1 selects ``Re``/``Im`` of ``(x + iy)^k``. For
``n=3``, index ``m`` in ``[-l, l]`` selects the real regular solid harmonic
``C_l^m`` (``m >= 0``) or ``S_l^{|m|}`` (``m < 0``).

Sups over closed balls are taken on the boundary sphere (maximum principle),
sampled densely; volumes use midpoint-rule point counting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import NodalLabError
from .geometry import unit_ball_volume

SPHERE_SAMPLES = {2: 4096, 3: 20000}


def _pi_lm(l: int, m: int, z: np.ndarray, r2: np.ndarray) -> np.ndarray:
    norm = math.sqrt(math.factorial(l - m) / math.factorial(l + m))
    out = np.zeros_like(z)
    for k in range((l - m) // 2 + 1):
        c = ((-1) ** k * 2.0 ** (-l) * math.comb(l, k) * math.comb(2 * l - 2 * k, l)
             * math.factorial(l - 2 * k) / math.factorial(l - 2 * k - m))
        out = out + c * r2**k * z ** (l - 2 * k - m)
    return norm * out


def _basis(n: int, degree: int, index: int, pts: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    if n == 2:
        w = (x + 1j * y) ** degree
        return w.real if index == 0 else w.imag
    z = pts[:, 2]
    m = abs(index)
    w = (x + 1j * y) ** m
    radial = _pi_lm(degree, m, z, x * x + y * y + z * z)
    return radial * (w.real if index >= 0 else w.imag)


@dataclass(frozen=True)
class HarmonicSample:
    n: int
    terms: tuple[tuple[int, float, int], ...]  # (degree, coefficient, basis index)
    seed: int | None = None

    def __post_init__(self):
        if self.n not in (2, 3):
            raise NodalLabError("harmonic sandbox supports n in {2, 3}")
        for degree, _, index in self.terms:
            if degree < 0:
                raise NodalLabError("negative degree")
            valid = index in (0, 1) if self.n == 2 else -degree <= index <= degree
            if degree == 0:
                valid = index == 0
            if not valid:
                raise NodalLabError(f"invalid basis index {index} for degree {degree}")

    @property
    def value_at_zero(self) -> float:
        return float(sum(c for d, c, _ in self.terms if d == 0))

    @property
    def max_degree(self) -> int:
        return max((d for d, _, _ in self.terms), default=0)

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts))
        for degree, coef, index in self.terms:
            out += coef * (1.0 if degree == 0 else _basis(self.n, degree, index, pts))
        return out if np.ndim(points) > 1 else out[0]

    def scaled(self, c: float) -> "HarmonicSample":
        return HarmonicSample(self.n, tuple((d, k * c, i) for d, k, i in self.terms), self.seed)

    def normalized(self) -> "HarmonicSample":
        """Rescaled so that ``u(0) = 1``."""
        v = self.value_at_zero
        if v <= 0:
            raise NodalLabError("u(0) must be positive to normalize")
        return self.scaled(1.0 / v)


def make_harmonic(description: Sequence[tuple[int, float, int]], n: int = 2) -> HarmonicSample:
    return HarmonicSample(n, tuple((int(d), float(c), int(i)) for d, c, i in description))


def random_harmonic(n: int = 2, k_max: int = 8, seed: int = 0, scale: float = 1.0) -> HarmonicSample:
    """``1 + scale * sum g * basis`` over all basis elements of degree 1..k_max."""
    rng = np.random.Generator(np.random.Philox(seed))
    terms = [(0, 1.0, 0)]
    for degree in range(1, k_max + 1):
        indices = (0, 1) if n == 2 else range(-degree, degree + 1)
        for index in indices:
            terms.append((degree, float(scale * rng.standard_normal()), index))
    return HarmonicSample(n, tuple(terms), seed)


def _sphere_points(n: int, count: int | None = None) -> np.ndarray:
    count = count or SPHERE_SAMPLES[n]
    if n == 2:
        t = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    i = np.arange(count) + 0.5
    phi = np.arccos(1 - 2 * i / count)
    theta = np.pi * (1 + 5**0.5) * i
    pts = np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)
    poles = np.array([[0, 0, 1.0], [0, 0, -1.0], [1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]])
    return np.concatenate([pts, poles])


def sphere_max(u: HarmonicSample, center, radius: float, signed: bool = True) -> tuple[float, np.ndarray]:
    """Max of ``u`` (or ``|u|``) over the closed ball, located on its sphere."""
    pts = np.asarray(center, dtype=float) + radius * _sphere_points(u.n)
    vals = u(pts)
    if not signed:
        vals = np.abs(vals)
    i = int(np.argmax(vals))
    return float(vals[i]), pts[i]


def harmonic_growth(u: HarmonicSample, center=None, radius: float = 1.0) -> float:
    """``log(sup_B |u| / sup_{B/2} |u|)``."""
    center = np.zeros(u.n) if center is None else center
    full, _ = sphere_max(u, center, radius, signed=False)
    half, _ = sphere_max(u, center, radius / 2, signed=False)
    if half <= 0:
        raise NodalLabError("u vanishes on the half ball")
    return math.log(full / half)


def _ball_grid(n: int, center, radius: float, resolution: int) -> tuple[np.ndarray, float]:
    h = 2 * radius / resolution
    axis = -radius + (np.arange(resolution) + 0.5) * h
    mesh = np.meshgrid(*[axis] * n, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    pts = pts[np.einsum("ij,ij->i", pts, pts) <= radius * radius]
    return pts + np.asarray(center, dtype=float), h**n


def positive_volume(u: HarmonicSample, center=None, radius: float = 1.0,
                    resolution: int | None = None) -> float:
    """Midpoint-rule volume of ``{u > 0}`` inside the ball (zeros count half)."""
    center = np.zeros(u.n) if center is None else center
    resolution = resolution or (400 if u.n == 2 else 80)
    pts, w = _ball_grid(u.n, center, radius, resolution)
    vals = u(pts)
    return float((np.count_nonzero(vals > 0) + 0.5 * np.count_nonzero(vals == 0)) * w)


def positive_fraction(u: HarmonicSample, center=None, radius: float = 1.0,
                      resolution: int | None = None) -> float:
    return positive_volume(u, center, radius, resolution) / (unit_ball_volume(u.n) * radius**u.n)


@dataclass(frozen=True)
class MeanValueCheck:
    vol_pos: float
    sup: float
    bound: float
    passed: bool


def mean_value_check(u: HarmonicSample, resolution: int | None = None, slack: float = 0.02
                     ) -> MeanValueCheck:
    """Check ``Vol({u>0} in B_1) * M >= Vol(B_1)`` after normalizing ``u(0) = 1``."""
    if u.value_at_zero <= 0:
        raise NodalLabError("mean-value check needs u(0) > 0")
    u = u.normalized()
    M, _ = sphere_max(u, np.zeros(u.n), 1.0)
    vol_b = unit_ball_volume(u.n)
    vol_pos = positive_volume(u, resolution=resolution)
    return MeanValueCheck(vol_pos, M, vol_b / M, vol_pos * M >= vol_b * (1 - slack))


@dataclass
class IterationResult:
    levels: list[dict] = field(default_factory=list)
    best_bound: float = 0.0
    resolved: bool = False
    beta: float = 0.0
    log_m: float = 0.0
    vol_pos_fraction: float = 0.0
    product_beta_n_minus_1: float = 0.0
    product_beta_n: float = 0.0


def iteration_experiment(u: HarmonicSample, depth: int = 6, resolution: int | None = None
                         ) -> IterationResult:
    """Run the dyadic improvement of the mean-value positivity bound.

    State: a center ``c`` with ``u(c) = v > 0``, a ball ``B(c, R)`` inside the
    unit ball and the sup ratio ``Q = sup_{B(c,R)} u / v`` (initially
    ``M = sup_{B_1} u`` with ``u(0) = 1``). At each level, with
    ``s = sup_{B(c,R/2)} u``:

    * if ``s / v <= Q^(1/2)`` the mean value property on ``B(c, R/2)`` certifies
      ``|{u>0}| / |B_1| >= (R/2)^n v / s >= (R/2)^n Q^(-1/2)`` and the
      dichotomy is resolved;
    * otherwise move to the sphere point ``x`` with ``u(x) = s`` and continue
      with ``B(x, R/2)``, whose sup ratio is below ``Q^(1/2)``.

    Every level also records the certified bound ``R^n v / sup_{B(c,R)} u``.
    Fractions are relative to ``|B_1|``.
    """
    if depth > 6 or depth < 1:
        raise NodalLabError("depth must be in 1..6")
    u = u.normalized()
    n = u.n
    center = np.zeros(n)
    R, v = 1.0, 1.0
    S, _ = sphere_max(u, center, R)
    M = S
    Q = S / v
    result = IterationResult(log_m=math.log(M) if M > 0 else 0.0)
    for level in range(depth):
        s, x = sphere_max(u, center, R / 2)
        ball_bound = R**n * v / S
        half_bound = (R / 2) ** n * v / s
        resolved = s / v <= math.sqrt(Q) * (1 + 1e-12)
        result.levels.append({
            "level": level, "center": center.tolist(), "radius": R, "value": v,
            "sup": S, "ratio": Q, "half_sup": s, "resolved": resolved,
            "ball_bound": ball_bound, "half_bound": half_bound,
            "ball_positive_fraction": positive_fraction(u, center, R, resolution),
        })
        result.best_bound = max(result.best_bound, ball_bound, half_bound)
        if resolved:
            result.resolved = True
            break
        center, v, R = x, s, R / 2
        S, _ = sphere_max(u, center, R)
        Q = S / v
    result.vol_pos_fraction = positive_fraction(u, resolution=resolution)
    try:
        result.beta = harmonic_growth(u)
    except NodalLabError:
        result.beta = 0.0
    beta_eff = max(result.beta, math.log(2))
    result.product_beta_n_minus_1 = result.vol_pos_fraction * beta_eff ** (n - 1)
    result.product_beta_n = result.vol_pos_fraction * beta_eff**n
    return result
