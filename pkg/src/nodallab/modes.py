"""Exact Laplace eigenfunctions on flat boxes and tori.

A mode is a finite sum of terms sharing one eigenvalue ``lam = |omega|^2``,
where ``omega_i = k_i * 2*pi/L_i`` on a torus and ``k_i * pi/L_i`` on a
Dirichlet box (so integer ``k`` and ``lam = sum k_i^2`` with default sides).

Two kinds of term are supported:

* plane waves ``a * cos(omega . x)`` / ``a * sin(omega . x)`` (``phase`` is a
  string), used by random waves on tori;
* separable products ``a * prod_i f_i(omega_i x_i)`` with ``f_i`` in
  ``{sin, cos}`` (``phase`` is a per-axis tuple).

Internally every mode is expanded into separable products with nonnegative
frequencies, which are mutually orthogonal; that gives closed-form L2 norms
and fast sampling by outer products.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .exceptions import DomainError, GridMismatchError, ModeError, NotAnEigenvalueError
from .geometry import Domain, GridSpec, ScalarField, domain_from_dict

SIN, COS = "sin", "cos"


@dataclass(frozen=True)
class Term:
    amplitude: float
    k: tuple[int, ...]
    phase: str | tuple[str, ...]

    @property
    def is_plane(self) -> bool:
        return isinstance(self.phase, str)

    def to_dict(self) -> dict:
        phase = self.phase if self.is_plane else list(self.phase)
        return {"amplitude": self.amplitude, "k": list(self.k), "phase": phase}

    @classmethod
    def from_dict(cls, d: dict) -> "Term":
        phase = d["phase"]
        phase = phase if isinstance(phase, str) else tuple(phase)
        return cls(float(d["amplitude"]), tuple(int(v) for v in d["k"]), phase)


@dataclass(frozen=True)
class EigenvalueEntry:
    lam: float
    multiplicity: int
    vectors: tuple[tuple[int, ...], ...]


def _bases(domain: Domain) -> np.ndarray:
    factor = 2 * math.pi if domain.is_torus else math.pi
    return np.array([factor / L for L in domain.sides])


def _default_sides(domain: Domain) -> bool:
    return bool(np.allclose(_bases(domain), 1.0, rtol=0, atol=1e-14))


def eigenvalue_of(domain: Domain, k: Sequence[int]) -> float:
    if _default_sides(domain):
        return float(sum(int(v) ** 2 for v in k))
    return float(np.sum((np.asarray(k) * _bases(domain)) ** 2))


def _lattice(domain: Domain, lambda_max: float) -> tuple[np.ndarray, np.ndarray]:
    """All admissible frequency vectors with eigenvalue <= lambda_max."""
    bases = _bases(domain)
    ranges = []
    for b in bases:
        kmax = int(math.floor(math.sqrt(max(lambda_max, 0.0)) / b + 1e-9))
        ranges.append(np.arange(-kmax, kmax + 1) if domain.is_torus else np.arange(1, kmax + 1))
    if any(len(r) == 0 for r in ranges):
        return np.zeros((0, domain.n), dtype=np.int64), np.zeros(0)
    ks = np.stack([m.ravel() for m in np.meshgrid(*ranges, indexing="ij")], axis=-1).astype(np.int64)
    if _default_sides(domain):
        lam = np.sum(ks * ks, axis=1).astype(float)
    else:
        lam = np.sum((ks * bases) ** 2, axis=1)
    keep = lam <= lambda_max + 1e-9 * max(1.0, lambda_max)
    return ks[keep], lam[keep]


def enumerate_eigenvalues(domain: Domain, lambda_max: float) -> list[EigenvalueEntry]:
    """Distinct eigenvalues up to ``lambda_max`` with exact multiplicities."""
    ks, lam = _lattice(domain, lambda_max)
    if len(lam) == 0:
        return []
    key = np.round(lam, 9)
    entries = []
    for value in np.unique(key):
        sel = ks[key == value]
        vectors = tuple(sorted(tuple(int(x) for x in v) for v in sel))
        entries.append(EigenvalueEntry(float(value), len(vectors), vectors))
    return entries


def lattice_vectors(domain: Domain, lam: float) -> list[tuple[int, ...]]:
    ks, values = _lattice(domain, lam)
    sel = ks[np.abs(values - lam) <= 1e-9 * max(1.0, lam)]
    return sorted(tuple(int(x) for x in v) for v in sel)


def _expand(term: Term, n: int) -> list[tuple[float, tuple[int, ...], tuple[str, ...]]]:
    """Rewrite a term as separable products with nonnegative frequencies."""
    if term.is_plane:
        states = [(term.amplitude, (), term.phase)]
        for _ in range(n):
            nxt = []
            for coef, phases, rest in states:
                if rest == COS:  # cos(t + R) = cos t cos R - sin t sin R
                    nxt += [(coef, phases + (COS,), COS), (-coef, phases + (SIN,), SIN)]
                else:  # sin(t + R) = sin t cos R + cos t sin R
                    nxt += [(coef, phases + (SIN,), COS), (coef, phases + (COS,), SIN)]
            states = nxt
        products = [(c, ph) for c, ph, rest in states if rest == COS]
    else:
        products = [(term.amplitude, tuple(term.phase))]
    out = []
    for coef, phases in products:
        kabs = []
        for ki, ph in zip(term.k, phases):
            if ph == SIN:
                if ki == 0:
                    coef = 0.0
                elif ki < 0:
                    coef = -coef
            kabs.append(abs(int(ki)))
        if coef != 0.0:
            out.append((coef, tuple(kabs), phases))
    return out


@dataclass(frozen=True, eq=False)
class EigenMode:
    domain: Domain
    lam: float
    terms: tuple[Term, ...]
    seed: int | None = None
    _separable: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.lam < 0:
            raise ModeError("eigenvalue must be nonnegative")
        merged: dict = {}
        for term in self.terms:
            if len(term.k) != self.domain.n:
                raise ModeError(f"frequency vector {term.k} has wrong length")
            if abs(eigenvalue_of(self.domain, term.k) - self.lam) > 1e-9 * max(1.0, self.lam):
                raise ModeError(f"term {term.k} does not have eigenvalue {self.lam}")
            if not self.domain.is_torus:
                if term.is_plane or any(p != SIN for p in term.phase) or min(term.k) < 1:
                    raise ModeError("Dirichlet modes use sin factors with k_i >= 1 only")
            elif not term.is_plane and len(term.phase) != self.domain.n:
                raise ModeError("need one phase selector per axis")
            for coef, kabs, phases in _expand(term, self.domain.n):
                merged[(kabs, phases)] = merged.get((kabs, phases), 0.0) + coef
        object.__setattr__(
            self, "_separable", tuple((c, k, p) for (k, p), c in sorted(merged.items()) if c != 0.0))

    @property
    def n(self) -> int:
        return self.domain.n

    @cached_property
    def l2_norm(self) -> float:
        total = 0.0
        for coef, kabs, _ in self._separable:
            factor = 1.0
            for ki, L in zip(kabs, self.domain.sides):
                factor *= L if ki == 0 else L / 2
            total += coef * coef * factor
        return math.sqrt(total)

    @property
    def amplitude_sum(self) -> float:
        return float(sum(abs(t.amplitude) for t in self.terms))

    def scaled(self, c: float) -> "EigenMode":
        terms = tuple(Term(t.amplitude * c, t.k, t.phase) for t in self.terms)
        return EigenMode(self.domain, self.lam, terms, self.seed)

    def normalized(self) -> "EigenMode":
        return self.scaled(1.0 / self.l2_norm)

    # -- evaluation -------------------------------------------------------
    def _check_points(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        p2 = p.reshape(-1, self.n)
        if not self.domain.is_torus:
            tol = 1e-12 * max(self.domain.sides)
            if np.any(p2 < -tol) or np.any(p2 > np.asarray(self.domain.sides) + tol):
                raise DomainError("point outside the box")
        return p2

    def __call__(self, points):
        return evaluate(self, points)

    def to_dict(self) -> dict:
        d = {**self.domain.to_dict(), "lambda": self.lam,
             "terms": [t.to_dict() for t in self.terms]}
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EigenMode":
        domain = domain_from_dict(d)
        terms = tuple(Term.from_dict(t) for t in d["terms"])
        return cls(domain, float(d["lambda"]), terms, d.get("seed"))

    @classmethod
    def from_json(cls, s: str) -> "EigenMode":
        return cls.from_dict(json.loads(s))


def _f(phase: str, t):
    return np.sin(t) if phase == SIN else np.cos(t)


def _df(phase: str, t):
    return np.cos(t) if phase == SIN else -np.sin(t)


def make_mode(domain: Domain, k: Sequence[int], phases: str | Sequence[str] | None = None,
              amplitude: float = 1.0) -> EigenMode:
    """Single-term eigenfunction.

    On a torus a string phase means a plane wave (``'sin'`` with ``k=(1, 0)``
    is ``sin x``); a sequence gives a separable product. On a Dirichlet box
    only sin factors are allowed and a string is broadcast to every axis.
    """
    k = tuple(int(v) for v in k)
    if len(k) != domain.n:
        raise ModeError(f"expected {domain.n} frequencies, got {len(k)}")
    if domain.is_torus:
        phase = COS if phases is None else (phases if isinstance(phases, str) else tuple(phases))
    else:
        phase = (SIN,) * domain.n if phases is None or phases == SIN else (
            (phases,) * domain.n if isinstance(phases, str) else tuple(phases))
        if any(p != SIN for p in phase):
            raise ModeError("cos factor requested on a Dirichlet box")
        if min(k) < 1:
            raise ModeError("Dirichlet frequencies must be >= 1")
    if isinstance(phase, tuple) and any(p not in (SIN, COS) for p in phase) or (
            isinstance(phase, str) and phase not in (SIN, COS)):
        raise ModeError(f"unknown phase selector {phase!r}")
    return EigenMode(domain, eigenvalue_of(domain, k), (Term(float(amplitude), k, phase),))


def make_random_wave(domain: Domain, lam: float, seed: int = 0) -> EigenMode:
    """Gaussian superposition over the whole eigenspace of ``lam`` on a torus.

    One standard normal is drawn per lattice vector (Philox generator, vectors
    in lexicographic order). A vector whose first nonzero entry is positive
    contributes ``g * cos(k . x)``; its negative ``-k`` contributes
    ``g * sin(k . x)``. The result is normalized to unit L2 norm.
    """
    if not domain.is_torus:
        raise ModeError("random waves are defined on tori only")
    vectors = lattice_vectors(domain, lam)
    if not vectors:
        raise NotAnEigenvalueError(f"{lam} is not an eigenvalue of the torus")
    rng = np.random.Generator(np.random.Philox(seed))
    coeffs = rng.standard_normal(len(vectors))
    terms = []
    for g, k in zip(coeffs, vectors):
        positive = next((v > 0 for v in k if v != 0), True)
        if positive:
            terms.append(Term(float(g), k, COS))
        else:
            terms.append(Term(float(g), tuple(-v for v in k), SIN))
    mode = EigenMode(domain, eigenvalue_of(domain, vectors[0]), tuple(terms), seed)
    if mode.l2_norm == 0:  # only the constant mode can give this with a zero draw
        raise NotAnEigenvalueError("degenerate random wave")
    return mode.normalized()


def evaluate(mode: EigenMode, points):
    """Value(s) of the mode at one point ``(n,)`` or many ``(m, n)``."""
    p = mode._check_points(points)
    omega = _bases(mode.domain)
    out = np.zeros(len(p))
    for coef, kabs, phases in mode._separable:
        prod = np.full(len(p), coef)
        for i, (ki, ph) in enumerate(zip(kabs, phases)):
            prod *= _f(ph, ki * omega[i] * p[:, i])
        out += prod
    return float(out[0]) if np.ndim(points) == 1 else out


def evaluate_gradient(mode: EigenMode, points) -> np.ndarray:
    p = mode._check_points(points)
    omega = _bases(mode.domain)
    grad = np.zeros_like(p)
    for coef, kabs, phases in mode._separable:
        fs = [_f(ph, ki * omega[i] * p[:, i]) for i, (ki, ph) in enumerate(zip(kabs, phases))]
        for j, (kj, ph) in enumerate(zip(kabs, phases)):
            if kj == 0:
                continue
            g = coef * kj * omega[j] * _df(ph, kj * omega[j] * p[:, j])
            for i in range(mode.n):
                if i != j:
                    g = g * fs[i]
            grad[:, j] += g
    return grad[0] if np.ndim(points) == 1 else grad


def _check_grid(mode: EigenMode, grid: GridSpec) -> None:
    if grid.domain != mode.domain:
        raise GridMismatchError("grid and mode live on different domains")


def _outer_sum(mode: EigenMode, grid: GridSpec, derivative_axis: int | None = None) -> np.ndarray:
    omega = _bases(mode.domain)
    axes = grid.axes()
    out = np.zeros(grid.shape)
    for coef, kabs, phases in mode._separable:
        if derivative_axis is not None and kabs[derivative_axis] == 0:
            continue
        acc = np.array(coef)
        for i, (ki, ph) in enumerate(zip(kabs, phases)):
            t = ki * omega[i] * axes[i]
            vec = ki * omega[i] * _df(ph, t) if i == derivative_axis else _f(ph, t)
            acc = np.multiply.outer(acc, vec)
        out += acc
    return out


def sample(mode: EigenMode, grid: GridSpec) -> ScalarField:
    _check_grid(mode, grid)
    return ScalarField(grid, _outer_sum(mode, grid))


def sample_gradient(mode: EigenMode, grid: GridSpec) -> np.ndarray:
    """Closed-form gradient on the grid, shape ``(n, *grid.shape)``."""
    _check_grid(mode, grid)
    return np.stack([_outer_sum(mode, grid, j) for j in range(mode.n)])


def fd_laplacian(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Second-order Laplacian; periodic on tori, undefined (NaN) on box faces."""
    out = np.zeros_like(values, dtype=float)
    for axis, h in enumerate(grid.spacing):
        if grid.domain.is_torus:
            out += (np.roll(values, 1, axis) - 2 * values + np.roll(values, -1, axis)) / h**2
        else:
            lap = np.full_like(values, np.nan, dtype=float)
            inner = [slice(None)] * grid.n
            lo, mid, hi = list(inner), list(inner), list(inner)
            lo[axis], mid[axis], hi[axis] = slice(0, -2), slice(1, -1), slice(2, None)
            lap[tuple(mid)] = (values[tuple(lo)] - 2 * values[tuple(mid)] + values[tuple(hi)]) / h**2
            out += lap
    return out


def laplacian_residual(mode: EigenMode, grid: GridSpec) -> float:
    """``max |Delta_h phi + lam phi|`` over interior grid points."""
    values = sample(mode, grid).values
    res = fd_laplacian(values, grid) + mode.lam * values
    return float(np.nanmax(np.abs(res)))


def eigenspace_basis(domain: Domain, lam: float, grid: GridSpec) -> np.ndarray:
    """Orthonormal (discrete) basis of the sampled eigenspace, shape ``(d, N)``."""
    vectors = lattice_vectors(domain, lam)
    if not vectors:
        raise NotAnEigenvalueError(f"{lam} is not an eigenvalue")
    cols = []
    for k in vectors:
        if domain.is_torus:
            for ph in (COS, SIN):
                cols.append(sample(EigenMode(domain, lam, (Term(1.0, k, ph),)), grid).flat)
        else:
            cols.append(sample(make_mode(domain, k), grid).flat)
    q, r = np.linalg.qr(np.stack(cols, axis=1))
    keep = np.abs(np.diag(r)) > 1e-8 * np.max(np.abs(np.diag(r)))
    return q[:, keep].T


def all_catalog_modes(domain: Domain, lambda_max: float) -> list[EigenMode]:
    """One single-term mode per frequency vector and phase pattern."""
    modes = []
    for entry in enumerate_eigenvalues(domain, lambda_max):
        for k in entry.vectors:
            if domain.is_torus:
                for phases in itertools.product((SIN, COS), repeat=domain.n):
                    if all(ki >= 0 for ki in k) and not any(
                            ph == SIN and ki == 0 for ph, ki in zip(phases, k)):
                        modes.append(make_mode(domain, k, phases))
            else:
                modes.append(make_mode(domain, k))
    return modes
