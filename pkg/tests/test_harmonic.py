import math

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from nodallab.exceptions import NodalLabError
from nodallab.harmonic import (harmonic_growth, iteration_experiment, make_harmonic,
                               mean_value_check, positive_fraction, random_harmonic, sphere_max)

X, Y, Z = sp.symbols("x y z", real=True)


def sympy_solid_harmonic(l, m):
    """Real regular solid harmonic via associated Legendre functions (no Condon-Shortley phase)."""
    r = sp.sqrt(X**2 + Y**2 + Z**2)
    rho = sp.sqrt(X**2 + Y**2)
    norm = sp.sqrt(sp.factorial(l - abs(m)) / sp.factorial(l + abs(m)))
    legendre = (-1) ** abs(m) * sp.assoc_legendre(l, abs(m), Z / r)
    phi = sp.atan2(Y, X)
    ang = sp.cos(abs(m) * phi) if m >= 0 else sp.sin(abs(m) * phi)
    return norm * r**l * legendre * ang, rho


@pytest.mark.parametrize("l,m", [(1, 0), (1, 1), (2, -1), (3, 2), (4, 0), (4, -3), (5, 5)])
def test_solid_harmonics_match_sympy(l, m):
    expr, _ = sympy_solid_harmonic(l, m)
    poly = sp.simplify(sp.expand_trig(expr))
    f = sp.lambdify((X, Y, Z), expr, "numpy")
    rng = np.random.default_rng(l * 10 + m)
    pts = rng.uniform(-0.9, 0.9, size=(50, 3)) / math.sqrt(3)
    u = make_harmonic([(l, 1.0, m)], n=3)
    np.testing.assert_allclose(u(pts), f(*pts.T), atol=1e-12)
    lap = sp.diff(poly, X, 2) + sp.diff(poly, Y, 2) + sp.diff(poly, Z, 2)
    assert sp.simplify(lap) == 0


@pytest.mark.parametrize("k", range(1, 7))
def test_planar_basis_is_harmonic_exactly(k):
    w = sp.expand((X + sp.I * Y) ** k)
    for part, index in ((sp.re(w), 0), (sp.im(w), 1)):
        assert sp.simplify(sp.diff(part, X, 2) + sp.diff(part, Y, 2)) == 0
        f = sp.lambdify((X, Y), part, "numpy")
        pts = np.random.default_rng(k).uniform(-0.7, 0.7, size=(20, 2))
        np.testing.assert_allclose(make_harmonic([(k, 1.0, index)])(pts), f(*pts.T), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_finite_difference_laplacian_vanishes(n):
    u = random_harmonic(n=n, k_max=6, seed=9)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.4, 0.4, size=(100, n))
    h = 1e-3
    lap = sum(u(pts + h * e) - 2 * u(pts) + u(pts - h * e) for e in np.eye(n)) / h**2
    sup, _ = sphere_max(u, np.zeros(n), 1.0, signed=False)
    assert np.max(np.abs(lap)) < 1e-6 * 36 * sup + 1e-3 * h  # rounding floor of the stencil


def test_make_harmonic_examples():
    u = make_harmonic([(3, 1.0, 0)])
    r, t = 0.7, 0.4
    assert u((r * math.cos(t), r * math.sin(t))) == pytest.approx(r**3 * math.cos(3 * t))
    one = make_harmonic([(0, 1.0, 0)])
    assert sphere_max(one, (0, 0), 1.0)[0] == pytest.approx(1.0)
    lin = make_harmonic([(0, 1.0, 0), (1, 1.0, 0)])
    assert lin.value_at_zero == 1.0
    assert sphere_max(lin, (0, 0), 1.0)[0] == pytest.approx(2.0)
    with pytest.raises(NodalLabError):
        make_harmonic([(2, 1.0, 3)])


def test_mean_value_examples():
    one = mean_value_check(make_harmonic([(0, 1.0, 0)]))
    assert one.passed and one.sup == pytest.approx(1.0) and one.vol_pos == pytest.approx(math.pi, rel=0.01)
    lin = mean_value_check(make_harmonic([(0, 1.0, 0), (1, 1.0, 0)]))
    assert lin.passed and lin.sup == pytest.approx(2.0) and lin.vol_pos == pytest.approx(math.pi, rel=0.01)
    quart = mean_value_check(make_harmonic([(0, 1.0, 0), (4, 10.0, 0)]))
    assert quart.passed
    with pytest.raises(NodalLabError):
        mean_value_check(make_harmonic([(0, -1.0, 0), (1, 1.0, 0)]))


@pytest.mark.parametrize("k", range(1, 7))
def test_growth_of_re_zk(k):
    u = make_harmonic([(k, 1.0, 0)])
    assert harmonic_growth(u) == pytest.approx(k * math.log(2), rel=0.01)
    assert positive_fraction(u) == pytest.approx(0.5, abs=0.02)


def shifted_sector_fraction(k, eps):
    """Exact fraction of the unit disk where ``eps + r^k cos(k t) > 0``."""
    def integrand(t):
        c = math.cos(k * t)
        return 1.0 if c >= 0 else min(1.0, (eps / -c) ** (2 / k))
    kinks = [(2 * j + 1) * math.pi / (2 * k) for j in range(2 * k)]
    return quad(integrand, 0, 2 * math.pi, limit=400, points=kinks)[0] / (2 * math.pi)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
def test_iteration_near_re_zk(k):
    eps = 1e-3
    u = make_harmonic([(0, eps, 0), (k, 1.0, 0)])
    res = iteration_experiment(u)
    # the shift enlarges the positive set by O(eps^(2/k)), not O(eps)
    assert res.vol_pos_fraction == pytest.approx(shifted_sector_fraction(k, eps), rel=0.01)
    if k <= 3:
        assert res.vol_pos_fraction == pytest.approx(0.5, abs=0.02)
    # exact: beta = k log 2 + log(1 + eps) - log(1 + eps 2^k)
    assert abs(res.beta - k * math.log(2)) <= eps * 2**k * 1.01
    assert res.best_bound <= 0.5
    assert res.levels and res.levels[0]["ratio"] == pytest.approx(1 + 1 / eps, rel=1e-3)


def test_iteration_constant():
    res = iteration_experiment(make_harmonic([(0, 1.0, 0)]))
    assert res.resolved and len(res.levels) == 1
    assert res.levels[0]["ratio"] == pytest.approx(1.0)
    assert res.vol_pos_fraction == pytest.approx(1.0, abs=1e-3)


def test_iteration_depth_limits():
    u = make_harmonic([(0, 1.0, 0)])
    for depth in (0, 7):
        with pytest.raises(NodalLabError):
            iteration_experiment(u, depth=depth)


def test_iteration_levels_halve_radius():
    res = iteration_experiment(make_harmonic([(0, 1e-3, 0), (5, 1.0, 1)]))
    radii = [lvl["radius"] for lvl in res.levels]
    assert radii == [2.0**-j for j in range(len(radii))]
    for lvl in res.levels:
        assert lvl["ball_bound"] <= lvl["ball_positive_fraction"] * 1.02 + 1e-12


def test_mean_value_ensemble():
    for seed in range(50):
        assert mean_value_check(random_harmonic(n=2, k_max=8, seed=seed)).passed


def test_ensemble_positivity_floor():
    products = []
    for seed in range(50):
        res = iteration_experiment(random_harmonic(n=2, k_max=8, seed=seed))
        assert res.vol_pos_fraction > 0
        products.append(res.product_beta_n_minus_1)
    c = min(products)
    assert c > 0
    assert c == pytest.approx(GOLDEN_ENSEMBLE_FLOOR, rel=1e-9)


GOLDEN_ENSEMBLE_FLOOR = 0.6907870268483722  # measured once, frozen
