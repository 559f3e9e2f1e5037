import csv
import math

import numpy as np
import pytest

from nodallab.exceptions import NodalLabError, OneSignedFieldError
from nodallab.geometry import Ball, GridSpec, ScalarField, ball_volume, grid_for_wavelength, make_domain
from nodallab.modes import all_catalog_modes, make_mode, make_random_wave, sample
from nodallab.nodal import (extract_nodal_set, is_vanishing, isoperimetric_constant, local_density,
                            nodal_measure_in_ball, pack_nodal_balls, sign_volumes, write_mesh_csv,
                            write_mesh_gnuplot)


def sin_x(domain, res=128, a=1):
    return sample(make_mode(domain, (a, 0), "sin"), GridSpec(domain, res))


def test_positive_field_has_empty_mesh(torus2):
    f = ScalarField(GridSpec(torus2, 16), np.full(256, 2.0))
    mesh = extract_nodal_set(f)
    assert len(mesh) == 0 and mesh.total_measure == 0
    assert nodal_measure_in_ball(mesh, Ball((1.0, 1.0), 0.5)) == 0


def test_sin_x_two_circles(torus2):
    mesh = extract_nodal_set(sin_x(torus2))
    assert mesh.total_measure == pytest.approx(4 * math.pi, rel=0.01)
    assert mesh.total_measure == pytest.approx(np.sum(mesh.measures))


def test_product_mode_line_count():
    # nodal lines x = j pi / 2 and y = j pi / 3: 2a + 2b circles of length 2 pi
    T = make_domain("torus", 2)
    mesh = extract_nodal_set(sample(make_mode(T, (2, 3), ("sin", "sin")), GridSpec(T, 512)))
    assert mesh.total_measure == pytest.approx(20 * math.pi, rel=0.01)


def test_cell_vertices_interpolate_zero(torus2):
    from nodallab.modes import evaluate
    m = make_random_wave(torus2, 25, seed=4)
    mesh = extract_nodal_set(sample(m, GridSpec(torus2, 96)))
    vals = evaluate(m, torus2.wrap(mesh.vertices))
    # linear interpolation error is O(h^2 lam)
    assert np.max(np.abs(vals)) < 0.01 * np.max(np.abs(sample(m, GridSpec(torus2, 96)).values))


def test_box_boundary_not_counted(box2):
    mesh = extract_nodal_set(sample(make_mode(box2, (1, 1)), GridSpec(box2, 65)))
    assert mesh.total_measure == 0
    mesh = extract_nodal_set(sample(make_mode(box2, (2, 3)), GridSpec(box2, 129)))
    assert mesh.total_measure == pytest.approx(3 * math.pi, rel=0.01)


def test_chord_through_ball(torus2):
    f = sin_x(torus2)
    mesh = extract_nodal_set(f)
    assert nodal_measure_in_ball(mesh, Ball((0.0, 2.0), 0.5)) == pytest.approx(1.0, rel=0.02)
    assert nodal_measure_in_ball(mesh, Ball((math.pi / 2, 2.0), 0.5)) == 0


def test_sign_volumes_odd_symmetry(torus2):
    f = sin_x(torus2)
    for r in (0.3, 1.0, 2.5):
        vp, vn = sign_volumes(f, Ball((0.0, 1.7), r))
        assert vp == pytest.approx(vn, rel=0.02)
        assert vp + vn <= ball_volume(Ball((0, 0), r)) * 1.05


def test_sign_volumes_constant(torus2):
    grid = GridSpec(torus2, 128)
    vp, vn = sign_volumes(ScalarField(grid, np.ones(grid.size)), Ball((3.0, 3.0), 1.0))
    assert vp == pytest.approx(math.pi, rel=0.02) and vn == 0


def test_sign_volumes_quadrants(torus2):
    f = sample(make_mode(torus2, (1, 1), ("sin", "sin")), GridSpec(torus2, 256))
    vp, vn = sign_volumes(f, Ball((0.0, 0.0), 0.5))
    half = ball_volume(Ball((0, 0), 0.5)) / 2
    assert vp == pytest.approx(half, rel=0.03) and vn == pytest.approx(half, rel=0.03)


def test_isoperimetric_closed_forms():
    half_disk = isoperimetric_constant(math.pi / 2, math.pi / 2, 2.0, 2)
    assert half_disk == pytest.approx(2 / math.sqrt(math.pi / 2))
    assert half_disk == pytest.approx(1.596, abs=1e-3)
    assert isoperimetric_constant(0.0, 1.0, 0.5, 2) == math.inf
    r = 2.0
    scaled = isoperimetric_constant(math.pi * r * r / 2, math.pi * r * r / 2, 2 * r, 2)
    assert scaled / half_disk == pytest.approx(1.0)
    with pytest.raises(NodalLabError):
        isoperimetric_constant(1.0, 1.0, 0.0, 2)


def test_isoperimetric_measured_scale_invariant(torus2):
    f = sin_x(torus2, 256)
    mesh = extract_nodal_set(f)
    consts = []
    for r in (0.5, 1.0):
        b = Ball((0.0, 2.0), r)
        consts.append(isoperimetric_constant(*sign_volumes(f, b), nodal_measure_in_ball(mesh, b), 2))
    assert consts[0] == pytest.approx(1.596, rel=0.03)
    assert consts[0] == pytest.approx(consts[1], rel=0.03)


def test_isoperimetric_golden_floor(torus2):
    # lowest measured constant over all packed balls of catalog modes with lam <= 10
    values = []
    for m in all_catalog_modes(torus2, 10):
        f = sample(m, GridSpec(torus2, 128))
        if not (f.values.max() > 0 and f.values.min() < 0):
            continue
        mesh = extract_nodal_set(f)
        for b in pack_nodal_balls(f, m.lam, 1.0, mesh).balls:
            vp, vn = sign_volumes(f, b)
            assert min(vp, vn) > 0
            values.append(isoperimetric_constant(vp, vn, nodal_measure_in_ball(mesh, b), 2))
    assert len(values) == 1298
    assert min(values) == pytest.approx(1.5567354353777183, rel=1e-6)


def test_local_density(torus2):
    f = sin_x(torus2, 256)
    mesh = extract_nodal_set(f)
    d = local_density(f, Ball((0.0, 3.0), 1.0), mesh)
    assert d == pytest.approx(1 / math.pi, rel=0.02)
    empty = extract_nodal_set(ScalarField(f.grid, np.ones(f.grid.size)))
    assert local_density(f, Ball((0.0, 3.0), 1.0), empty) == 0


@pytest.mark.parametrize("a", [1, 2, 3, 4, 5])
def test_packing_sin_ax(torus2, a):
    m = make_mode(torus2, (a, 0), "sin")
    f = sample(m, grid_for_wavelength(torus2, m.lam))
    pack = pack_nodal_balls(f, m.lam, math.pi / 2)
    assert pack.radius == pytest.approx(math.pi / (2 * a))
    assert pack.count >= a * a
    assert pack.min_center_distance(torus2) > 2 * pack.radius
    assert pack.total_volume() <= torus2.volume
    for b in pack.balls:
        assert is_vanishing(f, b)


def test_packing_random_wave_invariants(torus2):
    m = make_random_wave(torus2, 100, seed=3)
    f = sample(m, grid_for_wavelength(torus2, m.lam))
    pack = pack_nodal_balls(f, m.lam)
    assert pack.count > 0
    assert pack.min_center_distance(torus2) > 2 * pack.radius
    assert pack.total_volume() <= torus2.volume
    again = pack_nodal_balls(f, m.lam)
    assert [b.center for b in again.balls] == [b.center for b in pack.balls]


def test_packing_box_stays_inside(box2):
    m = make_mode(box2, (3, 2))
    f = sample(m, GridSpec(box2, 129))
    pack = pack_nodal_balls(f, m.lam)
    assert pack.count > 0
    assert not any(b.clipped(box2) for b in pack.balls)


def test_packing_errors(torus2):
    grid = GridSpec(torus2, 64)
    with pytest.raises(OneSignedFieldError):
        pack_nodal_balls(ScalarField(grid, np.ones(grid.size)), 1.0)
    with pytest.raises(NodalLabError):
        pack_nodal_balls(sin_x(torus2, 16), 100.0)  # radius below two grid spacings


@pytest.mark.parametrize("k,phase", [((1, 0), "sin"), ((1, 1), "cos"), ((2, 1), ("sin", "cos")),
                                     ((0, 3), "sin")])
def test_measure_stable_under_refinement(torus2, k, phase):
    m = make_mode(torus2, k, phase)
    a = extract_nodal_set(sample(m, GridSpec(torus2, 256))).total_measure
    b = extract_nodal_set(sample(m, GridSpec(torus2, 512))).total_measure
    assert abs(a - b) / b < 0.01


def test_three_dimensional_meshes():
    T3 = make_domain("torus", 3)
    mesh = extract_nodal_set(sample(make_mode(T3, (1, 0, 0), "sin"), GridSpec(T3, 32)))
    assert mesh.cells.shape[1:] == (3, 3)
    assert mesh.total_measure == pytest.approx(8 * math.pi**2, rel=0.01)  # two planes of area 4 pi^2
    inside = nodal_measure_in_ball(mesh, Ball((0.0, 3.0, 3.0), 0.8))
    assert inside == pytest.approx(math.pi * 0.8**2, rel=0.03)
    B3 = make_domain("box", 3)
    mesh = extract_nodal_set(sample(make_mode(B3, (2, 1, 1)), GridSpec(B3, 129)))
    assert mesh.total_measure == pytest.approx(math.pi**2, rel=0.02)


def test_four_dimensional_meshing_unsupported():
    T4 = make_domain("torus", 4)
    with pytest.raises(NodalLabError):
        extract_nodal_set(sample(make_mode(T4, (1, 0, 0, 0), "sin"), GridSpec(T4, 8)))


def test_mesh_exports(torus2, tmp_path):
    mesh = extract_nodal_set(sin_x(torus2, 32))
    path = write_mesh_csv(mesh, tmp_path / "mesh.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["v0_x0", "v0_x1", "v1_x0", "v1_x1", "measure"]
    assert len(rows) == len(mesh) + 1
    assert sum(float(r[-1]) for r in rows[1:]) == pytest.approx(mesh.total_measure)
    text = write_mesh_gnuplot(mesh, tmp_path / "mesh.dat").read_text()
    assert len([b for b in text.split("\n\n") if b.strip()]) == len(mesh)
