import numpy as np
import pytest

from roomgap.errors import ResolutionTooCoarse
from roomgap.geometry import Region, WaveguideParams, build_cell, validate_params
from roomgap.mesh import PeriodCellMesh, check_conformity, dump, mesh_quality, refine, tile, triangulate

from conftest import preset_mesh


def plain(eps="1/8", L=1, target=1 / 32):
    return triangulate(build_cell(validate_params(WaveguideParams.plain_strip(eps, L))), target)


def single(tri):
    v = np.array(tri, dtype=float)
    return PeriodCellMesh(v, np.array([[0, 1, 2]]), np.array([Region.STRIP], dtype=np.int8),
                          np.array([], dtype=np.int64), np.array([], dtype=np.int64), 1.0, {})


def test_plain_strip_structured_count():
    m = plain()
    # (eps/h + 1) x (L/h + 1) grid with h = eps/4
    assert m.n_vertices == 5 * 33
    assert len(m.triangles) == 2 * 4 * 32
    q = mesh_quality(m)
    assert np.ptp(q["aspect"]) < 1e-12  # congruent elements
    assert q["min_angle"] == pytest.approx(45.0)


def test_right_isosceles_min_angle():
    assert mesh_quality(single([(0, 0), (1, 0), (0, 1)]))["min_angle"] == pytest.approx(45.0)


@pytest.mark.parametrize("eps", ["1/4", "1/8", "1/16"])
def test_area_conservation_and_conformity(eps):
    params, m = preset_mesh(eps)
    cell = build_cell(params)
    expected = sum(cell.region_areas().values())
    area = m.areas()
    assert np.all(area > 0)
    assert area.sum() == pytest.approx(expected, rel=1e-12)
    for region, a in cell.region_areas().items():
        assert area[m.tags == region].sum() == pytest.approx(a, rel=1e-12)
    check_conformity(m)


def test_preset_quality_eps_eighth():
    _, m = preset_mesh("1/8")
    q = mesh_quality(m)
    assert q["min_angle"] >= 15.0
    assert all(q["counts"][r.name] > 0 for r in Region)


def test_pairing_bijection():
    _, m = preset_mesh("1/8")
    left, right = m.pairing()
    assert len(left) == len(right) > 0
    v = m.vertices
    assert np.all(v[left, 0] == 0.0) and np.all(v[right, 0] == m.width)
    assert np.all(np.abs(v[left, 1] - v[right, 1]) < 1e-12)


def test_interfaces_resolved():
    params, m = preset_mesh("1/8")
    cell = build_cell(params)
    px0, px1, _, ph = cell.passage_rect
    xs = m.vertices[:, 0]
    ys = m.vertices[:, 1]
    # mouth endpoints and passage top corners are mesh vertices
    for x, y in ((px0, 0.0), (px1, 0.0), (px0, ph), (px1, ph)):
        assert np.any((xs == x) & (ys == y))


def test_refine_quadruples_and_inherits_tags():
    _, m = preset_mesh("1/4")
    r = refine(m)
    assert len(r.triangles) == 4 * len(m.triangles)
    assert np.array_equal(np.bincount(r.tags, minlength=3), 4 * np.bincount(m.tags, minlength=3))
    assert r.areas().sum() == pytest.approx(m.areas().sum(), rel=1e-12)
    check_conformity(r)
    assert len(r.pairing()[0]) == 2 * len(m.pairing()[0]) - 1


def test_tile_merges_seams():
    _, m = preset_mesh("1/4")
    t = tile(m, 4)
    assert t.width == pytest.approx(1.0)
    assert len(t.triangles) == 4 * len(m.triangles)
    assert t.n_vertices == 4 * m.n_vertices - 3 * len(m.pairing()[0])
    check_conformity(t)


def test_deterministic():
    a = triangulate(build_cell(preset_mesh("1/8")[0]), 1 / 32)
    b = triangulate(build_cell(preset_mesh("1/8")[0]), 1 / 32)
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.triangles, b.triangles)


def test_too_coarse_without_grading():
    params, _ = preset_mesh("1/8")
    with pytest.raises(ResolutionTooCoarse):
        triangulate(build_cell(params), 1 / 32, grading=1.0)
    with pytest.raises(ResolutionTooCoarse):
        triangulate(build_cell(params), 1 / 32, passage_cols=3)


def test_dump_format():
    m = plain("1/2", 1, 1 / 2)
    text = dump(m).splitlines()
    assert text[1] == f"vertices {m.n_vertices}"
    tri_line = 2 + m.n_vertices
    assert text[tri_line] == f"triangles {len(m.triangles)}"
    assert text[tri_line + 1].split()[-1] == "STRIP"
    assert text[-2].startswith("right ")
