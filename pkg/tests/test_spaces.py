import numpy as np
import pytest

from metricsphere import (
    SNOWBALL_SIMILARITY_DIMENSION,
    alpha_patch_sphere,
    bilipschitz_warp,
    read_off,
    round_sphere,
    snowball,
    snowball_embedding_report,
    snowball_from_json,
    snowball_mesh,
    snowball_space,
    snowball_to_json,
    write_off,
)
from metricsphere.errors import (
    BadAlpha,
    FileMissing,
    LevelTooDeep,
    NotASphereMesh,
)
from metricsphere.spaces import alpha_chart_distance, edges_from_triangles


# ------------------------------------------------------------- icospheres


def test_icosphere_counts_and_norms():
    for lvl in (0, 1, 2):
        mesh = round_sphere(lvl)
        assert mesh.n_vertices(lvl) == 10 * 4 ** lvl + 2
        assert len(mesh.triangles(lvl)) == 20 * 4 ** lvl
        np.testing.assert_allclose(np.linalg.norm(mesh.coords, axis=1), 1.0,
                                   atol=1e-12)


def test_subdivision_keeps_vertex_prefix():
    mesh = round_sphere(2)
    coarse = round_sphere(1)
    np.testing.assert_allclose(mesh.coords[:coarse.n_vertices(1)],
                               coarse.coords)
    # every level is a closed triangulated surface: 3F = 2E, V - E + F = 2
    for lvl in (0, 1, 2):
        tris = mesh.triangles(lvl)
        E = edges_from_triangles(tris)
        assert 3 * len(tris) == 2 * len(E)
        assert mesh.n_vertices(lvl) - len(E) + len(tris) == 2


def test_level_guard():
    with pytest.raises(LevelTooDeep):
        round_sphere(99)
    with pytest.raises(LevelTooDeep):
        snowball(17)


def test_space_carries_mesh_adjacency(round3_mesh):
    Z = round3_mesh.space()
    assert Z.mesh_connected()
    assert Z.diam == pytest.approx(2.0, abs=1e-9)
    deg = sorted(len(Z.neighbors(i)) for i in range(12))
    assert deg == [5] * 12  # the original icosahedron corners keep valence 5


# ------------------------------------------------------------- warped copies


def test_warp_respects_edge_ratio_bound(round3_mesh):
    for L in (1.2, 2.0):
        warped = bilipschitz_warp(round3_mesh, L, seed=1)
        base = round3_mesh.edge_lengths()
        new = warped.edge_lengths()
        r = new / base
        assert r.max() <= L + 1e-9
        assert r.min() >= 1.0 / L - 1e-9
    ident = bilipschitz_warp(round3_mesh, 1.0)
    np.testing.assert_array_equal(ident.coords, round3_mesh.coords)
    with pytest.raises(BadAlpha):
        bilipschitz_warp(round3_mesh, 0.5)


def test_warp_actually_moves_points(round3_mesh):
    warped = bilipschitz_warp(round3_mesh, 2.0, seed=1)
    assert np.abs(warped.coords - round3_mesh.coords).max() > 1e-3


# ----------------------------------------------------------------- snowball


def test_snowball_square_counts():
    cx = snowball(2)
    assert cx.counts() == [6, 174, 5046]   # 6 * 29**k


def test_snowball_level1_embeds():
    cx = snowball(1)
    assert snowball_embedding_report(cx, 0) == 0
    assert snowball_embedding_report(cx, 1) == 0


def test_snowball_similarity_dimension():
    assert SNOWBALL_SIMILARITY_DIMENSION == pytest.approx(
        np.log(29.0) / np.log(5.0))
    assert SNOWBALL_SIMILARITY_DIMENSION > 2.0


def test_snowball_replacement_preserves_boundary():
    cx = snowball(1)
    lv0, lv1 = cx.levels
    # subdivision multiplies coordinates by 5; the five top squares of each
    # bump sit one unit above the carried face
    assert lv1.exponent == lv0.exponent + 1
    assert lv1.count == 29 * lv0.count
    # all corners stay on the integer grid of the level
    assert lv1.corners.dtype == np.int64


def test_snowball_sample_connectivity(snow1_sample):
    Z = snow1_sample.space
    assert Z.mesh_connected()
    # corners + one center per square
    n_centers = len(snow1_sample.center_ids)
    assert n_centers == 174
    assert Z.n == len(snow1_sample.corner_ids) + n_centers


def test_snowball_json_roundtrip():
    cx = snowball(1)
    back = snowball_from_json(snowball_to_json(cx))
    assert back.depth == cx.depth
    for a, b in zip(cx.levels, back.levels):
        assert a.exponent == b.exponent
        np.testing.assert_array_equal(a.corners, b.corners)
    with pytest.raises(FileMissing):
        snowball_from_json('{"format": "other"}')


def test_snowball_mesh_is_closed_surface():
    cx = snowball(1)
    mesh = snowball_mesh(cx)
    tris = mesh.triangles()
    E = edges_from_triangles(tris)
    assert 3 * len(tris) == 2 * len(E)
    assert len(mesh.coords) - len(E) + len(tris) == 2


# ----------------------------------------------------------- snowflake patch


def test_alpha_chart_distance_values():
    assert alpha_chart_distance((0, 0), (0.3, 0.0), 0.5) == pytest.approx(0.3)
    assert alpha_chart_distance((0, 0), (0.0, 0.25), 0.5) == pytest.approx(0.5)
    with pytest.raises(BadAlpha):
        alpha_chart_distance((0, 0), (1, 1), 1.5)


def test_alpha_patch_metric_is_sound():
    P = alpha_patch_sphere(0.5, level=2)
    Z = P.space
    sym, tri = Z.check_metric(triples=4000, seed=0)
    assert sym <= 1e-12
    assert tri <= 1e-9
    # inside the cap short hops cost more than chordal (snowflaked axis)
    cap = np.flatnonzero(P.in_cap)
    i = P.cap_center_id
    chord = np.linalg.norm(Z.coords[cap] - Z.coords[i], axis=1)
    snow = Z._matrix[i, cap]
    assert np.all(snow >= chord - 1e-12)
    assert snow.max() > chord.max() + 1e-3


def test_alpha_patch_guards():
    with pytest.raises(BadAlpha):
        alpha_patch_sphere(1.5, level=1)
    with pytest.raises(LevelTooDeep):
        alpha_patch_sphere(0.5, level=9)


def test_alpha_patch_adaptive_cap_sampling():
    P = alpha_patch_sphere(0.5, level=2, cap_radius=1.2, cap_scale=0.3)
    Z = P.space
    assert Z.adjacency is None
    sym, tri = Z.check_metric(triples=4000, seed=0)
    assert sym <= 1e-12
    assert tri <= 1e-9
    # the cap grid is anisotropic: columns cap_scale apart, rows
    # cap_scale**(1/alpha) apart, so it is metrically uniform
    cap = np.flatnonzero(P.in_cap)
    ch = P.chart[cap]
    xs = np.unique(np.round(ch[:, 0], 9))
    ys = np.unique(np.round(ch[:, 1], 9))
    assert np.allclose(np.diff(xs), 0.3, atol=1e-9)
    assert np.allclose(np.diff(ys), 0.3 ** 2, atol=1e-9)
    # vertical moves are snowflaked: one row down costs about
    # (cap_scale**2) ** alpha = cap_scale, far above its chordal length
    i = P.cap_center_id
    j = cap[np.argmin(np.abs(ch[:, 0]) + np.abs(np.abs(ch[:, 1]) - 0.09))]
    assert Z._matrix[i, j] == pytest.approx(0.3, rel=1e-6)
    # every glued route out of the cap dominates the chordal gap
    out = np.flatnonzero(~P.in_cap)
    assert Z._matrix[i, out].min() >= 2 * np.sin(1.2 / 2) - 1e-9
    with pytest.raises(BadAlpha):
        alpha_patch_sphere(0.5, level=2, cap_radius=1.2, cap_scale=1.3)


# ------------------------------------------------------------------ OFF I/O


def test_off_roundtrip(tmp_path, round3_mesh):
    path = tmp_path / "m.off"
    write_off(path, round3_mesh.coords, round3_mesh.triangles())
    back = read_off(path)
    np.testing.assert_allclose(back.coords, round3_mesh.coords, atol=0)
    np.testing.assert_array_equal(back.triangles(), round3_mesh.triangles())


def test_off_errors(tmp_path):
    with pytest.raises(FileMissing):
        read_off(tmp_path / "nope.off")
    bad = tmp_path / "quad.off"
    bad.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(NotASphereMesh):
        read_off(bad)
    not_off = tmp_path / "x.off"
    not_off.write_text("PLY\n")
    with pytest.raises(FileMissing):
        read_off(not_off)
