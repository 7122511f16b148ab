"""Graph approximations: builders, axiom verifier, stars, pushforwards."""

import json

import numpy as np
import pytest

from metricsphere import (
    ApproximationLadder,
    ApproxGraph,
    KApproximation,
    build_approximation,
    complex_approximation,
    greedy_net,
    max_separated_vertices,
    mesh_size,
    net_approximation,
    pushforward_approximation,
    round_sphere,
    verify_k_approximation,
    vertex_set_of,
    weak_uniform_perfectness,
)
from metricsphere.approx import (
    approximation_from_json,
    approximation_to_json,
    continuum_in_some_star,
    neighborhood,
    star,
)
from metricsphere.errors import (
    BadRadius,
    EmptyGraph,
    EmptyInfimumSet,
    MeshTooCoarse,
)
from metricsphere.metric_core import ContinuumSample, FiniteMetricSpace


def line_metric(xs, adjacency=True):
    xs = np.asarray(xs, dtype=float)
    coords = np.stack([xs, np.zeros_like(xs), np.zeros_like(xs)], axis=1)
    adj = None
    if adjacency:
        n = len(xs)
        adj = [np.array([j for j in (i - 1, i + 1) if 0 <= j < n], dtype=int)
               for i in range(n)]
    return FiniteMetricSpace(coords=coords, metric="chordal", adjacency=adj)


def toy_approximation(r=None):
    """Three-vertex chain over a five-point line, small enough to edit."""
    Z = line_metric([0.0, 0.5, 1.0, 1.5, 2.0])
    G = ApproxGraph.from_edges(3, [[0, 1], [1, 2]])
    r = np.array([0.6, 0.6, 0.6]) if r is None else np.asarray(r, float)
    cover = [np.array([0, 1]), np.array([1, 2, 3]), np.array([3, 4])]
    return KApproximation(G, Z, np.array([0, 2, 4]), r, cover)


# ------------------------------------------------------------------ builders


def test_icosahedron_level0_build():
    A = build_approximation(round_sphere(0), 0)
    assert A.graph.n == 12
    assert all(len(a) == 5 for a in A.graph.adj)
    assert A.k_report is not None and A.k_report <= 8
    assert A.graph.connected()


def test_ladder_vertex_counts(round_ladder):
    for A, level in zip(round_ladder.levels, (1, 2, 3)):
        assert A.graph.n == 10 * 4 ** level + 2
        assert A.graph.connected()
        assert A.k_report is not None


def test_mesh_sizes_decrease_geometrically(round_ladder):
    sizes = round_ladder.mesh_sizes()
    for a, b in zip(sizes, sizes[1:]):
        assert 0.4 <= b / a <= 0.62  # halved edges, modulo sphere re-projection
    assert round_ladder.k_bound == max(
        A.k_report for A in round_ladder.levels)


def test_mesh_size_uniform_and_empty():
    A = toy_approximation()
    assert mesh_size(A) == 0.6
    empty = KApproximation(ApproxGraph([]), A.space,
                           np.empty(0, int), np.empty(0), [])
    with pytest.raises(EmptyGraph):
        mesh_size(empty)


def test_ladder_guards(round_ladder):
    levels = round_ladder.levels
    with pytest.raises(BadRadius):
        ApproximationLadder([levels[2], levels[0]])
    other = build_approximation(round_sphere(2), 2)
    with pytest.raises(ValueError):
        ApproximationLadder([levels[0], other])


# ------------------------------------------------------------------ verifier


def test_verifier_self_consistency(round2_approx):
    rep = verify_k_approximation(round2_approx)
    assert rep.ok
    assert rep.k_report == round2_approx.k_report
    b = rep.bounds
    pieces = [b["valence"], b["cover_upper"], b["scale_ratio"],
              b["overlap_hops"], b["star_neighborhood"], b["star_connectivity"]]
    assert rep.k_report == max(pieces)


def test_verifier_flags_emptied_cover(round2_approx):
    A = round2_approx
    v = 7
    cover = [c.copy() for c in A.cover]
    cover[v] = np.empty(0, dtype=int)
    broken = KApproximation(A.graph, A.space, A.p, A.r, cover)
    rep = verify_k_approximation(broken)
    assert not rep.ok
    assert any(f"vertex {v}" in msg for msg in rep.violations)


def test_verifier_flags_inflated_scale(round2_approx):
    A = round2_approx
    r = A.r.copy()
    r[11] *= 2.0
    broken = KApproximation(A.graph, A.space, A.p, r,
                            [c.copy() for c in A.cover])
    rep = verify_k_approximation(broken)
    assert not rep.ok
    assert rep.bounds["scale_ratio"] >= 2


def test_cover_multiplicity_bounded_by_k_ball(round2_approx):
    A = round2_approx
    K = A.k_report
    mult = A.cover_multiplicity()
    assert mult.min() >= 1  # the cover actually covers
    largest_ball = max(len(A.graph.ball(v, K)) for v in range(A.graph.n))
    assert mult.max() <= largest_ball


def test_separated_net_is_weakly_perfect(round2_approx):
    # maximal L-separated vertices, L = K: their basepoints stay uniformly
    # perfect at the explicit dilation 16 L^2 K^(4+2L), and in fact already
    # at dilation 2 on this mesh
    A = round2_approx
    L = A.k_report
    W = max_separated_vertices(A, L)
    assert len(W) >= 2
    for w in W:
        d = A.graph.dists_from(int(w))[W]
        assert np.all(d[W != w] >= L)
    lam = 16.0 * L * L * float(A.k_report) ** (4 + 2 * L)
    ok, witness = weak_uniform_perfectness(A.p[W], A.space, lam)
    assert ok and witness is None
    assert weak_uniform_perfectness(A.p[W], A.space, 2.0)[0]


# ------------------------------------------------------- stars, vertex sets


def test_star_and_neighborhood_identities(round2_approx):
    A = round2_approx
    assert np.array_equal(star(5, 1, A), A.cover[5])
    S = np.array([3, 17])
    assert np.array_equal(neighborhood(A, S, 1), S)
    assert set(star(5, 2, A)) >= set(star(5, 1, A))
    assert set(neighborhood(A, S, 3)) >= set(neighborhood(A, S, 2))


def test_star2_is_neighbor_cover_union():
    A = build_approximation(round_sphere(0), 0)
    manual = np.unique(np.concatenate(
        [A.cover[0]] + [A.cover[int(u)] for u in A.graph.adj[0]]))
    assert np.array_equal(star(0, 2, A), manual)


def test_vertex_set_of_brute_force(round2_approx):
    A = round2_approx
    Z = A.space
    hemi = np.flatnonzero(Z.coords[:, 2] > 0)
    E = ContinuumSample(hemi, Z)
    got = vertex_set_of(E, A)
    want = np.array([v for v in range(A.graph.n)
                     if set(map(int, A.cover[v])) & set(map(int, hemi))])
    assert np.array_equal(got, want)

    z = int(hemi[0])
    single = vertex_set_of(np.array([z]), A)
    assert len(single) <= A.cover_multiplicity().max()
    assert all(z in A.cover[v] for v in single)

    assert np.array_equal(vertex_set_of(np.arange(Z.n), A),
                          np.arange(A.graph.n))


def test_continuum_in_some_star(round2_approx):
    A = round2_approx
    tiny = A.cover[7][:3]
    assert continuum_in_some_star(A, tiny)
    assert not continuum_in_some_star(A, np.arange(A.space.n))


# -------------------------------------------------------------------- nets


def test_greedy_net_separation_and_maximality(round3_space):
    Z = round3_space
    net = greedy_net(Z, 0.5, seed=3)
    D = Z.cross_dists(net, net)
    off = D[~np.eye(len(net), dtype=bool)]
    assert off.min() >= 0.5
    gaps = Z.cross_dists(np.arange(Z.n), net).min(axis=1)
    assert gaps.max() < 0.5
    assert np.array_equal(net, greedy_net(Z, 0.5, seed=3))
    assert len(greedy_net(Z, 3.0)) == 1  # radius beyond the diameter
    with pytest.raises(BadRadius):
        greedy_net(Z, 0.0)


def test_net_approximation_round_sphere(round3_space):
    Z = round3_space
    A = net_approximation(Z, 0.5, seed=3, cover_factor=1.25)
    assert np.array_equal(A.p, greedy_net(Z, 0.5, seed=3))
    assert np.all(A.r == 0.5) and mesh_size(A) == 0.5
    assert A.k_report is not None
    assert A.graph.connected()
    v = A.graph.n // 2
    assert np.array_equal(A.cover[v], Z.near(int(A.p[v]), 1.25 * 0.5))
    # adjacency is exactly cover intersection
    cover_sets = [set(int(z) for z in c) for c in A.cover]
    for u in range(A.graph.n):
        for w in A.graph.adj[u]:
            assert cover_sets[u] & cover_sets[int(w)]
    far = np.argwhere(Z.cross_dists(A.p, A.p) > 3 * 0.5)
    u, w = int(far[0][0]), int(far[0][1])
    assert w not in set(int(x) for x in A.graph.adj[u])


def test_net_approximation_ladder(round3_space):
    Z = round3_space
    lad = ApproximationLadder(
        [net_approximation(Z, d, seed=0) for d in (0.8, 0.5)])
    assert lad.mesh_sizes() == [0.8, 0.5]
    assert lad.k_bound is not None
    with pytest.raises(BadRadius):
        net_approximation(Z, -1.0)


def test_max_separated_maximality(round2_approx):
    A = round2_approx
    W = max_separated_vertices(A, 3, seed=1)
    covered = A.graph.multi_source_ball(W, 3)
    assert len(covered) == A.graph.n


# ------------------------------------------------------------- pushforwards


def test_pushforward_identity_is_exact(round2_approx):
    A = round2_approx
    B = pushforward_approximation(A, np.arange(A.space.n), A.space)
    assert np.array_equal(B.p, A.p)
    # r(v) is an incident edge length, so the far-set minimum is attained
    # at a sample point and the identity reproduces the scales exactly
    assert np.array_equal(B.r, A.r)
    assert B.k_report == A.k_report
    assert B.meta["violations"] == []
    assert B.graph is A.graph


def test_pushforward_global_scaling(round2_approx):
    A = round2_approx
    Z = A.space
    Y = FiniteMetricSpace(coords=2.0 * Z.coords, metric="chordal",
                          adjacency=Z.adjacency)
    B = pushforward_approximation(A, np.arange(Z.n), Y, verify=False)
    assert np.array_equal(B.r, 2.0 * A.r)
    assert np.array_equal(B.p, A.p)
    cover_same = all(np.array_equal(c, d) for c, d in zip(B.cover, A.cover))
    assert cover_same


def test_pushforward_guards():
    A = toy_approximation(r=[1.1, 1.1, 1.1])  # mesh 1.1 >= diam/2 = 1
    with pytest.raises(MeshTooCoarse):
        pushforward_approximation(A, np.arange(5), A.space)
    B = toy_approximation()
    with pytest.raises(EmptyInfimumSet):
        pushforward_approximation(B, np.zeros(5, dtype=int), B.space)


# ------------------------------------------------------------ serialization


def test_serialization_roundtrip_bit_exact(round2_approx):
    text = approximation_to_json(round2_approx)
    back = approximation_from_json(text)
    assert approximation_to_json(back) == text
    assert np.array_equal(back.p, round2_approx.p)
    assert np.array_equal(back.r, round2_approx.r)
    assert back.k_report == round2_approx.k_report
    assert all(np.array_equal(c, d)
               for c, d in zip(back.cover, round2_approx.cover))
    assert np.array_equal(back.graph.triangles,
                          round2_approx.graph.triangles)


def test_serialization_with_external_space(round2_approx):
    text = approximation_to_json(round2_approx, include_space=False)
    doc = json.loads(text)
    assert "space" not in doc
    back = approximation_from_json(text, space=round2_approx.space)
    assert back.space is round2_approx.space
    assert np.array_equal(back.graph.edges(), round2_approx.graph.edges())


# ------------------------------------------------------- snowball carriers


def test_snowball_complex_approximation(snow1_complex, snow1_sample):
    A = complex_approximation(snow1_complex, 1, snow1_sample)
    assert A.graph.n == 174
    assert A.graph.connected()
    assert A.k_report is not None
    assert all(len(a) >= 4 for a in A.graph.adj)  # every square has 4 sides
