import numpy as np
import pytest

from metricsphere import (
    check_packing,
    induced_approximation,
    mobius_normalize,
    pack_triangulation,
    ring_lemma_check,
    round_sphere,
)
from metricsphere.errors import DegenerateTriple, NonManifoldEdge, NotATriangulation
from metricsphere.packing import (
    apply_lorentz_to_points,
    caps_to_inversive,
    inversive_to_caps,
    lorentz_dot,
)

TET = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]])

OCT = np.array([
    [0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1],
    [5, 2, 1], [5, 3, 2], [5, 4, 3], [5, 1, 4],
])

_LG = np.diag([1.0, 1.0, 1.0, -1.0])


def bipyramid(n):
    """Double pyramid over an n-gon: apexes 0 and 1, equator 2..n+1."""
    eq = [2 + i for i in range(n)]
    tris = []
    for i in range(n):
        a, b = eq[i], eq[(i + 1) % n]
        tris.append([0, a, b])
        tris.append([1, b, a])
    return np.array(tris)


def inserted_triangulation(n_extra, seed):
    """Grow a triangulation from the tetrahedron by random face splits."""
    rng = np.random.default_rng(seed)
    tris = [tuple(t) for t in TET]
    nv = 4
    for _ in range(n_extra):
        a, b, c = tris.pop(int(rng.integers(len(tris))))
        tris += [(a, b, nv), (b, c, nv), (c, a, nv)]
        nv += 1
    return np.array(tris)


def angular(u, v):
    return float(np.arccos(np.clip(u @ v, -1.0, 1.0)))


# ------------------------------------------------------- symmetric radii


def test_tetrahedron_radii():
    P = pack_triangulation(TET)
    want = 0.5 * np.arccos(-1.0 / 3.0)
    assert np.abs(P.radii - want).max() < 1e-7
    assert np.abs(np.linalg.norm(P.centers, axis=1) - 1.0).max() < 1e-12
    # centers form a regular tetrahedron: all pairwise angles equal
    for u in range(4):
        for v in range(u + 1, 4):
            assert abs(angular(P.centers[u], P.centers[v]) - 2 * want) < 1e-7


def test_octahedron_radii():
    P = pack_triangulation(OCT)
    assert np.abs(P.radii - np.pi / 4).max() < 1e-7
    # balanced: unit centers cancel
    assert np.linalg.norm(P.centers.sum(axis=0)) < 1e-7
    # frame convention: cap 0 north, cap 1 in the x > 0 half-plane
    assert np.allclose(P.centers[0], [0, 0, 1], atol=1e-9)
    assert abs(P.centers[1][1]) < 1e-9 and P.centers[1][0] > 0


def test_icosahedron_radii():
    tris = round_sphere(0).triangles(0)
    P = pack_triangulation(tris)
    want = 0.5 * np.arccos(1.0 / np.sqrt(5.0))
    assert np.abs(P.radii - want).max() < 1e-7
    tang, overlap = check_packing(P)
    assert tang < 1e-8 and overlap < 1e-9


def test_bipyramid_radii_closed_form():
    # apex-equator tangency pins pi/2 = R + rho, ring tangency 2*rho = 2*pi/n
    for n in (6, 10, 16):
        P = pack_triangulation(bipyramid(n))
        rho, R = np.pi / n, np.pi / 2 - np.pi / n
        assert abs(P.radii[0] - R) < 1e-6 and abs(P.radii[1] - R) < 1e-6
        assert np.abs(P.radii[2:] - rho).max() < 1e-6


# ------------------------------------------------------- input validation


def test_rejects_bad_input():
    with pytest.raises(NotATriangulation):
        pack_triangulation(np.array([[0, 1, 2]]))
    with pytest.raises(NotATriangulation):
        pack_triangulation(TET, removed_face=9)
    flipped = TET.copy()
    flipped[3] = flipped[3][::-1]
    with pytest.raises(NonManifoldEdge):
        pack_triangulation(flipped)
    degenerate = TET.copy()
    degenerate[0] = (0, 0, 2)
    with pytest.raises(NonManifoldEdge):
        pack_triangulation(degenerate)


def test_check_packing_detects_violations():
    P = pack_triangulation(OCT)
    bad = P.transformed(np.eye(4))
    bad.radii = np.full(6, 1.7)
    tang, overlap = check_packing(bad)
    assert tang > 1.0  # edges: |pi/2 - 3.4|
    assert abs(overlap - (3.4 - np.pi)) < 1e-9  # antipodal non-edges


# ------------------------------------------------------- Mobius freedom


def test_removed_face_independence():
    mesh = round_sphere(1)
    tris = mesh.triangles(1)
    assert mesh.n_vertices(1) <= 200
    P1 = pack_triangulation(tris, removed_face=0)
    P2 = pack_triangulation(tris, removed_face=41)
    trip = [int(x) for x in tris[7]]
    Q1, _ = mobius_normalize(P1, *trip)
    Q2, _ = mobius_normalize(P2, *trip)
    ang_err = np.arccos(np.clip(np.sum(Q1.centers * Q2.centers, axis=1),
                                -1.0, 1.0))
    assert ang_err.max() <= 1e-6
    assert np.abs(Q1.radii - Q2.radii).max() <= 1e-6


def test_normalize_tetrahedron():
    P = pack_triangulation(TET)
    Q, L = mobius_normalize(P, 0, 1, 2)
    # three marked caps: equatorial, radius pi/3, equally spaced
    assert np.abs(Q.radii[:3] - np.pi / 3).max() < 1e-9
    assert np.abs(Q.centers[:3, 2]).max() < 1e-9
    for u in range(3):
        v = (u + 1) % 3
        assert abs(angular(Q.centers[u], Q.centers[v]) - 2 * np.pi / 3) < 1e-9
    az = np.arctan2(Q.centers[:3, 1], Q.centers[:3, 0])
    assert abs(az[0]) < 1e-9
    assert abs(az[1] - 2 * np.pi / 3) < 1e-9
    # fourth cap: forced to the north pole at radius pi/6 by tangency
    assert np.allclose(Q.centers[3], [0, 0, 1], atol=1e-9)
    assert abs(Q.radii[3] - np.pi / 6) < 1e-9
    assert Q.radii.max() < np.pi / 2
    # L is a Lorentz matrix
    assert np.abs(L.T @ _LG @ L - _LG).max() < 1e-9


def test_normalize_is_idempotent():
    P = pack_triangulation(round_sphere(0).triangles(0))
    trip = [0, 11, 5]
    Q, _ = mobius_normalize(P, *trip)
    Q2, L2 = mobius_normalize(Q, *trip)
    assert np.abs(L2 - np.eye(4)).max() < 1e-7
    assert np.abs(Q2.centers - Q.centers).max() < 1e-7
    assert np.abs(Q2.radii - Q.radii).max() < 1e-7


def test_normalize_disjoint_triple():
    tris = round_sphere(0).triangles(0)
    P = pack_triangulation(tris)
    nbrs = [set() for _ in range(12)]
    for a, b, c in tris:
        nbrs[a].update((b, c))
        nbrs[b].update((a, c))
        nbrs[c].update((a, b))
    trip = None
    for u in range(12):
        for v in range(u + 1, 12):
            if v in nbrs[u]:
                continue
            for w in range(v + 1, 12):
                if w not in nbrs[u] and w not in nbrs[v]:
                    trip = (u, v, w)
                    break
            if trip:
                break
        if trip:
            break
    Q, _ = mobius_normalize(P, *trip)
    sub = Q.centers[list(trip)]
    assert np.abs(sub[:, 2]).max() < 1e-8
    for i in range(3):
        assert abs(angular(sub[i], sub[(i + 1) % 3]) - 2 * np.pi / 3) < 1e-8
    with pytest.raises(DegenerateTriple):
        mobius_normalize(P, 0, 0, 5)


def test_normalize_choice_is_mobius():
    # two normalizations differ by one Mobius map.  Cap centers are not
    # equivariant (the image of a center is not the center of the image
    # cap), so the invariant comparison uses the transformation itself and
    # chordal cross-ratios of tangency points, which are honest points.
    tris = round_sphere(0).triangles(0)
    from metricsphere.spaces import edges_from_triangles

    P = pack_triangulation(tris)
    Q1, L1 = mobius_normalize(P, *(int(x) for x in tris[0]))
    Q2, L2 = mobius_normalize(P, *(int(x) for x in tris[13]))

    M = L2 @ np.linalg.inv(L1)
    assert np.abs(M.T @ _LG @ M - _LG).max() < 1e-9
    assert np.abs(Q2.inversive() - Q1.inversive() @ M.T).max() < 1e-9

    E = edges_from_triangles(tris)
    T1 = np.array([Q1.tangency_point(int(a), int(b)) for a, b in E])
    T2 = np.array([Q2.tangency_point(int(a), int(b)) for a, b in E])

    def crossratios(C, quads):
        d = np.linalg.norm(C[:, None, :] - C[None, :, :], axis=2)
        return np.array([d[a, c] * d[b, e] / (d[a, e] * d[b, c])
                         for a, b, c, e in quads])

    rng = np.random.default_rng(7)
    quads = [rng.choice(len(E), size=4, replace=False) for _ in range(50)]
    r1, r2 = crossratios(T1, quads), crossratios(T2, quads)
    assert np.abs(r1 - r2).max() < 1e-6


def test_tangency_points_ride_along():
    P = pack_triangulation(TET)
    Q, L = mobius_normalize(P, 0, 1, 2)
    V = P.inversive()
    assert np.abs(lorentz_dot(V, V) - 1.0).max() < 1e-9
    c, r = inversive_to_caps(caps_to_inversive(P.centers, P.radii))
    assert np.abs(c - P.centers).max() < 1e-12
    assert np.abs(r - P.radii).max() < 1e-12
    for u in range(4):
        for v in range(u + 1, 4):
            assert abs(lorentz_dot(V[u], V[v]) + 1.0) < 1e-8
            t = P.tangency_point(u, v)
            assert abs(np.linalg.norm(t) - 1.0) < 1e-12
            assert abs(angular(t, P.centers[u]) - P.radii[u]) < 1e-8
            moved = apply_lorentz_to_points(L, t[None, :])[0]
            assert np.linalg.norm(moved - Q.tangency_point(u, v)) < 1e-7


# ------------------------------------------------------- random families


def test_random_insertion_families():
    for n_extra, seed in ((36, 3), (96, 5)):
        tris = inserted_triangulation(n_extra, seed)
        P = pack_triangulation(tris)
        tang, overlap = check_packing(P)
        assert tang < 1e-6
        assert overlap < 1e-7
        assert P.radii.max() < np.pi / 2
        assert P.radii.min() > 0
        P2 = pack_triangulation(tris)
        assert np.array_equal(P.centers, P2.centers)
        assert np.array_equal(P.radii, P2.radii)


def test_ring_lemma_table():
    P = pack_triangulation(round_sphere(0).triangles(0))
    worst, table = ring_lemma_check(P)
    assert abs(worst - 1.0) < 1e-6
    assert set(table) == {5}

    worst_ins, table_ins = ring_lemma_check(
        pack_triangulation(inserted_triangulation(30, 11)))
    assert worst_ins > 1.0 and np.isfinite(worst_ins)

    # apex/equator ratio is exactly n/2 - 1: grows with the valence
    ratios = []
    for n in (6, 10, 16):
        _, tab = ring_lemma_check(pack_triangulation(bipyramid(n)))
        ratios.append(tab[n])
        assert abs(tab[n] - (n / 2 - 1)) < 1e-5
    assert ratios[0] < ratios[1] < ratios[2]


# ------------------------------------------------------- induced approximation


def test_induced_approximation_tetrahedron(round3_mesh):
    P = pack_triangulation(TET)
    A = induced_approximation(P, round3_mesh, verify=True)
    assert A.k_report <= 6
    assert A.meta["violations"] == []
    covered = np.unique(np.concatenate(A.cover))
    assert len(covered) == round3_mesh.space().n
    # p sits at the sample point nearest each cap center
    pts = A.space.coords
    for v in range(4):
        d = np.linalg.norm(pts - P.centers[v], axis=1)
        assert d[A.p[v]] <= d.min() + 1e-12


def test_induced_approximation_subdivided(round3_mesh):
    tris = round_sphere(1).triangles(1)
    P = pack_triangulation(tris)
    A = induced_approximation(P, round3_mesh, verify=True)
    assert A.graph.n == 42
    assert A.meta["violations"] == []
    assert np.isfinite(A.k_report)
    assert np.array_equal(A.r, P.radii)
