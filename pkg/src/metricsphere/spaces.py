"""Generators for discretized metric 2-spheres.

Three families feed the pipelines:

* round spheres: icosahedral meshes with nested subdivision levels
  (level k has ``10 * 4**k + 2`` vertices, and the level-k vertex set is a
  prefix of the level-(k+1) vertex set);
* snowballs: the fractal surface obtained from the unit cube by repeatedly
  splitting every square face into 25 congruent subsquares and replacing
  the central one with the five exposed faces of an outward cube (29
  squares per square and level); corners are kept in exact integer
  arithmetic with denominator ``5**level``;
* snowflake patches: a round sphere whose distances inside one cap are
  replaced by ``|dx| + |dy|**alpha`` in exponential-chart coordinates,
  glued to the chordal metric outside through a boundary ring so the
  result is a genuine metric.

Plus small utilities: a verified bilipschitz warp and a minimal OFF
reader/writer for triangle meshes.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .errors import (
    BadAlpha,
    FileMissing,
    LevelTooDeep,
    NonManifoldEdge,
    NotASphereMesh,
    NotConnected,
)
from .metric_core import FiniteMetricSpace

SNOWBALL_SIMILARITY_DIMENSION = np.log(29.0) / np.log(5.0)

_MAX_ICO_LEVEL = 7
_MAX_SNOWBALL_LEVEL = 3


# --------------------------------------------------------------------------
# triangulated sphere meshes
# --------------------------------------------------------------------------

def validate_sphere_triangulation(triangles, n_vertices):
    """Check that oriented triangles form a triangulated 2-sphere.

    Requires: every edge shared by exactly two triangles with opposite
    orientation, Euler characteristic 2, connected 1-skeleton.
    Raises NonManifoldEdge / NotASphereMesh accordingly.
    """
    tris = np.asarray(triangles, dtype=int)
    directed = {}
    for f, (a, b, c) in enumerate(tris):
        if a == b or b == c or a == c:
            raise NonManifoldEdge(f"degenerate triangle {f}")
        for u, v in ((a, b), (b, c), (c, a)):
            if (u, v) in directed:
                raise NonManifoldEdge(f"edge ({u},{v}) traversed twice forward")
            directed[(u, v)] = f
    for (u, v) in directed:
        if (v, u) not in directed:
            raise NonManifoldEdge(f"edge ({u},{v}) lacks an opposite partner")
    n_edges = len(directed) // 2
    if n_vertices - n_edges + len(tris) != 2:
        raise NotASphereMesh(
            f"Euler characteristic {n_vertices - n_edges + len(tris)} != 2")
    adj = adjacency_from_triangles(tris, n_vertices)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            v = int(v)
            if v not in seen:
                seen.add(v)
                stack.append(v)
    if len(seen) != n_vertices:
        raise NotConnected("triangulation 1-skeleton is disconnected")
    return n_edges


def adjacency_from_triangles(triangles, n_vertices):
    """Neighbor lists (sorted arrays) of the 1-skeleton."""
    nbrs = [set() for _ in range(n_vertices)]
    for a, b, c in np.asarray(triangles, dtype=int):
        nbrs[a].update((b, c))
        nbrs[b].update((a, c))
        nbrs[c].update((a, b))
    return [np.array(sorted(s), dtype=int) for s in nbrs]


@dataclass
class MeshedSphere:
    """Triangulated sphere with its subdivision history.

    ``tri_levels[k]`` are the oriented triangles of level k, whose vertex
    ids all lie below ``nv_levels[k]``; ``coords`` holds the finest vertex
    coordinates, so every level's vertices are a prefix of it.
    """

    coords: np.ndarray
    tri_levels: List[np.ndarray]
    nv_levels: List[int]
    kind: str = "icosphere"

    @property
    def levels(self):
        return len(self.tri_levels) - 1

    def triangles(self, level=None):
        level = self.levels if level is None else level
        return self.tri_levels[level]

    def n_vertices(self, level=None):
        level = self.levels if level is None else level
        return self.nv_levels[level]

    def space(self, metric="chordal"):
        adj = adjacency_from_triangles(self.triangles(), len(self.coords))
        return FiniteMetricSpace(coords=self.coords, metric=metric,
                                 adjacency=adj, label=self.kind)

    def edge_lengths(self, level=None):
        tris = self.triangles(level)
        E = edges_from_triangles(tris)
        return np.linalg.norm(self.coords[E[:, 0]] - self.coords[E[:, 1]], axis=1)


def edges_from_triangles(triangles):
    tris = np.asarray(triangles, dtype=int)
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
    (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
    (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
], dtype=float)
_ICO_FACES = np.array([
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
], dtype=int)


def round_sphere(level):
    """Icosahedral mesh of the unit sphere, subdivided ``level`` times.

    Midpoint subdivision keeps earlier vertices in place, so the level-k
    vertices are exactly the first ``10 * 4**k + 2`` rows of ``coords``.
    """
    if not 0 <= level <= _MAX_ICO_LEVEL:
        raise LevelTooDeep(f"round sphere level {level} outside 0..{_MAX_ICO_LEVEL}")
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    tris = _ICO_FACES.copy()
    tri_levels = [tris]
    nv_levels = [len(verts)]
    for _ in range(level):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            m = cache.get(key)
            if m is None:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                m = len(verts) - 1
                cache[key] = m
            return m

        out = np.empty((4 * len(tris), 3), dtype=int)
        for f, (a, b, c) in enumerate(tris):
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            out[4 * f:4 * f + 4] = [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = out
        tri_levels.append(tris)
        nv_levels.append(len(verts))
    coords = np.array(verts)
    mesh = MeshedSphere(coords, tri_levels, nv_levels, kind="icosphere")
    validate_sphere_triangulation(mesh.triangles(), len(coords))
    return mesh


def bilipschitz_warp(mesh, L, seed=0, bumps=4):
    """Radially warped copy of a mesh with a verified edge-ratio bound.

    The warp scales each vertex by ``1 + a * g(x)`` for a fixed sum of
    Gaussian bumps g; the amplitude a is bisected until every mesh edge
    satisfies ``1/L <= |e'|/|e| <= L``.  ``L == 1`` returns the identity.
    """
    if L < 1.0:
        raise BadAlpha(f"bilipschitz bound {L} must be >= 1")
    coords = mesh.coords
    E = edges_from_triangles(mesh.triangles())
    base = np.linalg.norm(coords[E[:, 0]] - coords[E[:, 1]], axis=1)
    if L == 1.0:
        warped = coords.copy()
    else:
        rng = np.random.default_rng(seed)
        centers = rng.normal(size=(bumps, 3))
        centers /= np.linalg.norm(centers, axis=1, keepdims=True)
        signs = rng.choice([-1.0, 1.0], size=bumps)
        width = 0.8

        def g(x):
            d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            return (signs * np.exp(-d2 / (2 * width ** 2))).sum(axis=1)

        gv = g(coords)
        gv = gv / max(1e-12, np.abs(gv).max())

        def ratios(a):
            w = coords * (1.0 + a * gv)[:, None]
            new = np.linalg.norm(w[E[:, 0]] - w[E[:, 1]], axis=1)
            r = new / base
            return w, max(r.max(), 1.0 / r.min())

        lo, hi = 0.0, 0.9
        target = L * 0.999
        w, worst = ratios(hi)
        if worst <= target:
            lo = hi
        else:
            for _ in range(60):
                mid = (lo + hi) / 2.0
                w, worst = ratios(mid)
                if worst <= target:
                    lo = mid
                else:
                    hi = mid
        warped, worst = ratios(lo)
        if worst > L:
            raise BadAlpha("warp amplitude search failed")  # pragma: no cover
    out = MeshedSphere(warped, [t.copy() for t in mesh.tri_levels],
                       list(mesh.nv_levels), kind="warped")
    return out


# --------------------------------------------------------------------------
# snowball
# --------------------------------------------------------------------------

@dataclass
class SquareLevel:
    """Squares of one refinement level, exact integer corners.

    ``corners[i]`` is a (4, 3) int array in units of ``5**-exponent``,
    ordered counterclockwise as seen from outside; all sides are unit
    length and axis-aligned in those units.
    """

    corners: np.ndarray
    exponent: int

    @property
    def count(self):
        return len(self.corners)

    def normals(self):
        u = self.corners[:, 1] - self.corners[:, 0]
        v = self.corners[:, 3] - self.corners[:, 0]
        return np.cross(u, v)

    def centers4(self):
        """Square centers multiplied by 4 (exact integers)."""
        return self.corners.sum(axis=1)


@dataclass
class SquareComplex:
    """Snowball surface with its full subdivision history."""

    levels: List[SquareLevel]

    @property
    def depth(self):
        return len(self.levels) - 1

    def counts(self):
        return [lv.count for lv in self.levels]


def snowball(level):
    """Snowball surface down to the given level (0 = unit cube boundary)."""
    if not 0 <= level <= _MAX_SNOWBALL_LEVEL:
        raise LevelTooDeep(f"snowball level {level} outside 0..{_MAX_SNOWBALL_LEVEL}")
    base = []
    # Faces of the unit cube, counterclockwise seen from outside.
    base.append([(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)])   # z = 0
    base.append([(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)])   # z = 1
    base.append([(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)])   # y = 0
    base.append([(0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)])   # y = 1
    base.append([(0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)])   # x = 0
    base.append([(1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)])   # x = 1
    levels = [SquareLevel(np.array(base, dtype=np.int64), 0)]
    for _ in range(level):
        levels.append(_subdivide_squares(levels[-1]))
    return SquareComplex(levels)


def _subdivide_squares(lv):
    sq = lv.corners * 5
    m = len(sq)
    u = (sq[:, 1] - sq[:, 0]) // 5
    v = (sq[:, 3] - sq[:, 0]) // 5
    n = np.cross(u, v)
    out = np.empty((29 * m, 4, 3), dtype=np.int64)
    k = 0
    for s in range(m):
        o0, U, V, N = sq[s, 0], u[s], v[s], n[s]
        for i in range(5):
            for j in range(5):
                o = o0 + i * U + j * V
                if i == 2 and j == 2:
                    b = np.array([o, o + U, o + U + V, o + V])
                    t = b + N
                    out[k] = t; k += 1                                  # top
                    for e in range(4):
                        e2 = (e + 1) % 4
                        out[k] = [b[e], b[e2], t[e2], t[e]]; k += 1     # sides
                else:
                    out[k] = [o, o + U, o + U + V, o + V]; k += 1
    assert k == 29 * m
    return SquareLevel(out, lv.exponent + 1)


def snowball_embedding_report(cx, level=None):
    """Exact (integer arithmetic) embeddedness check of one level.

    Verifies that no two squares overlap with positive area and no square
    crosses another transversally through its interior.  Returns the
    number of violating pairs (0 means embedded).
    """
    lv = cx.levels[cx.depth if level is None else level]
    C = lv.corners
    n = lv.normals()
    axis = np.abs(n).argmax(axis=1)
    plane = np.take_along_axis(C[:, 0, :], axis[:, None], axis=1)[:, 0]
    lo = C.min(axis=1)
    hi = C.max(axis=1)
    bad = 0
    # coplanar overlaps
    for ax in range(3):
        idx = np.flatnonzero(axis == ax)
        t1, t2 = [a for a in range(3) if a != ax]
        for c in np.unique(plane[idx]):
            grp = idx[plane[idx] == c]
            if len(grp) < 2:
                continue
            l1, h1 = lo[grp][:, t1], hi[grp][:, t1]
            l2, h2 = lo[grp][:, t2], hi[grp][:, t2]
            o1 = (l1[:, None] < h1[None, :]) & (l1[None, :] < h1[:, None])
            o2 = (l2[:, None] < h2[None, :]) & (l2[None, :] < h2[:, None])
            ov = o1 & o2
            np.fill_diagonal(ov, False)
            bad += int(ov.sum()) // 2
    # transversal crossings
    for ax1 in range(3):
        for ax2 in range(ax1 + 1, 3):
            i1 = np.flatnonzero(axis == ax1)
            i2 = np.flatnonzero(axis == ax2)
            if len(i1) == 0 or len(i2) == 0:
                continue
            ax3 = 3 - ax1 - ax2
            # square in plane ax1=c1 spans (ax2, ax3); crossing needs the
            # other square's plane strictly inside that span and vice versa,
            # plus overlapping interiors along the shared axis ax3.
            c1 = plane[i1][:, None]
            c2 = plane[i2][None, :]
            in2 = (lo[i1][:, None, ax2] < c2) & (c2 < hi[i1][:, None, ax2])
            in1 = (lo[i2][None, :, ax1] < c1) & (c1 < hi[i2][None, :, ax1])
            o3 = (lo[i1][:, None, ax3] < hi[i2][None, :, ax3]) & \
                 (lo[i2][None, :, ax3] < hi[i1][:, None, ax3])
            bad += int((in1 & in2 & o3).sum())
    return bad


@dataclass
class SnowballSample:
    """Point sample of one snowball level: square corners and centers."""

    space: FiniteMetricSpace
    corner_ids: dict
    center_ids: np.ndarray       # center point id per square
    level: int


def snowball_space(cx, level=None, metric="chordal"):
    """Sampled metric space of one snowball level.

    Points are the (shared) square corners and the square centers, with
    ambient chordal distances; the mesh adjacency joins each center to its
    four corners and consecutive corners along each side.
    """
    level = cx.depth if level is None else level
    lv = cx.levels[level]
    scale = 5.0 ** (-lv.exponent)
    corner_ids = {}
    pts = []
    for sq in lv.corners:
        for c in sq:
            key = tuple(int(x) for x in c)
            if key not in corner_ids:
                corner_ids[key] = len(pts)
                pts.append(np.asarray(key, dtype=float) * scale)
    center_ids = np.empty(lv.count, dtype=int)
    for s, sq in enumerate(lv.corners):
        center_ids[s] = len(pts)
        pts.append(sq.sum(axis=0).astype(float) / 4.0 * scale)
    coords = np.array(pts)
    nbrs = [set() for _ in range(len(pts))]
    for s, sq in enumerate(lv.corners):
        ctr = center_ids[s]
        cid = [corner_ids[tuple(int(x) for x in c)] for c in sq]
        for k in range(4):
            a, b = cid[k], cid[(k + 1) % 4]
            nbrs[a].add(b)
            nbrs[b].add(a)
            nbrs[ctr].add(cid[k])
            nbrs[cid[k]].add(ctr)
    adj = [np.array(sorted(s), dtype=int) for s in nbrs]
    space = FiniteMetricSpace(coords=coords, metric=metric, adjacency=adj,
                              label=f"snowball-{level}")
    return SnowballSample(space, corner_ids, center_ids, level)


def snowball_mesh(cx, level=None):
    """Center-split triangulation of one snowball level.

    Each square becomes four triangles through its center; the result is a
    valid triangulated sphere usable by the packing stage.
    """
    level = cx.depth if level is None else level
    sample = snowball_space(cx, level)
    lv = cx.levels[level]
    tris = np.empty((4 * lv.count, 3), dtype=int)
    k = 0
    for s, sq in enumerate(lv.corners):
        cid = [sample.corner_ids[tuple(int(x) for x in c)] for c in sq]
        ctr = sample.center_ids[s]
        for e in range(4):
            tris[k] = (cid[e], cid[(e + 1) % 4], ctr)
            k += 1
    coords = sample.space.coords
    mesh = MeshedSphere(coords, [tris], [len(coords)], kind=f"snowball-{level}")
    validate_sphere_triangulation(tris, len(coords))
    return mesh


def snowball_to_json(cx):
    """JSON text with exact rational corner strings."""
    levels = []
    for lv in cx.levels:
        den = 5 ** lv.exponent
        squares = [[[str(Fraction(int(x), den)) for x in corner]
                    for corner in sq] for sq in lv.corners]
        levels.append({"exponent": lv.exponent, "squares": squares})
    return json.dumps({"format": "snowball-v1", "levels": levels},
                      separators=(",", ":"))


def snowball_from_json(text):
    data = json.loads(text)
    if data.get("format") != "snowball-v1":
        raise FileMissing("not a snowball JSON document")
    levels = []
    for lv in data["levels"]:
        e = int(lv["exponent"])
        den = 5 ** e
        sq = np.array([[[int(Fraction(s) * den) for s in corner]
                        for corner in square] for square in lv["squares"]],
                      dtype=np.int64)
        levels.append(SquareLevel(sq, e))
    return SquareComplex(levels)


# --------------------------------------------------------------------------
# snowflake patch
# --------------------------------------------------------------------------

def alpha_chart_distance(p, q, alpha):
    """``|dx| + |dy|**alpha`` on chart coordinates."""
    if not 0.0 < alpha < 1.0:
        raise BadAlpha(f"alpha {alpha} outside (0, 1)")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(abs(p[0] - q[0]) + abs(p[1] - q[1]) ** alpha)


@dataclass
class AlphaPatchSphere:
    """Round sphere with one snowflaked cap."""

    space: FiniteMetricSpace
    mesh: MeshedSphere
    alpha: float
    cap_radius: float
    cap_center_id: int
    in_cap: np.ndarray
    chart: np.ndarray
    cap_scale: Optional[float] = None


def alpha_patch_sphere(alpha, level, cap_radius=0.6, ring_width=None,
                       cap_scale=None):
    """Icosphere whose distances inside one cap follow the snowflake rule.

    Inside the cap around the +z pole the distance is
    ``max(chordal, |dx| + |dy|**alpha)`` in exponential-chart coordinates
    (the max keeps the patch a metric and realizes the boundary blend);
    routes crossing the cap boundary go through a sampled boundary ring,
    which glues the patch to the chordal outside without breaking the
    triangle inequality.

    By default the sample is just the icosphere vertex set, which is
    uniform for the round metric but increasingly sparse for the patched
    one (a chart step dy costs dy**alpha, so rows of the icosphere grid
    sit ever further apart as the metric is refined).  Passing
    ``cap_scale`` resamples the cap on an anisotropic chart grid --
    columns ``cap_scale`` apart, rows ``cap_scale ** (1/alpha)`` apart --
    which is uniformly dense at metric scale about ``cap_scale``; the
    icosphere keeps sampling the outside, ``mesh`` is then only that
    round scaffold, and the space carries no mesh adjacency.
    """
    if not 0.0 < alpha < 1.0:
        raise BadAlpha(f"alpha {alpha} outside (0, 1)")
    if level > 4:
        raise LevelTooDeep("snowflake patch stores a dense matrix; level <= 4")
    mesh = round_sphere(level)
    edge = float(mesh.edge_lengths().max())
    if cap_scale is None:
        X = mesh.coords
        adj = adjacency_from_triangles(mesh.triangles(), len(X))
    else:
        if not 0.0 < cap_scale < cap_radius:
            raise BadAlpha(f"cap_scale {cap_scale} outside (0, cap_radius)")
        if cap_radius >= np.pi:
            raise BadAlpha("cap cannot cover the whole sphere")
        th_mesh = np.arccos(np.clip(mesh.coords[:, 2], -1.0, 1.0))
        Xo = mesh.coords[th_mesh >= cap_radius]
        sx = float(cap_scale)
        sy = float(cap_scale) ** (1.0 / alpha)
        xs = sx * np.arange(-int(cap_radius / sx), int(cap_radius / sx) + 1)
        ys = sy * np.arange(-int(cap_radius / sy), int(cap_radius / sy) + 1)
        gx, gy = np.meshgrid(xs, ys)
        gx, gy = gx.ravel(), gy.ravel()
        rad = np.hypot(gx, gy)
        keep = rad < cap_radius
        gx, gy, rad = gx[keep], gy[keep], rad[keep]
        ang = np.arctan2(gy, gx)
        Xc = np.stack([np.sin(rad) * np.cos(ang),
                       np.sin(rad) * np.sin(ang),
                       np.cos(rad)], axis=1)
        X = np.vstack([Xo, Xc])
        adj = None
    n = len(X)
    # chart: exponential coordinates around the +z pole
    theta = np.arccos(np.clip(X[:, 2], -1.0, 1.0))
    phi = np.arctan2(X[:, 1], X[:, 0])
    chart = np.stack([theta * np.cos(phi), theta * np.sin(phi)], axis=1)
    in_cap = theta < cap_radius

    D = np.empty((n, n))
    blk = max(1, 4_000_000 // max(1, n))
    for s in range(0, n, blk):
        diff = X[s:s + blk, None, :] - X[None, :, :]
        D[s:s + blk] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    cap = np.flatnonzero(in_cap)
    m = len(cap)
    Dcap = np.empty((m, m))
    blk = max(1, 4_000_000 // max(1, m))
    for s in range(0, m, blk):
        dx = np.abs(chart[cap[s:s + blk], None, 0] - chart[None, cap, 0])
        dy = np.abs(chart[cap[s:s + blk], None, 1] - chart[None, cap, 1])
        Dcap[s:s + blk] = np.maximum(D[np.ix_(cap[s:s + blk], cap)],
                                     dx + dy ** alpha)

    if ring_width is None:
        # one mesh layer of boundary ring, but never so fat that the cap
        # loses its interior -- a ring swallowing the whole cap would let
        # every pair shortcut through "outside" at plain chordal cost
        ring_width = min(2.2 * edge, cap_radius - 1.05 * edge)
        if ring_width <= 0.0:
            raise BadAlpha("cap smaller than one mesh layer; increase level")
    ring_idx = np.flatnonzero(theta[cap] >= cap_radius - ring_width)
    if cap_scale is not None and len(ring_idx) > 360:
        # the grid makes the boundary band huge; a thinned interface still
        # glues a valid metric (routing through fewer ring points can only
        # lengthen, never break, the triangle inequality)
        ring_idx = ring_idx[::int(np.ceil(len(ring_idx) / 360))]
    ring = cap[ring_idx]
    if len(ring) == 0:
        raise BadAlpha("cap boundary ring is empty; increase level")

    out = np.flatnonzero(~in_cap)
    exit_cost = Dcap[:, ring_idx]                         # (cap, ring)
    # cap -> outside through the ring; chunked min-plus product
    ring_out = D[np.ix_(ring, out)]
    D_cap_out = np.empty((m, len(out)))
    step = max(1, 2_000_000 // max(1, m * len(ring)))
    for s in range(0, len(out), step):
        blk = exit_cost[:, :, None] + ring_out[None, :, s:s + step]
        D_cap_out[:, s:s + step] = blk.min(axis=1)
    # cap -> cap possibly exiting and re-entering
    ring_ring = D[np.ix_(ring, ring)]
    best_exit = np.empty((m, len(ring)))
    rstep = max(1, 4_000_000 // max(1, len(ring) * len(ring)))
    for s in range(0, m, rstep):
        blk = exit_cost[s:s + rstep, :, None] + ring_ring[None, :, :]
        best_exit[s:s + rstep] = blk.min(axis=1)          # (cap, ring)
    D_cap_cap = Dcap.copy()
    for s in range(0, m, max(1, step)):
        blk = best_exit[:, :, None] + exit_cost.T[None, :, s:s + step]
        D_cap_cap[:, s:s + step] = np.minimum(Dcap[:, s:s + step], blk.min(axis=1))

    M = D.copy()
    M[np.ix_(cap, cap)] = np.minimum(D_cap_cap, D_cap_cap.T)
    M[np.ix_(cap, out)] = D_cap_out
    M[np.ix_(out, cap)] = D_cap_out.T
    np.fill_diagonal(M, 0.0)

    space = FiniteMetricSpace(matrix=M, coords=X, metric="matrix",
                              adjacency=adj, label=f"alpha-patch-{alpha}")
    cap_center_id = int(np.argmax(X[:, 2]))
    return AlphaPatchSphere(space, mesh, alpha, cap_radius, cap_center_id,
                            in_cap, chart, cap_scale)


def cap_grid_subsample(P, stride):
    """Sample ids of a self-similar coarsening of an adaptive cap grid.

    Keeps every ``stride``-th cap column and every ``stride**2``-th row
    -- the squared row stride matches the snowflake, so the kept lattice
    is metrically uniform at scale ``stride * cap_scale`` in both chart
    directions -- together with the whole outside sample.  ``stride=1``
    returns every sample id.
    """
    if P.cap_scale is None:
        raise BadAlpha("needs an adaptively sampled cap (cap_scale set)")
    stride = int(stride)
    if stride < 1:
        raise BadAlpha(f"stride {stride} must be a positive integer")
    sx = P.cap_scale
    sy = P.cap_scale ** (1.0 / P.alpha)
    ix = np.rint(P.chart[:, 0] / sx).astype(int)
    iy = np.rint(P.chart[:, 1] / sy).astype(int)
    keep = ~P.in_cap | ((ix % stride == 0) & (iy % stride ** 2 == 0))
    return np.flatnonzero(keep)


# --------------------------------------------------------------------------
# OFF I/O
# --------------------------------------------------------------------------

def write_off(path, coords, triangles):
    coords = np.asarray(coords, dtype=float)
    tris = np.asarray(triangles, dtype=int)
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(coords)} {len(tris)} 0\n")
        for p in coords:
            fh.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        for t in tris:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def read_off(path):
    try:
        with open(path) as fh:
            tokens = fh.read().split()
    except OSError as exc:
        raise FileMissing(str(exc)) from exc
    if not tokens or tokens[0] != "OFF":
        raise FileMissing(f"{path}: missing OFF header")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    coords = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    tris = np.empty((nf, 3), dtype=int)
    for f in range(nf):
        cnt = int(tokens[pos])
        if cnt != 3:
            raise NotASphereMesh("OFF subset supports triangles only")
        tris[f] = [int(tokens[pos + 1]), int(tokens[pos + 2]), int(tokens[pos + 3])]
        pos += 4
    validate_sphere_triangulation(tris, nv)
    return MeshedSphere(coords, [tris], [nv], kind="off")
