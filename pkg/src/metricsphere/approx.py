"""Graph approximations of sampled surfaces.

An approximation of a sampled space Z is a graph G together with, for each
vertex v, a basepoint ``p(v)`` in Z, a scale ``r(v) > 0`` and a cover set
``U_v`` of sample points.  The five axioms tying these together (bounded
valence; ``B(p_v, r_v) ⊆ U_v ⊆ B(p_v, K r_v)``; neighbor covers meet and
have comparable scales, while meeting covers are combinatorially close;
metric neighborhoods of a cover stay inside the combinatorial star; cover
points connect inside the star) are *verified a posteriori* on the finite
data by :func:`verify_k_approximation`, which reports the smallest integer
K that works.  Builders construct candidate data from triangle meshes or
from square complexes; the verifier is the contract.
"""

import json
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import (
    BadRadius,
    EmptyGraph,
    EmptyInfimumSet,
    MeshTooCoarse,
    UnknownVertex,
)
from .metric_core import FiniteMetricSpace
from .spaces import MeshedSphere, adjacency_from_triangles, edges_from_triangles


class ApproxGraph:
    """Undirected graph with a combinatorial distance oracle.

    ``k(u, v)`` is the hop distance; combinatorial balls are taken with a
    strict inequality, ``ball(v, L) = {u : k(u, v) < L}``, so ``ball(v, 1)``
    is the singleton ``{v}``.
    """

    def __init__(self, adjacency, triangles=None):
        self.adj = [np.asarray(sorted(set(int(x) for x in a)), dtype=int)
                    for a in adjacency]
        self.n = len(self.adj)
        self.triangles = None if triangles is None else np.asarray(triangles, int)

    @classmethod
    def from_edges(cls, n, edges, triangles=None):
        nbrs = [set() for _ in range(n)]
        for u, v in edges:
            if u != v:
                nbrs[u].add(int(v))
                nbrs[v].add(int(u))
        return cls(nbrs, triangles)

    def degree(self, v):
        return len(self.adj[v])

    @property
    def max_valence(self):
        return max((len(a) for a in self.adj), default=0)

    def edges(self):
        out = []
        for u in range(self.n):
            for v in self.adj[u]:
                if u < v:
                    out.append((u, int(v)))
        return np.array(out, dtype=int).reshape(-1, 2)

    def ball(self, v, L):
        """Vertices at hop distance < L from v (depth-limited BFS)."""
        if not 0 <= v < self.n:
            raise UnknownVertex(f"vertex {v}")
        if L <= 0:
            return np.empty(0, dtype=int)
        seen = {int(v)}
        frontier = [int(v)]
        depth = 0
        while frontier and depth + 1 < L:
            nxt = []
            for u in frontier:
                for w in self.adj[u]:
                    w = int(w)
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
            depth += 1
        return np.array(sorted(seen), dtype=int)

    def multi_source_ball(self, sources, L):
        """Vertices at hop distance < L from the source set."""
        if L <= 0:
            return np.empty(0, dtype=int)
        seen = set(int(s) for s in sources)
        frontier = list(seen)
        depth = 0
        while frontier and depth + 1 < L:
            nxt = []
            for u in frontier:
                for w in self.adj[u]:
                    w = int(w)
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
            depth += 1
        return np.array(sorted(seen), dtype=int)

    def hops_from(self, sources):
        """Hop distances from a vertex set; -1 where unreachable."""
        out = np.full(self.n, -1, dtype=int)
        dq = deque()
        for s in sources:
            s = int(s)
            if out[s] < 0:
                out[s] = 0
                dq.append(s)
        while dq:
            u = dq.popleft()
            for w in self.adj[u]:
                w = int(w)
                if out[w] < 0:
                    out[w] = out[u] + 1
                    dq.append(w)
        return out

    def dists_from(self, v, cap=None):
        """Hop distances from v; -1 where unreachable."""
        out = np.full(self.n, -1, dtype=int)
        out[v] = 0
        dq = deque([int(v)])
        while dq:
            u = dq.popleft()
            if cap is not None and out[u] >= cap:
                continue
            for w in self.adj[u]:
                w = int(w)
                if out[w] < 0:
                    out[w] = out[u] + 1
                    dq.append(w)
        return out

    def k_dist(self, u, v, cap=None):
        """Hop distance between two vertices (-1 if unreachable/over cap)."""
        if u == v:
            return 0
        seen = {int(u): 0}
        dq = deque([int(u)])
        while dq:
            x = dq.popleft()
            d = seen[x]
            if cap is not None and d >= cap:
                continue
            for w in self.adj[x]:
                w = int(w)
                if w not in seen:
                    if w == v:
                        return d + 1
                    seen[w] = d + 1
                    dq.append(w)
        return -1

    def connected(self):
        if self.n == 0:
            return True
        return len(self.component_of(0)) == self.n

    def component_of(self, v):
        seen = {int(v)}
        stack = [int(v)]
        while stack:
            u = stack.pop()
            for w in self.adj[u]:
                w = int(w)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen


# --------------------------------------------------------------------------
# the approximation record
# --------------------------------------------------------------------------

@dataclass
class KApproximation:
    """Graph approximation data over a sampled space."""

    graph: ApproxGraph
    space: FiniteMetricSpace = field(repr=False)
    p: np.ndarray
    r: np.ndarray
    cover: List[np.ndarray]
    k_report: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=int)
        self.r = np.asarray(self.r, dtype=float)
        if not (len(self.p) == len(self.r) == len(self.cover) == self.graph.n):
            raise ValueError("inconsistent approximation arrays")
        if np.any(self.r <= 0) or not np.all(np.isfinite(self.r)):
            raise BadRadius("vertex scales must be positive and finite")
        self.cover = [np.unique(np.asarray(c, dtype=int)) for c in self.cover]
        self._point_index = None

    @property
    def n_vertices(self):
        return self.graph.n

    def point_index(self):
        """point id -> array of vertices whose cover contains it."""
        if self._point_index is None:
            idx = [[] for _ in range(self.space.n)]
            for v, c in enumerate(self.cover):
                for z in c:
                    idx[z].append(v)
            self._point_index = [np.array(a, dtype=int) for a in idx]
        return self._point_index

    def cover_multiplicity(self):
        counts = np.zeros(self.space.n, dtype=int)
        for c in self.cover:
            counts[c] += 1
        return counts


def mesh_size(A):
    """Largest vertex scale of the approximation."""
    if A.graph.n == 0:
        raise EmptyGraph("mesh size of an empty approximation")
    return float(A.r.max())


def vertex_set_of(E, A):
    """Vertices whose cover meets the point set E."""
    ids = E.ids if hasattr(E, "ids") else np.asarray(E, dtype=int)
    idx = A.point_index()
    if len(ids) == 0:
        return np.empty(0, dtype=int)
    parts = [idx[int(z)] for z in ids]
    return np.unique(np.concatenate(parts)) if parts else np.empty(0, dtype=int)


def star(v, L, A):
    """Point ids of the union of covers over the combinatorial ball."""
    vs = A.graph.ball(v, L)
    if len(vs) == 0:
        return np.empty(0, dtype=int)
    return np.unique(np.concatenate([A.cover[u] for u in vs]))


def neighborhood(A, vertex_set, s):
    """Combinatorial s-neighborhood of a vertex set (hop distance < s)."""
    return A.graph.multi_source_ball(np.asarray(vertex_set, dtype=int), s)


def continuum_in_some_star(A, ids, L=None):
    """Does some combinatorial star swallow the whole point set?"""
    L = A.k_report if L is None else L
    if L is None:
        raise ValueError("need a star size (no verified K on record)")
    ids = np.asarray(ids, dtype=int)
    anchors = vertex_set_of(ids, A)
    target = set(int(z) for z in ids)
    for v in anchors:
        if target <= set(int(z) for z in star(int(v), L, A)):
            return True
    return False


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------

@dataclass
class VerificationReport:
    k_report: Optional[int]
    violations: List[str]
    bounds: dict

    @property
    def ok(self):
        return self.k_report is not None and not self.violations


def _strict_int_bound(ratio, tol=1e-9):
    """Smallest integer K with ratio <= K, closures within tol forgiven."""
    return max(1, int(np.ceil(ratio * (1.0 - tol))))


def verify_k_approximation(A, max_k=32, tol=1e-9):
    """A-posteriori audit of the five approximation axioms.

    Returns a report carrying the smallest integer K that satisfies all
    axioms on the finite data, or the list of hard violations (conditions
    no K can repair).  Boundary cases within a relative ``tol`` count as
    satisfied; the report stores the individual per-axiom bounds.
    """
    G, Z = A.graph, A.space
    V = G.n
    if V == 0:
        raise EmptyGraph("verification of an empty approximation")
    violations = []
    bounds = {}

    k_valence = max(1, G.max_valence)
    bounds["valence"] = k_valence

    miss = np.flatnonzero(A.cover_multiplicity() == 0)
    if len(miss):
        violations.append(f"cover misses {len(miss)} sample points "
                          f"(first: {int(miss[0])})")

    # axiom 2: B(p_v, r_v) ⊆ U_v ⊆ B(p_v, K r_v)
    ratio_upper = 1.0
    cover_sets = [set(int(z) for z in c) for c in A.cover]
    max_cover_reach = np.empty(V)
    for v in range(V):
        d_cov = Z.pair_dists(np.full(len(A.cover[v]), A.p[v]), A.cover[v])
        max_cover_reach[v] = d_cov.max() if len(d_cov) else 0.0
        ratio_upper = max(ratio_upper, max_cover_reach[v] / A.r[v])
        inside = Z.near(int(A.p[v]), float(A.r[v]) * (1.0 - tol))
        missing = [z for z in inside if int(z) not in cover_sets[v]]
        if missing:
            violations.append(
                f"vertex {v}: ball point {missing[0]} outside its cover")
    k_upper = _strict_int_bound(ratio_upper, tol)
    bounds["cover_upper"] = k_upper

    # axiom 3: neighbor covers meet, comparable scales, meeting covers close
    ratio_scale = 1.0
    for u in range(V):
        for v in G.adj[u]:
            v = int(v)
            if u < v:
                if not (cover_sets[u] & cover_sets[v]):
                    violations.append(f"edge ({u},{v}): covers do not meet")
                ratio_scale = max(ratio_scale, A.r[u] / A.r[v], A.r[v] / A.r[u])
    k_scale = _strict_int_bound(ratio_scale, tol)
    bounds["scale_ratio"] = k_scale

    partners = [set() for _ in range(V)]
    idx = A.point_index()
    for z in range(Z.n):
        vs = idx[z]
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                partners[int(vs[i])].add(int(vs[j]))
    k_overlap = 1
    for u in range(V):
        todo = set(partners[u])
        if not todo:
            continue
        # expand from u only until every overlap partner is reached
        seen = {u}
        frontier = [u]
        depth = 0
        todo.discard(u)
        while todo and frontier and depth < max_k:
            depth += 1
            nxt = []
            for x in frontier:
                for w in G.adj[x]:
                    w = int(w)
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
                        if w in todo:
                            todo.discard(w)
                            k_overlap = max(k_overlap, depth + 1)
            frontier = nxt
        for v in sorted(todo):
            violations.append(
                f"covers of {u} and {v} meet but hop distance exceeds {max_k}")
    bounds["overlap_hops"] = k_overlap

    k_low = max(k_valence, k_upper, k_scale, k_overlap)

    # axiom 4: metric neighborhood of a cover inside the combinatorial star;
    # axiom 5: cover points mesh-connected inside the star.  Both are
    # monotone in K, so scan upward per vertex.
    k4 = k5 = 1
    check_paths = Z.adjacency is not None
    if not check_paths:
        bounds["star_connectivity"] = None
    for v in range(V):
        if len(A.cover[v]) == 0:
            continue  # already reported as an emptied cover above
        reach = max_cover_reach[v] + A.r[v] * 1.01
        cand = Z.near(int(A.p[v]), float(reach))
        if len(cand):
            dmin = np.empty(len(cand))
            step = max(1, 4_000_000 // max(len(A.cover[v]), 1))
            for lo in range(0, len(cand), step):
                hi = min(lo + step, len(cand))
                dmin[lo:hi] = Z.cross_dists(cand[lo:hi], A.cover[v]).min(axis=1)
        else:
            dmin = None

        star_pts = set()
        seen = {v}
        frontier = [v]
        K = 1
        need4 = True
        need5 = check_paths
        while (need4 or need5) and K <= max_k:
            for u in frontier:
                star_pts.update(int(z) for z in A.cover[u])
            if need4 and K >= k_low:
                thr = A.r[v] / K * (1.0 - tol)
                close = [int(cand[i]) for i in range(len(cand)) if dmin[i] < thr]
                if all(z in star_pts for z in close):
                    k4 = max(k4, K)
                    need4 = False
            if need5 and K >= k_low:
                if _connected_within(Z, A.cover[v], star_pts):
                    k5 = max(k5, K)
                    need5 = False
            nxt = []
            for u in frontier:
                for w in G.adj[u]:
                    w = int(w)
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
            K += 1
            if not frontier and (need4 or need5):
                # star saturated the component; one more evaluation at k_low
                for u in seen:
                    star_pts.update(int(z) for z in A.cover[u])
                K = max(K, k_low)
                if need4:
                    thr = A.r[v] / K * (1.0 - tol)
                    close = [int(cand[i]) for i in range(len(cand)) if dmin[i] < thr]
                    if all(z in star_pts for z in close):
                        k4 = max(k4, K)
                        need4 = False
                if need5 and _connected_within(Z, A.cover[v], star_pts):
                    k5 = max(k5, K)
                    need5 = False
                break
        if need4:
            violations.append(f"vertex {v}: neighborhood axiom fails up to K={max_k}")
        if need5:
            violations.append(f"vertex {v}: star connectivity fails up to K={max_k}")
    bounds["star_neighborhood"] = k4
    if check_paths:
        bounds["star_connectivity"] = k5

    if violations:
        return VerificationReport(None, violations, bounds)
    return VerificationReport(max(k_low, k4, k5), [], bounds)


def _connected_within(Z, ids, allowed):
    """Are ``ids`` in one mesh component of the induced subgraph on ``allowed``?"""
    ids = [int(z) for z in ids]
    if len(ids) <= 1:
        return True
    target = set(ids)
    if not target <= allowed:
        return False
    seen = {ids[0]}
    stack = [ids[0]]
    reached = 1
    while stack and reached < len(target):
        u = stack.pop()
        for w in Z.adjacency[u]:
            w = int(w)
            if w in allowed and w not in seen:
                seen.add(w)
                if w in target:
                    reached += 1
                stack.append(w)
    return reached == len(target)


# --------------------------------------------------------------------------
# builders
# --------------------------------------------------------------------------

def build_approximation(mesh, level, space=None, cover_factor=1.25,
                        verify=True, max_k=32):
    """Approximation carried by a mesh subdivision level.

    Vertices are the mesh vertices of the given level (a prefix of the
    sample points); ``p`` is the identity, ``r(v)`` the longest incident
    edge at that level, and the cover the open metric ball of radius
    ``cover_factor * r(v)`` in the sample.
    """
    if not 0 <= level <= mesh.levels:
        raise UnknownVertex(f"mesh has no level {level}")
    Z = mesh.space() if space is None else space
    tris = mesh.triangles(level)
    nv = mesh.n_vertices(level)
    adj = adjacency_from_triangles(tris, nv)
    G = ApproxGraph(adj, triangles=tris)
    E = edges_from_triangles(tris)
    elen = Z.pair_dists(E[:, 0], E[:, 1])
    r = np.zeros(nv)
    for (u, v), ln in zip(E, elen):
        r[u] = max(r[u], ln)
        r[v] = max(r[v], ln)
    p = np.arange(nv)
    cover = [Z.near(int(v), cover_factor * float(r[v])) for v in range(nv)]
    A = KApproximation(G, Z, p, r, cover,
                       meta={"builder": "mesh", "level": level,
                             "cover_factor": cover_factor})
    if verify:
        rep = verify_k_approximation(A, max_k=max_k)
        if not rep.ok:
            raise MeshTooCoarse("axioms failed: " + "; ".join(rep.violations))
        A.k_report = rep.k_report
        A.meta["bounds"] = rep.bounds
    return A


def complex_approximation(cx, level, sample, cover_factor=1.6,
                          verify=True, max_k=32):
    """Approximation of a snowball sample by one square level.

    Vertices are the squares of ``cx.levels[level]``; two squares are
    adjacent when they share a full edge.  The basepoint of a square is
    the sample point nearest its center (the exact center may have been
    refined away at deeper levels), the scale is the square side.
    """
    from scipy.spatial import cKDTree

    lv = cx.levels[level]
    side = 5.0 ** (-lv.exponent)
    centers = lv.corners.sum(axis=1).astype(float) / 4.0 * side
    edge_owner = {}
    nbrs = [set() for _ in range(lv.count)]
    for s, sq in enumerate(lv.corners):
        for e in range(4):
            a = tuple(int(x) for x in sq[e])
            b = tuple(int(x) for x in sq[(e + 1) % 4])
            key = (a, b) if a < b else (b, a)
            other = edge_owner.get(key)
            if other is None:
                edge_owner[key] = s
            else:
                nbrs[s].add(other)
                nbrs[other].add(s)
    G = ApproxGraph(nbrs)
    Z = sample.space
    tree = cKDTree(Z.coords)
    _, p = tree.query(centers)
    r = np.full(lv.count, side)
    cover = [Z.near(int(p[v]), cover_factor * side) for v in range(lv.count)]
    A = KApproximation(G, Z, p, r, cover,
                       meta={"builder": "square-complex", "level": level,
                             "cover_factor": cover_factor})
    if verify:
        rep = verify_k_approximation(A, max_k=max_k)
        if not rep.ok:
            raise MeshTooCoarse("axioms failed: " + "; ".join(rep.violations))
        A.k_report = rep.k_report
        A.meta["bounds"] = rep.bounds
    return A


@dataclass
class ApproximationLadder:
    """Approximations of one space at decreasing mesh size."""

    levels: List[KApproximation]

    def __post_init__(self):
        if not self.levels:
            raise EmptyGraph("empty ladder")
        sizes = [mesh_size(A) for A in self.levels]
        if any(b >= a for a, b in zip(sizes, sizes[1:])):
            raise BadRadius(f"ladder mesh sizes must decrease: {sizes}")
        for A in self.levels[1:]:
            if A.space is not self.levels[0].space:
                raise ValueError("ladder levels must share one sample space")

    @property
    def k_bound(self):
        ks = [A.k_report for A in self.levels if A.k_report is not None]
        return max(ks) if ks else None

    def mesh_sizes(self):
        return [mesh_size(A) for A in self.levels]


# --------------------------------------------------------------------------
# nets and pushforwards
# --------------------------------------------------------------------------

def greedy_net(Z, r, seed=0):
    """Maximal r-separated subset, greedy in a seeded random order.

    Every point ends up within r of the net (maximality), and net points
    are pairwise >= r apart.  ``r`` larger than the diameter yields a
    singleton.
    """
    if not np.isfinite(r) or r <= 0:
        raise BadRadius(f"net radius {r}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(Z.n)
    mind = np.full(Z.n, np.inf)
    net = []
    for i in order:
        if mind[i] >= r:
            net.append(int(i))
            mind = np.minimum(mind, Z.dist_row(int(i)))
    return np.array(sorted(net), dtype=int)


def points_approximation(Z, ids, r, cover_factor=1.25, verify=True,
                         max_k=32, meta=None):
    """Approximation carried by a prescribed basepoint set at one scale.

    Every scale is ``r`` and the cover of a basepoint is the metric ball
    of radius ``cover_factor * r`` around it; two vertices are adjacent
    exactly when their covers share a sample point.  The caller chooses
    the basepoints (a net, a sub-lattice of a structured sample, ...) and
    the verifier audits covering and the axioms a posteriori.
    """
    if not np.isfinite(r) or r <= 0:
        raise BadRadius(f"basepoint scale {r}")
    ids = np.asarray(ids, dtype=int)
    m = len(ids)
    cover = [Z.near(int(i), cover_factor * r) for i in ids]
    cover_sets = [set(int(z) for z in c) for c in cover]
    edges = []
    for i in range(m):
        di = Z.pair_dists(np.full(m - i - 1, ids[i]), ids[i + 1:])
        for off in np.flatnonzero(di <= 2.0 * cover_factor * r):
            j = i + 1 + int(off)
            if cover_sets[i] & cover_sets[j]:
                edges.append((i, j))
    G = ApproxGraph.from_edges(m, edges)
    A = KApproximation(G, Z, ids, np.full(m, float(r)), cover,
                       meta={"builder": "points", "radius": float(r),
                             "cover_factor": cover_factor,
                             **(meta or {})})
    if verify:
        rep = verify_k_approximation(A, max_k=max_k)
        if not rep.ok:
            raise MeshTooCoarse("axioms failed: " + "; ".join(rep.violations))
        A.k_report = rep.k_report
        A.meta["bounds"] = rep.bounds
    return A


def net_approximation(Z, r, seed=0, cover_factor=1.25, verify=True, max_k=32):
    """Approximation carried by a maximal r-separated net of the sample.

    Basepoints are the net points (maximality of the net makes the
    ``cover_factor * r`` balls cover the sample); unlike the mesh builder
    this needs no triangulation, so it applies to spaces whose natural
    sampling has no combinatorial scaffold.
    """
    if not np.isfinite(r) or r <= 0:
        raise BadRadius(f"net radius {r}")
    ids = greedy_net(Z, r, seed=seed)
    return points_approximation(Z, ids, r, cover_factor=cover_factor,
                                verify=verify, max_k=max_k,
                                meta={"builder": "net", "seed": seed})


def max_separated_vertices(A, L, seed=0):
    """Maximal combinatorially L-separated vertex set (hop distance >= L)."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(A.graph.n)
    chosen = []
    blocked = np.zeros(A.graph.n, dtype=bool)
    for v in order:
        if not blocked[v]:
            chosen.append(int(v))
            blocked[A.graph.multi_source_ball([int(v)], L)] = True
    return np.array(sorted(chosen), dtype=int)


def pushforward_approximation(A, f, Y, verify=True, max_k=32):
    """Transport an approximation through a vertex-sampled map X -> Y.

    ``f`` maps sample ids of A's space to sample ids of Y.  Basepoints and
    covers push forward pointwise; the new scale of v is the least image
    distance to the new basepoint over sample points at distance >= r(v)
    from the old one, which keeps the lower cover inclusion valid.
    """
    X = A.space
    f = np.asarray(f, dtype=int)
    if mesh_size(A) >= X.diam / 2.0:
        raise MeshTooCoarse("pushforward needs mesh(A) < diam(X)/2")
    V = A.graph.n
    p2 = f[A.p]
    r2 = np.empty(V)
    for v in range(V):
        dx = X.dist_row(int(A.p[v]))
        far = np.flatnonzero(dx >= A.r[v])
        if len(far) == 0:
            raise EmptyInfimumSet(f"vertex {v}: no sample point beyond r(v)")
        dy = Y.pair_dists(np.full(len(far), p2[v]), f[far])
        r2[v] = dy.min()
        if r2[v] <= 0:
            raise EmptyInfimumSet(f"vertex {v}: pushed scale degenerates")
    cover2 = [np.unique(f[c]) for c in A.cover]
    B = KApproximation(A.graph, Y, p2, r2, cover2,
                       meta={"builder": "pushforward", "parent": A.meta})
    if verify:
        rep = verify_k_approximation(B, max_k=max_k)
        B.k_report = rep.k_report
        B.meta["bounds"] = rep.bounds
        B.meta["violations"] = rep.violations
    return B


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def approximation_to_json(A, include_space=True):
    doc = {
        "format": "kapprox-v1",
        "n_vertices": A.graph.n,
        "edges": A.graph.edges().tolist(),
        "p": A.p.tolist(),
        "r": A.r.tolist(),
        "cover": [c.tolist() for c in A.cover],
        "k_report": A.k_report,
        "meta": _plain(A.meta),
    }
    if A.graph.triangles is not None:
        doc["triangles"] = A.graph.triangles.tolist()
    if include_space:
        Z = A.space
        sdoc = {"metric": Z.metric, "n": Z.n, "label": Z.label}
        if Z.metric == "matrix":
            sdoc["matrix"] = Z._matrix.tolist()
            if Z.coords is not None:
                sdoc["coords"] = Z.coords.tolist()
        else:
            sdoc["coords"] = Z.coords.tolist()
        if Z.adjacency is not None:
            sdoc["adjacency"] = [a.tolist() for a in Z.adjacency]
        doc["space"] = sdoc
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def approximation_from_json(text, space=None):
    doc = json.loads(text)
    if doc.get("format") != "kapprox-v1":
        raise ValueError("not an approximation document")
    if space is None:
        sdoc = doc["space"]
        adj = [np.asarray(a, dtype=int) for a in sdoc["adjacency"]] \
            if "adjacency" in sdoc else None
        if sdoc["metric"] == "matrix":
            space = FiniteMetricSpace(
                matrix=np.asarray(sdoc["matrix"], dtype=float),
                coords=np.asarray(sdoc["coords"], dtype=float)
                if "coords" in sdoc else None,
                metric="matrix", adjacency=adj, label=sdoc.get("label", ""))
        else:
            space = FiniteMetricSpace(
                coords=np.asarray(sdoc["coords"], dtype=float),
                metric=sdoc["metric"], adjacency=adj, label=sdoc.get("label", ""))
    tris = np.asarray(doc["triangles"], dtype=int) if "triangles" in doc else None
    G = ApproxGraph.from_edges(doc["n_vertices"], doc["edges"], triangles=tris)
    A = KApproximation(G, space,
                       np.asarray(doc["p"], dtype=int),
                       np.asarray(doc["r"], dtype=float),
                       [np.asarray(c, dtype=int) for c in doc["cover"]],
                       k_report=doc.get("k_report"),
                       meta=doc.get("meta", {}))
    return A


def _plain(obj):
    """Recursively convert numpy scalars/arrays for JSON."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
