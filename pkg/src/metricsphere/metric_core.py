"""Finite metric spaces and the cross-ratio / regularity toolkit.

A discretized surface enters every pipeline as a :class:`FiniteMetricSpace`:
a finite point set with a distance oracle and, usually, a mesh adjacency
certifying which sample points are neighbors on the underlying surface.
On top of that sit the four-point invariants (cross-ratio and its min-type
variant), relative distance of disjoint vertex continua, and sampled
estimators for doubling, linear local connectivity and weak uniform
perfectness.

Conventions:

* point ids are integers ``0 .. n-1``;
* the cross-ratio of ``(z1, z2, z3, z4)`` is
  ``d(z1,z3) d(z2,z4) / (d(z1,z4) d(z2,z3))``, with value 0 when
  ``z1 == z3`` or ``z2 == z4`` and an error when the denominator vanishes
  for a tuple that is not degenerate in that sense;
* the min-type variant replaces both products by minima.
"""

import heapq
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    BadRadius,
    DegenerateContinuum,
    EmptyScaleList,
    NotConnected,
    ZeroDenominator,
)

_BRUTE_DIAMETER_LIMIT = 4096


class FiniteMetricSpace:
    """Finite point set with a distance oracle.

    Backed either by ambient 3-space coordinates (``metric="chordal"`` or
    ``metric="angular"``, distances computed on demand) or by an explicit
    dense matrix (``metric="matrix"``).  ``adjacency`` is an optional list
    of sorted integer arrays giving the mesh neighbors of each point; it is
    required by the connectivity-based estimators.
    """

    def __init__(self, coords=None, matrix=None, metric="chordal",
                 adjacency=None, label=""):
        if metric in ("chordal", "angular"):
            if coords is None:
                raise ValueError("coordinate-backed metric needs coords")
            self.coords = np.asarray(coords, dtype=float)
            if self.coords.ndim != 2:
                raise ValueError("coords must be (n, d)")
            self.n = self.coords.shape[0]
            self._matrix = None
        elif metric == "matrix":
            if matrix is None:
                raise ValueError("matrix metric needs a matrix")
            self._matrix = np.asarray(matrix, dtype=float)
            if self._matrix.ndim != 2 or self._matrix.shape[0] != self._matrix.shape[1]:
                raise ValueError("matrix must be square")
            self.n = self._matrix.shape[0]
            self.coords = np.asarray(coords, dtype=float) if coords is not None else None
        else:
            raise ValueError(f"unknown metric mode {metric!r}")
        self.metric = metric
        self.adjacency = adjacency
        self.label = label
        self._diam = None
        self._tree = None

    # ------------------------------------------------------------- distances

    def dist_row(self, i):
        """Distances from point ``i`` to every point, as an ``(n,)`` array."""
        if self.metric == "matrix":
            return self._matrix[i]
        diff = self.coords - self.coords[i]
        chord = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        if self.metric == "angular":
            return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
        return chord

    def dist(self, i, j):
        if self.metric == "matrix":
            return float(self._matrix[i, j])
        chord = float(np.linalg.norm(self.coords[i] - self.coords[j]))
        if self.metric == "angular":
            return 2.0 * float(np.arcsin(min(chord / 2.0, 1.0)))
        return chord

    def pair_dists(self, I, J):
        """Vectorized distances ``d(I[k], J[k])``."""
        I = np.asarray(I)
        J = np.asarray(J)
        if self.metric == "matrix":
            return self._matrix[I, J]
        diff = self.coords[I] - self.coords[J]
        chord = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        if self.metric == "angular":
            return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
        return chord

    def cross_dists(self, I, J):
        """Dense block of distances, shape ``(len(I), len(J))``."""
        I = np.asarray(I)
        J = np.asarray(J)
        if self.metric == "matrix":
            return self._matrix[np.ix_(I, J)]
        diff = self.coords[I][:, None, :] - self.coords[J][None, :, :]
        chord = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        if self.metric == "angular":
            return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
        return chord

    @property
    def diam(self):
        if self._diam is None:
            if self.metric == "matrix":
                self._diam = float(self._matrix.max())
            elif self.n <= _BRUTE_DIAMETER_LIMIT:
                best = 0.0
                for i in range(self.n):
                    best = max(best, float(self.dist_row(i).max()))
                self._diam = best
            else:
                # Diameter is attained on the convex hull of the coordinates.
                from scipy.spatial import ConvexHull

                hull = np.unique(ConvexHull(self.coords).vertices)
                sub = self.coords[hull]
                diff = sub[:, None, :] - sub[None, :, :]
                chord = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).max()
                if self.metric == "angular":
                    self._diam = 2.0 * float(np.arcsin(min(chord / 2.0, 1.0)))
                else:
                    self._diam = float(chord)
        return self._diam

    def near(self, i, radius):
        """Ids of points within distance < radius of point ``i``."""
        if radius <= 0:
            return np.empty(0, dtype=int)
        if self.metric == "matrix":
            return np.flatnonzero(self._matrix[i] < radius)
        if self._tree is None:
            self._tree = cKDTree(self.coords)
        if self.metric == "angular":
            chord = 2.0 if radius >= np.pi else 2.0 * np.sin(radius / 2.0)
        else:
            chord = radius
        ids = self._tree.query_ball_point(self.coords[i], chord)
        ids = np.asarray(sorted(ids), dtype=int)
        # KD query is closed; the ball here is open.
        keep = self.pair_dists(np.full(len(ids), i), ids) < radius
        return ids[keep]

    # ---------------------------------------------------------- connectivity

    def neighbors(self, i):
        if self.adjacency is None:
            raise NotConnected("space carries no mesh adjacency")
        return self.adjacency[i]

    def mesh_connected(self, ids=None):
        """Is the mesh graph (restricted to ``ids`` if given) connected?"""
        if self.adjacency is None:
            raise NotConnected("space carries no mesh adjacency")
        if ids is None:
            members = None
            start = 0
            total = self.n
        else:
            ids = np.asarray(ids, dtype=int)
            if len(ids) == 0:
                return True
            members = set(int(x) for x in ids)
            start = int(ids[0])
            total = len(ids)
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                v = int(v)
                if members is not None and v not in members:
                    continue
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == total

    def check_metric(self, triples=2000, seed=0, rtol=1e-9):
        """Sampled metric-axiom audit.

        Returns ``(worst_symmetry, worst_triangle)`` where the triangle
        figure is the largest value of ``d(a,c) - d(a,b) - d(b,c)`` seen,
        normalized by the diameter (so 0 or negative means clean).
        """
        rng = np.random.default_rng(seed)
        scale = self.diam if self.diam > 0 else 1.0
        worst_sym = 0.0
        worst_tri = -np.inf
        for _ in range(triples):
            a, b, c = rng.integers(0, self.n, size=3)
            dab = self.dist(a, b)
            worst_sym = max(worst_sym, abs(dab - self.dist(b, a)) / scale)
            slack = self.dist(a, c) - dab - self.dist(b, c)
            worst_tri = max(worst_tri, slack / scale)
        return worst_sym, worst_tri


# ---------------------------------------------------------------- four tuples

@dataclass(frozen=True)
class FourTuple:
    """Ordered four points of a space, the argument of a cross-ratio.

    The tuple is *degenerate* when ``z1 == z3`` or ``z2 == z4``; the
    cross-ratio of a degenerate tuple is 0 by convention.  Coincidences
    ``z1 == z4`` or ``z2 == z3`` make the denominator vanish and are
    rejected by the cross-ratio functions instead.
    """

    z1: int
    z2: int
    z3: int
    z4: int

    @property
    def degenerate(self):
        return self.z1 == self.z3 or self.z2 == self.z4

    def ids(self):
        return (self.z1, self.z2, self.z3, self.z4)


def _as_tuple(t):
    if isinstance(t, FourTuple):
        return t
    z1, z2, z3, z4 = (int(x) for x in t)
    return FourTuple(z1, z2, z3, z4)


def cross_ratio(t, Z):
    """Metric cross-ratio ``d13 d24 / (d14 d23)``; 0 for degenerate tuples."""
    t = _as_tuple(t)
    if t.degenerate:
        return 0.0
    d14 = Z.dist(t.z1, t.z4)
    d23 = Z.dist(t.z2, t.z3)
    den = d14 * d23
    if den == 0.0:
        raise ZeroDenominator(f"cross-ratio denominator vanished for {t.ids()}")
    return Z.dist(t.z1, t.z3) * Z.dist(t.z2, t.z4) / den


def min_cross_ratio(t, Z):
    """Min-type cross-ratio ``(d13 ∧ d24) / (d14 ∧ d23)``."""
    t = _as_tuple(t)
    if t.degenerate:
        return 0.0
    den = min(Z.dist(t.z1, t.z4), Z.dist(t.z2, t.z3))
    if den == 0.0:
        raise ZeroDenominator(f"min cross-ratio denominator vanished for {t.ids()}")
    return min(Z.dist(t.z1, t.z3), Z.dist(t.z2, t.z4)) / den


def control_function(t):
    """The distortion control ``t -> 3 (t ∨ sqrt(t))``.

    Dominates the min-type cross-ratio in terms of the plain one: for any
    non-degenerate tuple, ``min_cross_ratio <= control_function(cross_ratio)``.
    """
    t = np.asarray(t, dtype=float)
    out = 3.0 * np.maximum(t, np.sqrt(np.maximum(t, 0.0)))
    return float(out) if out.ndim == 0 else out


def cross_ratios_bulk(Z, tuples):
    """Vectorized cross-ratios for an ``(m, 4)`` id array.

    Degenerate rows give 0; rows with vanishing denominator give ``nan``
    (bulk callers filter rather than raise).
    """
    T = np.asarray(tuples, dtype=int)
    d13 = Z.pair_dists(T[:, 0], T[:, 2])
    d24 = Z.pair_dists(T[:, 1], T[:, 3])
    d14 = Z.pair_dists(T[:, 0], T[:, 3])
    d23 = Z.pair_dists(T[:, 1], T[:, 2])
    num = d13 * d24
    den = d14 * d23
    out = np.full(len(T), np.nan)
    deg = (T[:, 0] == T[:, 2]) | (T[:, 1] == T[:, 3])
    ok = (den > 0) & ~deg
    out[ok] = num[ok] / den[ok]
    out[deg] = 0.0
    return out


def min_cross_ratios_bulk(Z, tuples):
    T = np.asarray(tuples, dtype=int)
    d13 = Z.pair_dists(T[:, 0], T[:, 2])
    d24 = Z.pair_dists(T[:, 1], T[:, 3])
    d14 = Z.pair_dists(T[:, 0], T[:, 3])
    d23 = Z.pair_dists(T[:, 1], T[:, 2])
    num = np.minimum(d13, d24)
    den = np.minimum(d14, d23)
    out = np.full(len(T), np.nan)
    deg = (T[:, 0] == T[:, 2]) | (T[:, 1] == T[:, 3])
    ok = (den > 0) & ~deg
    out[ok] = num[ok] / den[ok]
    out[deg] = 0.0
    return out


def sample_four_tuples(n_points, count, seed, distinct=True):
    """Seeded sample of four-point tuples, ``(count, 4)`` int array."""
    rng = np.random.default_rng(seed)
    if not distinct:
        return rng.integers(0, n_points, size=(count, 4))
    out = np.empty((count, 4), dtype=int)
    filled = 0
    while filled < count:
        cand = rng.integers(0, n_points, size=(2 * (count - filled) + 8, 4))
        good = (
            (cand[:, 0] != cand[:, 1]) & (cand[:, 0] != cand[:, 2])
            & (cand[:, 0] != cand[:, 3]) & (cand[:, 1] != cand[:, 2])
            & (cand[:, 1] != cand[:, 3]) & (cand[:, 2] != cand[:, 3])
        )
        cand = cand[good]
        take = min(len(cand), count - filled)
        out[filled:filled + take] = cand[:take]
        filled += take
    return out


# ------------------------------------------------------------ vertex continua

@dataclass
class ContinuumSample:
    """Connected vertex subset standing in for a continuum.

    Connectivity is certified against the mesh adjacency of the ambient
    space at construction time.
    """

    ids: np.ndarray
    space: FiniteMetricSpace = field(repr=False)

    def __post_init__(self):
        self.ids = np.unique(np.asarray(self.ids, dtype=int))
        if len(self.ids) < 2:
            raise DegenerateContinuum("continuum sample needs at least 2 points")
        if not self.space.mesh_connected(self.ids):
            raise NotConnected("continuum sample is not mesh-connected")

    @property
    def diam(self):
        D = self.space.cross_dists(self.ids, self.ids)
        return float(D.max())


def _ids_of(E):
    return E.ids if isinstance(E, ContinuumSample) else np.asarray(E, dtype=int)


def set_distance(E, F, Z):
    """min over pairs of d(e, f)."""
    I, J = _ids_of(E), _ids_of(F)
    return float(Z.cross_dists(I, J).min())


def set_diameter(E, Z):
    I = _ids_of(E)
    return float(Z.cross_dists(I, I).max())


def relative_distance(E, F, Z):
    """dist(E, F) / min(diam E, diam F).

    The standard separation invariant of a pair of continua; scale-free.
    """
    dE = set_diameter(E, Z)
    dF = set_diameter(F, Z)
    m = min(dE, dF)
    if m == 0.0:
        raise DegenerateContinuum("relative distance of a zero-diameter set")
    return set_distance(E, F, Z) / m


# ----------------------------------------------------------------- doubling

def doubling_estimate(Z, scales, max_centers=48, seed=0):
    """Empirical doubling constant over the given scales.

    For each scale r and each sampled center, greedily covers the sampled
    ball B(a, r) with balls of radius r/2 (farthest-first) and reports the
    maximum cover cardinality seen.  A genuine doubling space keeps this
    bounded as scales shrink.
    """
    scales = [float(s) for s in scales]
    if not scales:
        raise EmptyScaleList("doubling estimate needs at least one scale")
    for s in scales:
        if not np.isfinite(s) or s <= 0:
            raise BadRadius(f"bad scale {s}")
    rng = np.random.default_rng(seed)
    if Z.n <= max_centers:
        centers = np.arange(Z.n)
    else:
        centers = rng.choice(Z.n, size=max_centers, replace=False)
    worst = 0
    for r in scales:
        for a in centers:
            ball = Z.near(int(a), r)
            if len(ball) == 0:
                continue
            worst = max(worst, _greedy_cover_count(Z, ball, r / 2.0))
    return worst


def _greedy_cover_count(Z, ids, radius):
    """Cardinality of a farthest-first cover of ``ids`` at the given radius."""
    D = Z.cross_dists(ids, ids)
    m = len(ids)
    mind = np.full(m, np.inf)
    count = 0
    pick = 0  # start from the first listed point; deterministic
    while True:
        count += 1
        mind = np.minimum(mind, D[pick])
        far = int(np.argmax(mind))
        if mind[far] < radius:
            return count
        pick = far


# ----------------------------------------------------- linear local connect.

@dataclass
class LlcReport:
    lambda1: float
    lambda2: float
    trials: int
    seed: int
    worst1: Optional[tuple] = None
    worst2: Optional[tuple] = None


def _minimax_level(adj, values, x, y):
    """min over mesh paths x->y of the max of ``values`` along the path."""
    INF = np.inf
    best = {x: values[x]}
    heap = [(values[x], x)]
    while heap:
        k, u = heapq.heappop(heap)
        if u == y:
            return k
        if k > best.get(u, INF):
            continue
        for v in adj[u]:
            v = int(v)
            nk = max(k, values[v])
            if nk < best.get(v, INF):
                best[v] = nk
                heapq.heappush(heap, (nk, v))
    return INF


def _maximin_level(adj, values, x, y):
    """max over mesh paths x->y of the min of ``values`` along the path."""
    best = {x: values[x]}
    heap = [(-values[x], x)]
    while heap:
        nk, u = heapq.heappop(heap)
        k = -nk
        if u == y:
            return k
        if k < best.get(u, -np.inf):
            continue
        for v in adj[u]:
            v = int(v)
            cand = min(k, values[v])
            if cand > best.get(v, -np.inf):
                best[v] = cand
                heapq.heappush(heap, (-cand, v))
    return -np.inf


def llc_witnesses(Z, trials=100, seed=0):
    """Empirical linear-local-connectivity constants of a meshed space.

    For random configurations (a, r, x, y): with x, y in B(a, r), the first
    constant records how much the ball must be dilated for a mesh path from
    x to y to stay inside B(a, lambda r); with x, y outside B(a, r), the
    second records the dilation needed for a path avoiding B(a, r/lambda).
    Returns empirical maxima; deterministic given the seed.
    """
    if Z.adjacency is None:
        raise NotConnected("llc witnesses need a mesh adjacency")
    if not Z.mesh_connected():
        raise NotConnected("mesh graph is disconnected")
    rng = np.random.default_rng(seed)
    lam1, lam2 = 1.0, 1.0
    worst1 = worst2 = None
    diam = Z.diam
    for _ in range(trials):
        a = int(rng.integers(Z.n))
        d = Z.dist_row(a)
        r = float(np.exp(rng.uniform(np.log(diam / 64.0), np.log(1.1 * diam))))
        inside = np.flatnonzero(d < r)
        outside = np.flatnonzero(d >= r)
        if len(inside) >= 2:
            x, y = (int(v) for v in rng.choice(inside, size=2, replace=False))
            level = _minimax_level(Z.adjacency, d, x, y)
            cand = max(1.0, level / r)
            if cand > lam1:
                lam1, worst1 = cand, (a, r, x, y)
        if len(outside) >= 2:
            x, y = (int(v) for v in rng.choice(outside, size=2, replace=False))
            level = _maximin_level(Z.adjacency, d, x, y)
            if level > 0:
                cand = max(1.0, r / level)
                if cand > lam2:
                    lam2, worst2 = cand, (a, r, x, y)
    return LlcReport(lam1, lam2, trials, seed, worst1, worst2)


# ------------------------------------------------- weak uniform perfectness

def weak_uniform_perfectness(M, Z, lam):
    """Exact check of weak uniform perfectness of a finite subset.

    M (id array) passes at dilation ``lam`` if for every a in M and every
    radius 0 < r <= diam(M): whenever the closed ball B̄(a, r/lam) contains
    a point of M other than a, the open annulus B(a, r) \\ B̄(a, r/lam)
    also contains a point of M.  The radius axis is scanned exactly by
    enumerating the critical radii where any ball membership can change.

    Returns ``(ok, witness)`` with ``witness = (a, r)`` for the first
    failure, or ``None``.
    """
    M = np.unique(np.asarray(M, dtype=int))
    if len(M) < 2:
        return True, None
    if lam < 1.0:
        raise BadRadius("dilation must be >= 1")
    D = Z.cross_dists(M, M)
    diam = float(D.max())
    if diam == 0.0:
        raise DegenerateContinuum("subset has zero diameter")
    for idx, a in enumerate(M):
        d = np.sort(D[idx])
        d = d[d > 0]
        if len(d) == 0:
            continue
        # Membership changes only where r or r/lam crosses one of the
        # distances; test each breakpoint and each gap midpoint.
        breaks = np.concatenate([d, lam * d, [diam]])
        breaks = np.unique(breaks[(breaks > 0) & (breaks <= diam)])
        mids = (breaks[:-1] + breaks[1:]) / 2.0
        for r in np.concatenate([breaks, mids]):
            inner = d <= r / lam
            if not inner.any():
                continue
            annulus = (d > r / lam) & (d < r)
            if not annulus.any():
                return False, (int(a), float(r))
    return True, None
