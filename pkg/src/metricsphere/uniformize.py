"""Discrete uniformization and its distortion diagnostics.

Pair an approximation of a sampled sphere-like space with the circle
packing of its graph: sending each basepoint to its cap center gives a
discrete map onto the round sphere.  The rest of the module measures how
far such a map is from conformal naturality -- monotone envelopes over
cross-ratio and triple-ratio pairs, transport of relative distances, the
consistency of combinatorial moduli across a ladder of scales, and the
annulus-modulus scan whose boundedness is the uniformizability signal.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import (
    DomainTooSmall,
    NotATriangulation,
    SeparationViolated,
    TripleTooClose,
)
from .metric_core import (
    FiniteMetricSpace,
    cross_ratios_bulk,
    min_cross_ratios_bulk,
    relative_distance,
)
from .approx import mesh_size, vertex_set_of, continuum_in_some_star
from .modulus import mod_q
from .packing import induced_approximation, mobius_normalize, pack_triangulation


# --------------------------------------------------------------------------
# envelopes
# --------------------------------------------------------------------------

def monotone_envelope(x, y):
    """Least nondecreasing function through (0,0) dominating all (x, y).

    Returns knot arrays (xs, ys): xs sorted ascending starting at 0, ys the
    running maximum.  Evaluate with envelope_value; every sampled pair lies
    on or below the envelope by construction.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], np.maximum.accumulate(y[order])
    keep = np.ones(len(xs), dtype=bool)
    keep[:-1] = xs[1:] != xs[:-1]  # last entry per x carries the max
    xs, ys = xs[keep], ys[keep]
    if len(xs) == 0 or xs[0] > 0.0:
        xs = np.concatenate([[0.0], xs])
        ys = np.concatenate([[0.0], ys])
    return xs, ys


def envelope_value(knots, t):
    xs, ys = knots
    return np.interp(t, xs, ys)


def lower_envelope(x, y):
    """Greatest nondecreasing minorant of the pairs (x, y): running min
    taken from the right."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    ys = np.minimum.accumulate(ys[::-1])[::-1]
    keep = np.ones(len(xs), dtype=bool)
    keep[1:] = xs[1:] != xs[:-1]  # first entry per x carries the min
    return xs[keep], ys[keep]


# --------------------------------------------------------------------------
# the discrete map
# --------------------------------------------------------------------------

@dataclass
class DiscreteMap:
    """Correspondence point-id -> unit vector from a packed level."""

    domain: np.ndarray
    images: np.ndarray = field(repr=False)
    space: FiniteMetricSpace = field(repr=False)
    level: Optional[int] = None
    triple: Optional[Tuple[int, int, int]] = None
    mesh_bound: float = math.nan
    domain_approx: object = field(default=None, repr=False)
    sphere_approx: object = field(default=None, repr=False)

    def __post_init__(self):
        self.domain = np.asarray(self.domain, dtype=int)
        self.images = np.asarray(self.images, dtype=float)
        if len(self.domain) != len(self.images):
            raise ValueError("domain/image length mismatch")
        if len(np.unique(self.domain)) != len(self.domain):
            raise ValueError("discrete map must be injective on point ids")

    @property
    def n(self):
        return len(self.domain)

    def image_space(self):
        return FiniteMetricSpace(coords=self.images, metric="chordal",
                                 label="image-sphere")


def default_triple(A):
    """Three graph vertices with well-spread basepoints (farthest-first).

    Start from the vertex farthest from vertex 0, then twice pick the
    vertex maximizing the minimum distance to those already chosen; on any
    sphere-like sample this yields pairwise spread near the diameter scale,
    comfortably above the diam/4 normalization threshold at every level.
    """
    Z = A.space
    p = np.asarray(A.p, dtype=int)
    d0 = Z.dist_row(int(p[0]))[p]
    v1 = int(np.argmax(d0))
    d1 = Z.dist_row(int(p[v1]))[p]
    v2 = int(np.argmax(d1))
    d2 = Z.dist_row(int(p[v2]))[p]
    v3 = int(np.argmax(np.minimum(d1, d2)))
    return v1, v2, v3


def uniformize_level(A, triple=None, tol=1e-10, sphere_sample=None):
    """Pack an approximation's triangulation and read off the vertex map.

    Returns (map, packing): the packing is normalized on the marked triple
    (three pairwise adjacent vertices whose basepoints are spread at least
    diam/4 apart), and the map sends each basepoint to its cap center.
    The domain approximation and the packing-induced sphere approximation
    ride along on the map when a sphere sample is supplied.
    """
    if A.graph.triangles is None:
        raise NotATriangulation("approximation graph carries no triangulation")
    Z = A.space
    if triple is None:
        triple = default_triple(A)
    t1, t2, t3 = (int(t) for t in triple)
    pts = (int(A.p[t1]), int(A.p[t2]), int(A.p[t3]))
    spread = min(Z.dist(pts[0], pts[1]), Z.dist(pts[0], pts[2]),
                 Z.dist(pts[1], pts[2]))
    if spread < Z.diam / 4.0:
        raise TripleTooClose(
            f"triple spread {spread:.4g} < diam/4 = {Z.diam / 4.0:.4g}")
    P0 = pack_triangulation(A.graph.triangles, tol=tol)
    P, _ = mobius_normalize(P0, t1, t2, t3)
    dm = DiscreteMap(domain=A.p.copy(), images=P.centers.copy(), space=Z,
                     level=A.meta.get("level"), triple=(t1, t2, t3),
                     mesh_bound=mesh_size(A), domain_approx=A)
    if sphere_sample is not None:
        dm.sphere_approx = induced_approximation(P, sphere_sample)
    return dm, P


def level_coherence(maps):
    """Sup image displacement between consecutive maps on shared points.

    Levels of one mesh share their coarse vertices as a prefix; the
    Cauchy-type quantity below is the computable stand-in for convergence
    of the map sequence.
    """
    out = []
    for m1, m2 in zip(maps, maps[1:]):
        k = min(m1.n, m2.n)
        if not np.array_equal(m1.domain[:k], m2.domain[:k]):
            raise ValueError("maps do not share a domain prefix")
        dots = np.clip(np.sum(m1.images[:k] * m2.images[:k], axis=1), -1, 1)
        out.append(float(np.arccos(dots).max()))
    return out


# --------------------------------------------------------------------------
# distortion reports
# --------------------------------------------------------------------------

@dataclass
class DistortionReport:
    n_tuples: int
    seed: int
    cr_in: np.ndarray = field(repr=False)
    cr_out: np.ndarray = field(repr=False)
    envelope: Tuple[np.ndarray, np.ndarray] = field(repr=False)
    envelope_back: Tuple[np.ndarray, np.ndarray] = field(repr=False)
    qs_in: Optional[np.ndarray] = field(default=None, repr=False)
    qs_out: Optional[np.ndarray] = field(default=None, repr=False)
    qs_envelope: Optional[tuple] = field(default=None, repr=False)

    def identity_gap(self, lo=0.0, hi=np.inf):
        """sup |envelope(t) - t| / t over sampled inputs in [lo, hi]."""
        mask = (self.cr_in >= lo) & (self.cr_in <= hi)
        if not mask.any():
            return 0.0
        t = self.cr_in[mask]
        return float(np.max(np.abs(envelope_value(self.envelope, t) - t) / t))


def _distinct_tuples(rng, n, count, width):
    out = np.empty((count, width), dtype=int)
    got = 0
    while got < count:
        block = rng.integers(0, n, size=(count, width))
        ok = np.ones(len(block), dtype=bool)
        for i in range(width):
            for j in range(i + 1, width):
                ok &= block[:, i] != block[:, j]
        block = block[ok]
        take = min(len(block), count - got)
        out[got:got + take] = block[:take]
        got += take
    return out


def _stratified_tuples(rng, strat_values, pool, count):
    """Round-robin the pool across decades of the stratification value."""
    dec = np.floor(np.log10(np.maximum(strat_values, 1e-300))).astype(int)
    dec = np.clip(dec, -8, 8)
    buckets = {}
    for i, d in enumerate(dec):
        buckets.setdefault(int(d), []).append(i)
    order = sorted(buckets)
    chosen = []
    cursor = {d: 0 for d in order}
    while len(chosen) < count:
        advanced = False
        for d in order:
            lst = buckets[d]
            c = cursor[d]
            if c < len(lst):
                chosen.append(lst[c])
                cursor[d] = c + 1
                advanced = True
                if len(chosen) == count:
                    break
        if not advanced:
            break
    return pool[np.array(chosen, dtype=int)]


def distortion_fit(m, tuples=2000, seed=0):
    """Sampled cross-ratio transfer of a discrete map, with envelopes.

    Draws distinct 4-tuples stratified by separation (decades of the
    min-type cross-ratio) so near-degenerate and well-spread configurations
    both appear, records input/output cross-ratios, and fits the least
    monotone dominating envelope in both directions, plus the triple-ratio
    envelope on 3-tuples.  Deterministic for a fixed seed.
    """
    if m.n < 4:
        raise DomainTooSmall(f"domain has {m.n} points, need >= 4")
    rng = np.random.default_rng(seed)
    X = m.space
    Y = m.image_space()

    pool = _distinct_tuples(rng, m.n, tuples * 4, 4)
    ids_pool = m.domain[pool]
    strat = min_cross_ratios_bulk(X, ids_pool)
    good = np.isfinite(strat)
    pool = pool[good]
    strat = strat[good]
    idx = _stratified_tuples(rng, strat, pool, tuples)

    cr_in = cross_ratios_bulk(X, m.domain[idx])
    cr_out = cross_ratios_bulk(Y, idx)
    ok = np.isfinite(cr_in) & np.isfinite(cr_out)
    cr_in, cr_out = cr_in[ok], cr_out[ok]

    trip = _distinct_tuples(rng, m.n, tuples, 3)
    din = X.pair_dists(m.domain[trip[:, 0]], m.domain[trip[:, 1]]) \
        / X.pair_dists(m.domain[trip[:, 0]], m.domain[trip[:, 2]])
    dout = Y.pair_dists(trip[:, 0], trip[:, 1]) \
        / Y.pair_dists(trip[:, 0], trip[:, 2])
    okt = np.isfinite(din) & np.isfinite(dout)
    din, dout = din[okt], dout[okt]

    return DistortionReport(
        n_tuples=int(len(cr_in)), seed=seed, cr_in=cr_in, cr_out=cr_out,
        envelope=monotone_envelope(cr_in, cr_out),
        envelope_back=monotone_envelope(cr_out, cr_in),
        qs_in=din, qs_out=dout, qs_envelope=monotone_envelope(din, dout))


def qs_distortion(m, triples=2000, seed=0):
    """Monotone envelope over triple-ratio pairs d(x,y)/d(x,z) in vs out."""
    if m.n < 3:
        raise DomainTooSmall(f"domain has {m.n} points, need >= 3")
    rng = np.random.default_rng(seed)
    X = m.space
    Y = m.image_space()
    trip = _distinct_tuples(rng, m.n, triples, 3)
    din = X.pair_dists(m.domain[trip[:, 0]], m.domain[trip[:, 1]]) \
        / X.pair_dists(m.domain[trip[:, 0]], m.domain[trip[:, 2]])
    dout = Y.pair_dists(trip[:, 0], trip[:, 1]) \
        / Y.pair_dists(trip[:, 0], trip[:, 2])
    ok = np.isfinite(din) & np.isfinite(dout)
    return monotone_envelope(din[ok], dout[ok])


def relative_distance_transport(m, pairs):
    """Relative distances of continuum pairs before and after the map.

    Returns (table, lower envelope knots): table rows (delta_in, delta_out)
    and the greatest nondecreasing minorant of the scatter, asserted
    positive (separated sets stay separated under an injective map).
    """
    X = m.space
    Y = m.image_space()
    lookup = {int(z): i for i, z in enumerate(m.domain)}
    rows = []
    for E, F in pairs:
        E = E.ids if hasattr(E, "ids") else np.asarray(E, dtype=int)
        F = F.ids if hasattr(F, "ids") else np.asarray(F, dtype=int)
        try:
            Ei = np.array([lookup[int(z)] for z in E], dtype=int)
            Fi = np.array([lookup[int(z)] for z in F], dtype=int)
        except KeyError as k:
            raise ValueError(f"continuum point {k} outside map domain")
        rows.append((relative_distance(E, F, X),
                     relative_distance(Ei, Fi, Y)))
    table = np.array(rows, dtype=float).reshape(-1, 2)
    knots = lower_envelope(table[:, 0], table[:, 1])
    if len(knots[1]) and knots[1].min() <= 0.0:
        raise ValueError("transported relative distance collapsed to 0")
    return table, knots


# --------------------------------------------------------------------------
# two-scale modulus consistency
# --------------------------------------------------------------------------

@dataclass
class TwoScaleReport:
    values: np.ndarray = field(repr=False)   # (pairs, levels), nan = dropped
    ratios: List[float]
    c_hat: float
    dropped: List[tuple]
    q: float
    hop_threshold: int
    kept_pairs: List[int]


def two_scale_consistency(Z, ladder, pairs, q, hop_threshold=None, tol=1e-6,
                          star_depth=None):
    """Moduli of fixed continuum pairs across an approximation ladder.

    For each pair (E, F) and each level, solves the modulus between the
    covering vertex sets; the consistency constant is the worst ratio
    between consecutive-level values.  Pairs whose vertex sets come too
    close combinatorially (fewer than ``hop_threshold`` hops, default four
    times the verified K) or fit inside one ``star_depth``-star at some
    level are dropped and logged, not silently kept.

    Both gates mirror asymptotic hypotheses and are stricter than coarse
    ladders can meet: a K-star of a desk-scale level may swallow the whole
    space.  ``star_depth=0`` disables the star gate; small explicit
    ``hop_threshold`` values keep coarse levels usable.
    """
    levels = ladder.levels
    if hop_threshold is None:
        ks = [A.k_report for A in levels if A.k_report is not None]
        hop_threshold = 4 * (max(ks) if ks else
                             max(A.graph.max_valence for A in levels))
    vals = np.full((len(pairs), len(levels)), np.nan)
    dropped = []
    kept = []
    for i, (E, F) in enumerate(pairs):
        E = E.ids if hasattr(E, "ids") else np.asarray(E, dtype=int)
        F = F.ids if hasattr(F, "ids") else np.asarray(F, dtype=int)
        reason = None
        per_level = []
        for j, A in enumerate(levels):
            VE = vertex_set_of(E, A)
            VF = vertex_set_of(F, A)
            if len(VE) == 0 or len(VF) == 0:
                reason = (i, j, "empty vertex set")
                break
            hops = A.graph.hops_from(VE)
            sep = int(min(hops[v] for v in VF))
            if sep < hop_threshold:
                reason = (i, j, f"separation {sep} < {hop_threshold}")
                break
            depth = A.k_report if star_depth is None else star_depth
            if depth and (continuum_in_some_star(A, E, depth) or
                          continuum_in_some_star(A, F, depth)):
                reason = (i, j, "continuum inside a single star")
                break
            per_level.append((j, VE, VF))
        if reason is not None:
            dropped.append(reason)
            continue
        kept.append(i)
        for j, VE, VF in per_level:
            r = mod_q(levels[j].graph, VE, VF, q, tol=tol)
            vals[i, j] = r.value if np.isfinite(r.value) else np.nan
    ratios = []
    for i in kept:
        row = vals[i]
        for a, b in zip(row, row[1:]):
            if np.isfinite(a) and np.isfinite(b) and a > 0 and b > 0:
                ratios.append(float(max(a / b, b / a)))
    c_hat = max(ratios) if ratios else 1.0
    if not np.isfinite(c_hat):
        raise SeparationViolated("two-scale ratio diverged")
    return TwoScaleReport(vals, ratios, c_hat, dropped, q,
                          int(hop_threshold), kept)


# --------------------------------------------------------------------------
# annulus scan
# --------------------------------------------------------------------------

@dataclass
class BallTrace:
    center: int
    radius: float
    values: List[float]
    resolved: List[bool]
    flagged: bool
    last_over_first: float


@dataclass
class ScanReport:
    traces: List[BallTrace]
    c_hat: float
    lam: float
    q: float
    seed: int

    @property
    def flagged_fraction(self):
        if not self.traces:
            return 0.0
        return sum(t.flagged for t in self.traces) / len(self.traces)


def suff_condition_scan(Z, ladder, lam, ball_count=12, seed=0, q=2.0,
                        tol=1e-6, grow_margin=1.05, centers=None):
    """Annulus moduli of sampled balls across the ladder's levels.

    A ball's trace starts at the first level resolving it (inner and outer
    vertex sets disjoint); a trace still growing at the finest level (last
    value above ``grow_margin`` times the previous) is flagged -- bounded
    traces are the uniformizability signal, growth the failure signal.
    The scan constant is the largest final resolved value.  By default
    ball centers mix the extremes of the local scale (where a metric
    anomaly lives, it shows in r) with seeded draws; radii are
    log-uniform over the scales a ball can be scanned at: from twice the
    finest mesh up to the largest r keeping the lam-blowup a proper
    subset (r < diam/lam, with margin) -- the upper end is what lets
    coarse levels resolve the same annulus, so traces actually span
    several levels.  Callers probing a known location (say, the center of
    a patched region) can pass explicit ``centers``; those balls get the
    smallest radius whose annulus gap the second-finest level can still
    separate (a bit over its widest cover diameter over lam - 1), which
    guarantees the trace room to compare the two finest levels, and the
    remaining slots follow the default policy.
    """
    rng = np.random.default_rng(seed)
    finest = ladder.levels[-1]
    mesh_f = mesh_size(finest)
    lo = 2.0 * mesh_f
    hi = Z.diam / (1.2 * lam)
    if hi <= lo:
        hi = lo * 2.0
    if centers is None:
        pinned = 0
        centers = [int(finest.p[int(np.argmax(finest.r))]),
                   int(finest.p[int(np.argmin(finest.r))])]
    else:
        centers = [int(c) for c in centers][:ball_count]
        pinned = len(centers)
    while len(centers) < ball_count:
        centers.append(int(rng.integers(Z.n)))
    radii = np.exp(rng.uniform(np.log(lo), np.log(hi), size=ball_count))
    if pinned == 0:
        radii[0] = lo * 1.5  # pin a small ball at the scale extreme
    elif len(ladder.levels) >= 2 and lam > 1.0:
        second = ladder.levels[-2]
        span = 2.0 * max(
            float(Z.pair_dists(np.full(len(c), p), c).max()) if len(c) else 0.0
            for p, c in zip(second.p, second.cover))
        r1 = min(max(1.1 * span / (lam - 1.0), lo), 0.99 * hi)
        radii[:pinned] = r1

    traces = []
    c_hat = 0.0
    for a, r in zip(centers[:ball_count], radii):
        values, resolved = [], []
        d = Z.dist_row(a)
        inner_ids = np.flatnonzero(d < r)
        outer_ids = np.flatnonzero(d >= lam * r)
        for A in ladder.levels:
            if len(outer_ids) == 0:
                values.append(0.0)
                resolved.append(False)
                continue
            VB = vertex_set_of(inner_ids, A)
            VO = vertex_set_of(outer_ids, A)
            if len(VB) == 0 or len(VO) == 0 or len(np.intersect1d(VB, VO)):
                values.append(np.nan)
                resolved.append(False)
                continue
            res = mod_q(A.graph, VB, VO, q, tol=tol)
            values.append(res.value if np.isfinite(res.value) else np.nan)
            resolved.append(np.isfinite(res.value))
        good = [v for v, ok in zip(values, resolved) if ok]
        flagged = len(good) >= 2 and good[-1] > grow_margin * good[-2]
        lof = (good[-1] / good[0]) if len(good) >= 2 and good[0] > 0 else 1.0
        if good:
            c_hat = max(c_hat, good[-1])
        traces.append(BallTrace(a, float(r), values, resolved, flagged,
                                float(lof)))
    return ScanReport(traces, float(c_hat), float(lam), float(q), seed)
