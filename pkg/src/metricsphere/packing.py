"""Circle packings of sphere triangulations.

Given an oriented triangulation of the 2-sphere, produce a configuration
of spherical caps, one per vertex, with caps tangent exactly when the
vertices share an edge and interiors disjoint otherwise.

Route: remove one face, pack the remaining complex in the plane with the
three exposed vertices as unit boundary circles (a radius iteration drives
every interior angle sum to 2*pi, then a breadth-first layout places
centers), lift through the inverse stereographic projection, and fix the
Mobius freedom by balancing: move the configuration until the cap centers
average to zero, then align two marked caps.  Face removal keeps every
vertex and edge, so all tangencies of the full triangulation survive.

Caps are handled in inversive coordinates in Lorentz space R^{3,1}: a cap
with unit center m and angular radius theta is v = (m, cos theta)/sin theta
with <v, v> = 1; points are null rays (x, 1).  Tangency is <v, w> = -1,
orthogonality <v, w> = 0, and every Mobius transformation of the sphere is
a Lorentz matrix acting linearly on these coordinates.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateTriple,
    IterationDiverged,
    NonConvergence,
    NotATriangulation,
)
from .spaces import validate_sphere_triangulation, edges_from_triangles


_LORENTZ_SIGNS = np.array([1.0, 1.0, 1.0, -1.0])


def lorentz_dot(u, v):
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] \
        + u[..., 2] * v[..., 2] - u[..., 3] * v[..., 3]


def caps_to_inversive(centers, radii):
    s = np.sin(radii)
    return np.concatenate([centers / s[:, None],
                           (np.cos(radii) / s)[:, None]], axis=1)


def inversive_to_caps(V):
    a = V[:, :3]
    norm = np.linalg.norm(a, axis=1)
    centers = a / norm[:, None]
    radii = np.arccos(np.clip(V[:, 3] / norm, -1.0, 1.0))
    return centers, radii


def apply_lorentz_to_points(L, pts):
    hom = np.concatenate([pts, np.ones((len(pts), 1))], axis=1) @ L.T
    return hom[:, :3] / hom[:, 3:4]


@dataclass
class SphericalPacking:
    """Tangent spherical caps realizing a triangulation's edge graph."""

    centers: np.ndarray
    radii: np.ndarray
    triangles: np.ndarray = field(repr=False)
    tangency_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.radii)

    def inversive(self):
        return caps_to_inversive(self.centers, self.radii)

    def tangency_point(self, u, v):
        """Point where caps u and v touch (caps assumed tangent)."""
        mu, mv = self.centers[u], self.centers[v]
        w = mv - (mu @ mv) * mu
        nw = np.linalg.norm(w)
        if nw < 1e-15:
            raise DegenerateTriple(f"caps {u},{v} concentric")
        w = w / nw
        t = float(self.radii[u])
        return np.cos(t) * mu + np.sin(t) * w

    def transformed(self, L):
        V = self.inversive() @ L.T
        centers, radii = inversive_to_caps(V)
        P = SphericalPacking(centers, radii, self.triangles,
                             self.tangency_residual, dict(self.meta))
        return P


def check_packing(P, tol=1e-7):
    """Worst tangency error on edges and worst overlap off edges.

    Returns (tangency_err, overlap), both as angular defects: for an edge
    (u,v), | d(m_u,m_v) - (r_u + r_v) |; for a non-edge, the positive part
    of (r_u + r_v) - d(m_u, m_v).
    """
    E = edges_from_triangles(P.triangles)
    ang_e = np.arccos(np.clip(
        np.sum(P.centers[E[:, 0]] * P.centers[E[:, 1]], axis=1), -1.0, 1.0))
    tang = float(np.abs(ang_e - (P.radii[E[:, 0]] + P.radii[E[:, 1]])).max())
    nbr = [set() for _ in range(P.n)]
    for a, b in E:
        nbr[int(a)].add(int(b))
        nbr[int(b)].add(int(a))
    overlap = 0.0
    step = max(1, 2 ** 22 // max(P.n, 1))
    for lo in range(0, P.n, step):
        hi = min(lo + step, P.n)
        ang = np.arccos(np.clip(P.centers[lo:hi] @ P.centers.T, -1.0, 1.0))
        gap = (P.radii[lo:hi, None] + P.radii[None, :]) - ang
        for i in range(lo, hi):
            gap[i - lo, i] = -np.inf
            cols = list(nbr[i])
            if cols:
                gap[i - lo, cols] = -np.inf
        m = gap.max()
        if m > overlap:
            overlap = float(m)
    return tang, max(overlap, 0.0)


# --------------------------------------------------------------------------
# the Euclidean boundary-value packing
# --------------------------------------------------------------------------

def _pick_removed_face(tris, n):
    """Deterministic face to expose: max total valence, then lexicographic."""
    val = np.zeros(n, dtype=int)
    for t in tris:
        val[t] += 1
    scores = val[tris].sum(axis=1)
    best = np.flatnonzero(scores == scores.max())
    keys = [tuple(sorted(int(x) for x in tris[i])) for i in best]
    return int(best[min(range(len(keys)), key=keys.__getitem__)])


def _radii_bvp(tris_kept, n, boundary, tol, max_sweeps):
    """Radii making every interior angle sum 2*pi, boundary pinned at 1.

    Uniform-neighbor update: pretend all petals of v share one radius
    reproducing the current angle sum, then solve that model for the
    radius giving angle sum 2*pi.  Jacobi sweeps over all interior
    vertices at once.
    """
    fv = tris_kept.reshape(-1)
    fu = tris_kept[:, [1, 2, 0]].reshape(-1)
    ft = tris_kept[:, [2, 0, 1]].reshape(-1)
    k = np.bincount(fv, minlength=n).astype(float)
    interior = np.ones(n, dtype=bool)
    interior[boundary] = False
    if np.any(k[interior] < 3):
        raise NotATriangulation("interior vertex with fewer than 3 faces")
    rho = np.ones(n)
    delta = np.sin(np.pi / np.maximum(k, 1.0))
    trace = []
    for sweep in range(max_sweeps):
        a = rho[fu] / (rho[fv] + rho[fu])
        b = rho[ft] / (rho[fv] + rho[ft])
        ang = 2.0 * np.arcsin(np.sqrt(a * b))
        theta = np.bincount(fv, weights=ang, minlength=n)
        err = np.abs(theta[interior] - 2.0 * np.pi).max()
        if sweep < 32 or sweep % 64 == 0:
            trace.append(err)
        if err < tol:
            return rho, sweep + 1
        beta = np.sin(theta / (2.0 * np.maximum(k, 1.0)))
        rhat = rho * beta / (1.0 - beta)
        new = rhat * (1.0 - delta) / delta
        rho = np.where(interior, new, rho)
    raise IterationDiverged(
        f"angle-sum residual {trace[-1]:.3e} after {max_sweeps} sweeps")


def _layout(tris_kept, rho, n):
    """Plane positions by breadth-first propagation over kept faces."""
    pos = np.full((n, 2), np.nan)
    placed = np.zeros(n, dtype=bool)

    edge_faces = {}
    for i, t in enumerate(tris_kept):
        for e in range(3):
            a, b = int(t[e]), int(t[(e + 1) % 3])
            key = (a, b) if a < b else (b, a)
            edge_faces.setdefault(key, []).append(i)

    f0 = 0
    a, b, c = (int(x) for x in tris_kept[f0])
    pos[a] = (0.0, 0.0)
    pos[b] = (rho[a] + rho[b], 0.0)
    placed[a] = placed[b] = True
    _place_third(pos, rho, a, b, c)
    placed[c] = True

    from collections import deque
    done = np.zeros(len(tris_kept), dtype=bool)
    done[f0] = True
    dq = deque([f0])
    while dq:
        f = dq.popleft()
        t = tris_kept[f]
        for e in range(3):
            aa, bb = int(t[e]), int(t[(e + 1) % 3])
            key = (aa, bb) if aa < bb else (bb, aa)
            for g in edge_faces[key]:
                if done[g]:
                    continue
                u, v, w = (int(x) for x in tris_kept[g])
                for _ in range(3):
                    if placed[u] and placed[v]:
                        break
                    u, v, w = v, w, u
                if not (placed[u] and placed[v]):
                    continue
                if not placed[w]:
                    _place_third(pos, rho, u, v, w)
                    placed[w] = True
                done[g] = True
                dq.append(g)
    if not placed.all():
        raise NotATriangulation("layout did not reach every vertex")
    return pos


def _place_third(pos, rho, a, b, c):
    """Intersect tangency circles around a and b; c goes on the left of a->b."""
    ab = pos[b] - pos[a]
    d = np.linalg.norm(ab)
    ra, rb = rho[a] + rho[c], rho[b] + rho[c]
    x = (d * d + ra * ra - rb * rb) / (2.0 * d)
    y = np.sqrt(max(ra * ra - x * x, 0.0))
    ex = ab / d
    ey = np.array([-ex[1], ex[0]])
    pos[c] = pos[a] + x * ex + y * ey


def _lift_circle(center, radius):
    """Spherical cap that the inverse stereographic image of a disk fills."""
    ts = np.array([0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0])
    ring = center[None, :] + radius * np.stack([np.cos(ts), np.sin(ts)], axis=1)
    sq = (ring ** 2).sum(axis=1)
    lifted = np.concatenate([2.0 * ring, (sq - 1.0)[:, None]], axis=1) \
        / (1.0 + sq)[:, None]
    nrm = np.cross(lifted[1] - lifted[0], lifted[2] - lifted[0])
    nn = np.linalg.norm(nrm)
    if nn < 1e-300:
        raise DegenerateTriple("degenerate circle lift")
    nrm = nrm / nn
    h = float(nrm @ lifted[0])
    csq = (center ** 2).sum()
    inside = np.array([2.0 * center[0], 2.0 * center[1], csq - 1.0]) / (1.0 + csq)
    if nrm @ inside < h:
        nrm, h = -nrm, -h
    return nrm, float(np.arccos(np.clip(h, -1.0, 1.0)))


def _boost(bvec):
    """Lorentz boost with rapidity |bvec| along bvec (identity at 0)."""
    L = np.eye(4)
    phi = np.linalg.norm(bvec)
    if phi < 1e-300:
        return L
    u = bvec / phi
    ch, sh = np.cosh(phi), np.sinh(phi)
    L[:3, :3] += (ch - 1.0) * np.outer(u, u)
    L[:3, 3] = sh * u
    L[3, :3] = sh * u
    L[3, 3] = ch
    return L


def _unit_center_sum(V):
    a = V[:, :3]
    return (a / np.linalg.norm(a, axis=1)[:, None]).sum(axis=0)


def balance_caps(centers, radii, tol=1e-10, max_iter=4000):
    """Mobius-move a cap family until its unit centers average to zero.

    The zero is the conformal barycenter of the center directions: the
    unique interior minimum of a proper convex energy whenever no single
    direction carries half the mass, so it canonically represents the
    Mobius class up to rotation.  A single global boost parameter is
    numerically treacherous -- the same field also vanishes in the limit
    of infinite boosts when the caps split evenly between the two fixed
    directions -- so instead small boosts along the descent direction are
    composed, each validated by a residual decrease, which keeps every
    intermediate configuration well scaled.
    """
    V = caps_to_inversive(np.asarray(centers, float), np.asarray(radii, float))
    n = len(V)
    L = np.eye(4)
    F = _unit_center_sum(V)
    res = np.linalg.norm(F)
    for _ in range(max_iter):
        if res <= tol * n:
            return L
        d = -F / res
        kappa = min(0.25, res / n)
        for _ in range(60):
            B = _boost(kappa * d)
            Vn = V @ B.T
            Fn = _unit_center_sum(Vn)
            rn = np.linalg.norm(Fn)
            if rn < res:
                V, F, res, L = Vn, Fn, rn, B @ L
                break
            kappa *= 0.5
        else:
            raise NonConvergence("balancing step stalled")
    raise NonConvergence(
        f"balance residual {res:.3e} after {max_iter} boosts")


def _rotation_to(v, target):
    """Rotation matrix taking unit v to unit target."""
    v = v / np.linalg.norm(v)
    t = target / np.linalg.norm(target)
    c = float(v @ t)
    if c > 1.0 - 1e-14:
        return np.eye(3)
    if c < -1.0 + 1e-14:
        # pick any axis orthogonal to v
        axis = np.cross(v, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-8:
            axis = np.cross(v, [0.0, 1.0, 0.0])
        axis = axis / np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    axis = np.cross(v, t)
    s = np.linalg.norm(axis)
    axis = axis / s
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def _embed_rotation(R):
    L = np.eye(4)
    L[:3, :3] = R
    return L


def pack_triangulation(triangles, tol=1e-10, max_sweeps=200000,
                       removed_face=None):
    """Circle-pack an oriented sphere triangulation, balanced and aligned.

    Output caps are tangent along every edge (residual recorded), have
    disjoint interiors otherwise, centers averaging to zero, cap 0 at the
    north pole and cap 1 in the x > 0 meridian half-plane.  The face
    exposed during the planar stage defaults to a deterministic choice
    (max valence sum); any face index may be forced, and the balanced
    output is independent of that choice up to the numerical tolerance.
    """
    tris = np.asarray(triangles, dtype=int)
    n = int(tris.max()) + 1
    if n < 4:
        raise NotATriangulation("a sphere triangulation needs >= 4 vertices")
    validate_sphere_triangulation(tris, n)
    removed = _pick_removed_face(tris, n) if removed_face is None \
        else int(removed_face)
    if not 0 <= removed < len(tris):
        raise NotATriangulation(f"no face index {removed}")
    kept = np.delete(tris, removed, axis=0)
    boundary = tris[removed]
    rho, sweeps = _radii_bvp(kept, n, boundary, tol, max_sweeps)
    pos = _layout(kept, rho, n)

    # shrink into the unit disk neighborhood to keep the lift well scaled
    span = np.abs(pos).max() + rho.max()
    pos = pos / span
    rho = rho / span
    centers = np.empty((n, 3))
    radii = np.empty(n)
    for v in range(n):
        centers[v], radii[v] = _lift_circle(pos[v], rho[v])

    L = balance_caps(centers, radii)
    V = caps_to_inversive(centers, radii) @ L.T
    centers, radii = inversive_to_caps(V)

    R1 = _rotation_to(centers[0], np.array([0.0, 0.0, 1.0]))
    centers = centers @ R1.T
    c1 = centers[1]
    az = np.arctan2(c1[1], c1[0])
    ca, sa = np.cos(-az), np.sin(-az)
    R2 = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    centers = centers @ R2.T
    norms = np.linalg.norm(centers, axis=1)
    centers = centers / norms[:, None]

    P = SphericalPacking(centers, radii, tris,
                         meta={"removed_face": int(removed),
                               "sweeps": int(sweeps),
                               "boundary": [int(x) for x in boundary]})
    tang, overlap = check_packing(P)
    P.tangency_residual = tang
    P.meta["overlap"] = overlap
    if tang > 1e-5:
        raise IterationDiverged(f"lifted tangency residual {tang:.3e}")
    return P


# --------------------------------------------------------------------------
# Mobius normalization at a marked triple
# --------------------------------------------------------------------------

def _null_point(x):
    return np.array([x[0], x[1], x[2], 1.0])


def _gaps(W):
    a = np.arctan2(W[:, 1], W[:, 0])
    g1 = np.mod(a[1] - a[0], 2.0 * np.pi)
    g2 = np.mod(a[2] - a[1], 2.0 * np.pi)
    return np.array([g1 - 2.0 * np.pi / 3.0, g2 - 2.0 * np.pi / 3.0])


def _equalize_spacing(sub, tol=1e-11, max_iter=80):
    """Equatorial boost putting three equator-centered caps at equal spacing.

    The caps are orthogonal to the equator (centers on it); boosts along
    in-plane directions act as disk automorphisms.  Damped Newton on the
    two azimuth-gap defects.
    """
    def centers(b):
        W = sub @ _boost(np.array([b[0], b[1], 0.0])).T
        a = W[:, :3]
        return a / np.linalg.norm(a, axis=1)[:, None]

    b = np.zeros(2)
    F = _gaps(centers(b))
    for _ in range(max_iter):
        if np.abs(F).max() <= tol:
            return _boost(np.array([b[0], b[1], 0.0]))
        J = np.empty((2, 2))
        h = 1e-6
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (_gaps(centers(b + e)) - _gaps(centers(b - e))) / (2 * h)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise DegenerateTriple("spacing Jacobian singular")
        lam = 1.0
        for _ in range(40):
            Fn = _gaps(centers(b + lam * step))
            if np.abs(Fn).max() < np.abs(F).max():
                b = b + lam * step
                F = Fn
                break
            lam *= 0.5
        else:
            raise NonConvergence("spacing line search stalled")
    raise NonConvergence(f"spacing defect {np.abs(F).max():.3e} at cap")


def mobius_normalize(P, v1, v2, v3, tol=1e-9):
    """Send three mutually tangent caps to the symmetric equatorial triple.

    The caps of v1, v2, v3 (which must be pairwise tangent, i.e. the
    vertices pairwise adjacent) go to the three equal caps of angular
    radius pi/3 centered on the equator, with the cap of v1 centered at
    azimuth 0 and that of v2 at azimuth +2*pi/3.  Returns the transformed
    packing and the 4x4 Lorentz matrix used.
    """
    trip = [int(v1), int(v2), int(v3)]
    if len(set(trip)) < 3:
        raise DegenerateTriple("marked vertices must be distinct")
    V = P.inversive()
    sub = V[trip]
    prods = [lorentz_dot(sub[i], sub[j])
             for i, j in ((0, 1), (0, 2), (1, 2))]
    if max(prods) > -1.0 + 1e-6:
        raise DegenerateTriple("marked caps overlap")
    tangent = all(abs(p + 1.0) <= 1e-6 for p in prods)

    # the circle orthogonal to all three caps (through the tangency points)
    G = sub * _LORENTZ_SIGNS[None, :]
    _, s, vh = np.linalg.svd(G)
    u = vh[-1]
    uu = lorentz_dot(u, u)
    if uu <= tol:
        raise DegenerateTriple("no real common orthogonal circle")
    u = u / np.sqrt(uu)
    e = np.array([0.0, 0.0, 1.0, 0.0])
    if lorentz_dot(u, e) > 0:
        u = -u
    s_vec = u - e
    ss = lorentz_dot(s_vec, s_vec)  # = 2 - 2<u,e> >= 2
    if ss < 1e-12:
        L1 = np.eye(4)
    else:
        L1 = np.eye(4) - 2.0 * np.outer(s_vec, s_vec * _LORENTZ_SIGNS) / ss

    if tangent:
        # tangency points, opposite-cap convention, now on the equator
        tp = [P.tangency_point(trip[1], trip[2]),
              P.tangency_point(trip[0], trip[2]),
              P.tangency_point(trip[0], trip[1])]
        tph = np.stack([_null_point(x) for x in tp]) @ L1.T
        tph = tph / tph[:, 3:4]

        # scale the null vectors to pairwise Lorentz product -1, same for
        # the target points, and match the frames inside the z = 0 slice
        g12 = lorentz_dot(tph[0], tph[1])
        g13 = lorentz_dot(tph[0], tph[2])
        g23 = lorentz_dot(tph[1], tph[2])
        if max(g12, g13, g23) > -1e-14:
            raise DegenerateTriple("tangency points collapsed")
        al = np.array([np.sqrt(-g23 / (g12 * g13)),
                       np.sqrt(-g13 / (g12 * g23)),
                       np.sqrt(-g12 / (g13 * g23))])
        N = (tph * al[:, None])[:, [0, 1, 3]]
        psis = np.array([0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0])
        M = np.stack([np.cos(psis), np.sin(psis), np.ones(3)], axis=1) \
            * np.sqrt(2.0 / 3.0)
        # frame matching: A3 N_i = M_i; equal Grams make A3 a Lorentz map
        # of the z = 0 slice
        A3 = np.linalg.solve(N, M).T
        L2 = np.eye(4)
        L2[np.ix_([0, 1, 3], [0, 1, 3])] = A3
        L = L2 @ L1
    else:
        # disjoint caps: slide along the equator (boosts fixing it) until
        # the three centers are equally spaced
        L = _equalize_spacing(sub @ L1.T) @ L1

    W = V @ L.T
    centers, radii = inversive_to_caps(W)
    az1 = np.arctan2(centers[trip[0], 1], centers[trip[0], 0])
    ca, sa = np.cos(-az1), np.sin(-az1)
    Rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    L = _embed_rotation(Rz) @ L
    W = V @ L.T
    centers, radii = inversive_to_caps(W)
    az2 = np.arctan2(centers[trip[1], 1], centers[trip[1], 0])
    if np.sin(az2) < 0.0:
        L = _embed_rotation(np.diag([1.0, -1.0, 1.0])) @ L
        W = V @ L.T
        centers, radii = inversive_to_caps(W)
    # hemisphere convention: first clearly off-equator cap goes north
    for m in centers:
        if abs(m[2]) > 1e-6:
            if m[2] < 0:
                L = np.diag([1.0, 1.0, -1.0, 1.0]) @ L
                W = V @ L.T
                centers, radii = inversive_to_caps(W)
            break
    Q = SphericalPacking(centers, radii, P.triangles,
                         P.tangency_residual, dict(P.meta))
    Q.meta["normalized_at"] = trip
    return Q, L


# --------------------------------------------------------------------------
# the approximation a packing induces
# --------------------------------------------------------------------------

def induced_approximation(P, sample, cover_margin=1e-12, verify=False, max_k=32):
    """Approximation data read off a packing over a sphere sample.

    Vertices are the packing's caps; the graph is the triangulation
    skeleton; p(v) is the sample point nearest the cap center, r(v) the
    angular radius, and the cover of v collects the sample points lying in
    the open star of v in the geodesic triangulation drawn by the centers,
    together with the cap ball itself.
    """
    from scipy.spatial import cKDTree
    from .approx import ApproxGraph, KApproximation, verify_k_approximation
    from .spaces import adjacency_from_triangles

    Z = sample.space("angular") if hasattr(sample, "space") else sample
    pts = Z.coords
    n = P.n
    tree = cKDTree(P.centers)
    _, nearest_cap = tree.query(pts)
    tree2 = cKDTree(pts)
    _, p = tree2.query(P.centers)

    member = [set() for _ in range(n)]
    for (a, b, c) in P.triangles:
        na = np.cross(P.centers[a], P.centers[b])
        nb = np.cross(P.centers[b], P.centers[c])
        nc = np.cross(P.centers[c], P.centers[a])
        inside = (pts @ na >= -cover_margin) & (pts @ nb >= -cover_margin) \
            & (pts @ nc >= -cover_margin)
        ids = np.flatnonzero(inside)
        for v in (a, b, c):
            member[int(v)].update(int(z) for z in ids)
    for v in range(n):
        ball = Z.near(int(p[v]), float(P.radii[v]))
        member[v].update(int(z) for z in ball)

    adj = adjacency_from_triangles(P.triangles, n)
    G = ApproxGraph(adj, triangles=P.triangles)
    A = KApproximation(G, Z, np.asarray(p, int), P.radii.copy(),
                       [np.array(sorted(m), dtype=int) for m in member],
                       meta={"builder": "packing"})
    if verify:
        rep = verify_k_approximation(A, max_k=max_k)
        A.k_report = rep.k_report
        A.meta["bounds"] = rep.bounds
        A.meta["violations"] = rep.violations
    return A


def ring_lemma_check(P):
    """Worst adjacent radius ratio, overall and keyed by valence.

    In a packing the petals of a degree-k vertex cannot be arbitrarily
    small relative to it, with a bound depending only on k; returns
    (max_ratio, {valence: max over edges at degree-k vertices of
    r(v)/r(u)}) for checking finiteness and growth in k.
    """
    E = edges_from_triangles(P.triangles)
    deg = np.zeros(P.n, dtype=int)
    for a, b in E:
        deg[a] += 1
        deg[b] += 1
    table = {}
    worst = 0.0
    for a, b in E:
        for v, u in ((int(a), int(b)), (int(b), int(a))):
            ratio = float(P.radii[v] / P.radii[u])
            worst = max(worst, ratio)
            k = int(deg[v])
            if ratio > table.get(k, 0.0):
                table[k] = ratio
    return worst, table
