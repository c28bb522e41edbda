"""Measure-theoretic diagnostics: density ratios, double-sphere proximity, bounds.

The area density mu(B_rho(x0))/(pi rho^2) is the discrete stand-in for the
two-dimensional density of the surface measure: about 1 near embedded points,
about 2 where two sheets nearly coincide. Faces crossing the ball boundary are
clipped exactly (circle-polygon intersection in the face plane).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import FitDiverged, RecursionHypothesisViolated
from .functionals import willmore_energy
from .mesh import TriMesh, total_area

DOUBLE_SPHERE_RADIUS = 1.0 / math.sqrt(8.0 * math.pi)  # 2 * 4 pi r^2 = 1


# -- exact circle-triangle clipping ---------------------------------------------


def _sector(a, b, r_sq):
    ang = math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])
    return 0.5 * r_sq * ang


def _cross2(a, b):
    return 0.5 * (a[0] * b[1] - a[1] * b[0])


def _edge_contribution(a, b, r):
    """Signed area contribution of directed edge a->b to polygon-disk overlap.

    Circle is centered at the origin. Summing over the edges of a simple
    polygon yields the signed intersection area.
    """
    r_sq = r * r
    a_in = a[0] * a[0] + a[1] * a[1] <= r_sq
    b_in = b[0] * b[0] + b[1] * b[1] <= r_sq
    if a_in and b_in:
        return _cross2(a, b)
    d = (b[0] - a[0], b[1] - a[1])
    qa = d[0] * d[0] + d[1] * d[1]
    if qa == 0.0:
        return 0.0
    qb = 2.0 * (a[0] * d[0] + a[1] * d[1])
    qc = a[0] * a[0] + a[1] * a[1] - r_sq
    disc = qb * qb - 4.0 * qa * qc
    if disc > 0.0:
        sq = math.sqrt(disc)
        t1 = (-qb - sq) / (2.0 * qa)
        t2 = (-qb + sq) / (2.0 * qa)
        p1 = (a[0] + t1 * d[0], a[1] + t1 * d[1])
        p2 = (a[0] + t2 * d[0], a[1] + t2 * d[1])
        if a_in:
            # leaves the disk at t2
            return _cross2(a, p2) + _sector(p2, b, r_sq)
        if b_in:
            # enters the disk at t1
            return _sector(a, p1, r_sq) + _cross2(p1, b)
        if 0.0 < t1 < t2 < 1.0:
            # crosses the disk: arc, chord, arc
            return _sector(a, p1, r_sq) + _cross2(p1, p2) + _sector(p2, b, r_sq)
    return _sector(a, b, r_sq)


def _triangle_disk_area(tri2d, r):
    area = 0.0
    for i in range(3):
        area += _edge_contribution(tri2d[i], tri2d[(i + 1) % 3], r)
    return abs(area)


def ball_area(mesh: TriMesh, x0, rho) -> float:
    """Surface area inside the ball B_rho(x0), with exact boundary clipping."""
    x0 = np.asarray(x0, dtype=float)
    v, f = mesh.vertices, mesh.faces
    dist = np.linalg.norm(v - x0, axis=1)
    fd = dist[f]
    fmin, fmax = fd.min(axis=1), fd.max(axis=1)
    areas = mesh.face_areas()

    inside = fmax <= rho
    total = float(np.sum(areas[inside]))

    # candidates: any face that might touch the sphere boundary
    edge_bound = np.sqrt(np.max(np.sum((v[f[:, [1, 2, 0]]] - v[f]) ** 2, axis=2), axis=1))
    candidates = np.nonzero(~inside & (fmin < rho + edge_bound))[0]
    for fi in candidates:
        p = v[f[fi]]
        n = np.cross(p[1] - p[0], p[2] - p[0])
        nn = np.linalg.norm(n)
        if nn < 1e-300:
            continue
        n = n / nn
        d_plane = float(np.dot(x0 - p[0], n))
        if abs(d_plane) >= rho:
            continue
        r_disk = math.sqrt(rho * rho - d_plane * d_plane)
        center = x0 - d_plane * n
        e1 = p[1] - p[0]
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        rel = p - center
        tri2d = np.stack([rel @ e1, rel @ e2], axis=1)
        total += _triangle_disk_area(tri2d, r_disk)
    return total


@dataclass
class DensityProfile:
    """Area ratios mu(B_rho(x0)) / (pi rho^2) over increasing radii."""

    center: np.ndarray
    radii: np.ndarray
    ratios: np.ndarray

    def csv_rows(self):
        return [f"{r:.12e},{q:.12e}" for r, q in zip(self.radii, self.ratios)]


def density_profile(mesh: TriMesh, x0, radii) -> DensityProfile:
    x0 = np.asarray(x0, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0.0) or np.any(radii <= 0.0):
        raise ValueError("radii must be positive and strictly increasing")
    ratios = np.array([ball_area(mesh, x0, r) / (math.pi * r * r) for r in radii])
    return DensityProfile(center=x0, radii=radii, ratios=ratios)


@dataclass
class LiYauReport:
    max_ratio: float
    bound: float
    willmore: float
    rho: float
    passed: bool
    worst_vertex: int


def li_yau_check(mesh: TriMesh, n_samples=50, rng_seed=0, slack=0.15) -> LiYauReport:
    """Sampled density ratios against the Li-Yau bound W/(4 pi) + slack.

    A violation indicates multiplicity (near-touching sheets beyond what the
    energy allows) or self-intersection.
    """
    rng = np.random.default_rng(rng_seed)
    n = mesh.n_vertices
    idx = rng.choice(n, size=min(n_samples, n), replace=False)
    w = willmore_energy(mesh)
    diam = mesh.bbox_diagonal()
    rho = min(3.0 * mesh.mean_edge_length(), 0.1 * diam)
    worst, worst_vertex = -np.inf, -1
    for i in idx:
        ratio = ball_area(mesh, mesh.vertices[i], rho) / (math.pi * rho * rho)
        if ratio > worst:
            worst, worst_vertex = ratio, int(i)
    bound = w / (4.0 * math.pi) + slack
    return LiYauReport(
        max_ratio=float(worst),
        bound=float(bound),
        willmore=w,
        rho=float(rho),
        passed=bool(worst <= bound),
        worst_vertex=worst_vertex,
    )


# -- sphere fitting --------------------------------------------------------------


@dataclass
class SphereFit:
    center: np.ndarray
    radius: float
    rms: float
    inlier_fraction: float


def sphere_fit(points, max_iter=100, tol=1e-12) -> SphereFit:
    """Gauss-Newton least-squares sphere fit from centroid/mean-radius init."""
    pts = np.asarray(points, dtype=float)
    a = pts.mean(axis=0)
    r = float(np.mean(np.linalg.norm(pts - a, axis=1)))
    if not np.isfinite(r) or r <= 0.0:
        raise FitDiverged("degenerate point cloud")
    for _ in range(max_iter):
        diff = pts - a
        dist = np.linalg.norm(diff, axis=1)
        dist = np.maximum(dist, 1e-300)
        res = dist - r
        # jacobian rows: [-(p - a)/|p - a|, -1]
        u = diff / dist[:, None]
        jtj = np.zeros((4, 4))
        jtj[:3, :3] = u.T @ u
        jtj[:3, 3] = u.sum(axis=0)
        jtj[3, :3] = jtj[:3, 3]
        jtj[3, 3] = len(pts)
        jtr = np.concatenate([u.T @ res, [res.sum()]])
        try:
            delta = np.linalg.solve(jtj, jtr)
        except np.linalg.LinAlgError as exc:
            raise FitDiverged("normal equations singular") from exc
        a = a + delta[:3]
        r = r + delta[3]
        if not np.isfinite(r) or r <= 0.0:
            raise FitDiverged("radius left the feasible range")
        if np.linalg.norm(delta) < tol * max(r, 1.0):
            break
    dist = np.linalg.norm(pts - a, axis=1)
    res = dist - r
    rms = float(np.sqrt(np.mean(res**2)))
    inliers = float(np.mean(np.abs(res) <= 0.1 * r))
    return SphereFit(center=a, radius=float(r), rms=rms, inlier_fraction=inliers)


@dataclass
class DoubleSphereReport:
    fit: SphereFit
    radius_target: float
    radius_rel_dev: float
    max_density_ratio: float


def double_sphere_fit(mesh: TriMesh, rng_seed=0) -> DoubleSphereReport:
    """Sphere fit to all vertices plus two-sheet diagnostics.

    Under the small-sigma normalization (total area 1) the double-sphere limit
    has radius (8 pi)^(-1/2); the relative deviation from that target is
    reported alongside the sampled density ratio.
    """
    fit = sphere_fit(mesh.vertices)
    target = DOUBLE_SPHERE_RADIUS * math.sqrt(total_area(mesh))
    li = li_yau_check(mesh, rng_seed=rng_seed)
    return DoubleSphereReport(
        fit=fit,
        radius_target=float(target),
        radius_rel_dev=float(abs(fit.radius - target) / target),
        max_density_ratio=li.max_ratio,
    )


@dataclass
class DiameterReport:
    diameter: float
    bound: float
    passed: bool


def mesh_diameter(mesh: TriMesh) -> float:
    """Exact diameter of the vertex set (via its convex hull)."""
    pts = mesh.vertices
    if len(pts) > 16:
        hull = ConvexHull(pts)
        pts = pts[hull.vertices]
    d2 = np.max(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2))
    return float(np.sqrt(d2))


def diameter_bound_check(mesh: TriMesh, slack=0.01) -> DiameterReport:
    """diam >= sqrt(A/W), up to the stated slack."""
    bound = math.sqrt(total_area(mesh) / willmore_energy(mesh))
    diam = mesh_diameter(mesh)
    return DiameterReport(diameter=diam, bound=bound, passed=bool(diam >= bound * (1.0 - slack)))


# -- decay recursion (second-fundamental-form power decay) ------------------------


def decay_exponent(gamma, alpha, c, b, g_samples):
    """Exponent and verification for g(x) <= gamma g(2x) + c x^alpha on (0, b).

    g_samples: array of (x, g(x)) rows; pairs (x, 2x) present in the samples
    are used to test the assumed inequality. Iterating the recursion down the
    dyadic scales produces beta = alpha when 2^alpha gamma < 1 and an exponent
    just below log2(1/gamma) otherwise, together with a constant depending
    only on b and sup|g|.

    Returns (beta, verified).
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must be in (0, 1)")
    if alpha <= 0.0 or c < 0.0 or b <= 0.0:
        raise ValueError("need alpha > 0, c >= 0, b > 0")
    samples = np.asarray(g_samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2 or len(samples) == 0:
        raise ValueError("g_samples must be (n, 2) rows of (x, g(x))")
    xs, gs = samples[:, 0], samples[:, 1]
    if np.any(xs <= 0.0) or np.any(xs >= b) or np.any(gs < 0.0):
        raise ValueError("samples must satisfy 0 < x < b, g >= 0")

    # hypothesis check on available (x, 2x) pairs
    order = np.argsort(xs)
    xs, gs = xs[order], gs[order]
    pairs = 0
    for i, x in enumerate(xs):
        j = np.nonzero(np.isclose(xs, 2.0 * x, rtol=1e-9, atol=0.0))[0]
        if len(j) and 2.0 * x < b:
            pairs += 1
            rhs = gamma * gs[j[0]] + c * x**alpha
            if gs[i] > rhs * (1.0 + 1e-12) + 1e-15:
                raise RecursionHypothesisViolated(
                    f"g({x:.6g}) = {gs[i]:.6g} > gamma g({2*x:.6g}) + c x^alpha = {rhs:.6g}"
                )
    if pairs == 0:
        raise ValueError("no (x, 2x) sample pairs available to test the hypothesis")

    growth = 2.0**alpha * gamma
    if growth < 1.0:
        beta = alpha
    else:
        beta = 0.98 * math.log2(1.0 / gamma)

    g_sup = float(np.max(gs))
    # C = sup over dyadic depths of the iterated bound divided by x^beta,
    # with a factor 2^beta absorbing positions between dyadic anchors
    best = 0.0
    for k in range(1, 64):
        x_k = b / 2.0**k
        geom = sum((growth) ** j for j in range(k))
        bound = gamma**k * g_sup + c * x_k**alpha * geom
        best = max(best, bound / x_k**beta)
    const = best * 2.0**beta
    verified = bool(np.all(gs <= const * xs**beta * (1.0 + 1e-9) + 1e-15))
    return beta, verified


# -- self-intersection diagnostic -------------------------------------------------


def _tri_tri_overlap(p, q):
    """Moeller-style triangle-triangle intersection test for one pair."""

    def plane_side(tri, pts):
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        return n, np.array([np.dot(n, x - tri[0]) for x in pts])

    n1, dq = plane_side(p, q)
    if np.all(dq > 1e-14) or np.all(dq < -1e-14):
        return False
    n2, dp = plane_side(q, p)
    if np.all(dp > 1e-14) or np.all(dp < -1e-14):
        return False
    d = np.cross(n1, n2)
    if np.linalg.norm(d) < 1e-20:
        return False  # coplanar pairs ignored (touching sheets, not crossings)

    def interval(tri, dist):
        proj = tri @ d
        pts = []
        for i in range(3):
            j = (i + 1) % 3
            if (dist[i] > 0) != (dist[j] > 0):
                t = dist[i] / (dist[i] - dist[j])
                pts.append(proj[i] + t * (proj[j] - proj[i]))
        if len(pts) < 2:
            return None
        return min(pts), max(pts)

    i1 = interval(p, dp)
    i2 = interval(q, dq)
    if i1 is None or i2 is None:
        return False
    return i1[0] < i2[1] - 1e-14 and i2[0] < i1[1] - 1e-14


def self_intersections(mesh: TriMesh, max_pairs=2_000_000):
    """Count intersecting non-adjacent face pairs (diagnostic, not a constraint)."""
    v, f = mesh.vertices, mesh.faces
    centroids = v[f].mean(axis=1)
    radii = np.max(np.linalg.norm(v[f] - centroids[:, None, :], axis=2), axis=1)
    tree = cKDTree(centroids)
    pairs = tree.query_pairs(2.0 * float(np.max(radii)), output_type="ndarray")
    if len(pairs) > max_pairs:
        raise MemoryError("too many candidate pairs for the diagnostic")
    if len(pairs) == 0:
        return 0
    # drop pairs sharing a vertex and pairs farther apart than their radii
    close = np.linalg.norm(centroids[pairs[:, 0]] - centroids[pairs[:, 1]], axis=1) <= (
        radii[pairs[:, 0]] + radii[pairs[:, 1]]
    )
    pairs = pairs[close]
    share = np.array(
        [len(set(f[i]) & set(f[j])) > 0 for i, j in pairs]
    )
    pairs = pairs[~share]
    count = 0
    for i, j in pairs:
        if _tri_tri_overlap(v[f[i]].astype(float), v[f[j]].astype(float)):
            count += 1
    return count
