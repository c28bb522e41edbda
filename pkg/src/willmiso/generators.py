"""Analytic seed surfaces and mesh-free quadrature of the inverted catenoid family.

The catenoid g_a(s, theta) = (a cosh(s/a) cos theta, a cosh(s/a) sin theta, s)
is inverted at the unit sphere about e3 = (0, 0, 1); the compactified image is
a sphere-type surface whose Willmore energy is 8*pi for every neck parameter a
and whose isoperimetric ratio tends to 0 as a -> 0. Everything here is pure
and safe to evaluate in parallel across parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BisectionFailed, MeshValidationError, PoleInput, QuadratureNotConverged
from .functionals import SurfaceMetrics, iso_ratio, iso_ratio_from
from .mesh import TriMesh, enclosed_volume, validate

E3 = np.array([0.0, 0.0, 1.0])


def invert_at_unit_sphere(p):
    """Moebius inversion x -> e3 + (x - e3)/|x - e3|^2, unit sphere about e3."""
    p = np.asarray(p, dtype=float)
    y = p - E3
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    if np.any(r2 < 1e-28):
        raise PoleInput("input coincides with the inversion pole e3")
    return E3 + y / r2


# -- inverted catenoid ---------------------------------------------------------


@dataclass
class CatenoidParams:
    """Neck parameter, truncation and grid resolution for the catenoid family."""

    a: float
    s_max: float
    n_s: int = 256
    n_theta: int = 128

    def __post_init__(self):
        if self.a <= 0:
            raise MeshValidationError("neck parameter a must be positive")
        if self.s_max < 8.0 * self.a:
            raise MeshValidationError("s_max must be at least 8a (flat-cap truncation)")
        if self.n_s < 16 or self.n_theta < 16:
            raise MeshValidationError("grid resolution must be at least 16")


def _catenoid_jets(a, s, theta):
    """Position and first/second parameter derivatives of g_a on a grid.

    s and theta are broadcast against each other; returns arrays with a
    trailing xyz axis.
    """
    s, theta = np.broadcast_arrays(s, theta)
    ch, sh = np.cosh(s / a), np.sinh(s / a)
    ct, st = np.cos(theta), np.sin(theta)
    zeros = np.zeros_like(ch)
    pos = np.stack([a * ch * ct, a * ch * st, s], axis=-1)
    d_s = np.stack([sh * ct, sh * st, np.ones_like(ch)], axis=-1)
    d_t = np.stack([-a * ch * st, a * ch * ct, zeros], axis=-1)
    d_ss = np.stack([ch / a * ct, ch / a * st, zeros], axis=-1)
    d_st = np.stack([-sh * st, sh * ct, zeros], axis=-1)
    d_tt = np.stack([-a * ch * ct, -a * ch * st, zeros], axis=-1)
    return pos, d_s, d_t, d_ss, d_st, d_tt


def _push_through_inversion(pos, d_s, d_t, d_ss, d_st, d_tt):
    """Chain rule of the inversion map applied to a parametrized surface jet."""
    y = pos - E3
    r2 = np.sum(y * y, axis=-1, keepdims=True)

    def jac_apply(v):
        # DI v = v/r2 - 2 <y,v> y / r2^2
        dot = np.sum(y * v, axis=-1, keepdims=True)
        return v / r2 - 2.0 * dot * y / r2**2

    def hess_apply(u, v):
        # D2I[u, v] = -2(<u,v> y + <y,v> u + <y,u> v)/r2^2 + 8 <y,u><y,v> y / r2^3
        uv = np.sum(u * v, axis=-1, keepdims=True)
        yu = np.sum(y * u, axis=-1, keepdims=True)
        yv = np.sum(y * v, axis=-1, keepdims=True)
        return (-2.0 * (uv * y + yv * u + yu * v) + 8.0 * yu * yv * y / r2) / r2**2

    f = E3 + y / r2
    f_s = jac_apply(d_s)
    f_t = jac_apply(d_t)
    f_ss = hess_apply(d_s, d_s) + jac_apply(d_ss)
    f_st = hess_apply(d_s, d_t) + jac_apply(d_st)
    f_tt = hess_apply(d_t, d_t) + jac_apply(d_tt)
    return f, f_s, f_t, f_ss, f_st, f_tt


def _surface_integrals(jets):
    """Pointwise area density, H^2 density, K density and volume flux density."""
    f, f_s, f_t, f_ss, f_st, f_tt = jets
    E = np.sum(f_s * f_s, axis=-1)
    F = np.sum(f_s * f_t, axis=-1)
    G = np.sum(f_t * f_t, axis=-1)
    cross = np.cross(f_s, f_t)
    dA = np.linalg.norm(cross, axis=-1)
    n = cross / dA[..., None]
    e = np.sum(f_ss * n, axis=-1)
    ff = np.sum(f_st * n, axis=-1)
    g = np.sum(f_tt * n, axis=-1)
    det = E * G - F * F
    h_mean = (e * G - 2.0 * ff * F + g * E) / (2.0 * det)
    k_gauss = (e * g - ff * ff) / det
    flux = np.sum(f * n, axis=-1)
    return dA, h_mean, k_gauss, flux


def _catenoid_quadrature_once(params: CatenoidParams, n_s, n_theta, inverted):
    nodes, weights = np.polynomial.legendre.leggauss(n_s)
    s = params.s_max * nodes[:, None]
    w_s = params.s_max * weights[:, None]
    theta = (2.0 * np.pi / n_theta) * np.arange(n_theta)[None, :]
    w_t = 2.0 * np.pi / n_theta

    jets = _catenoid_jets(params.a, s, theta)
    if inverted:
        jets = _push_through_inversion(*jets)
    dA, h_mean, k_gauss, flux = _surface_integrals(jets)
    w = w_s * w_t
    area = float(np.sum(dA * w))
    willmore = float(np.sum(h_mean**2 * dA * w))
    total_gauss = float(np.sum(k_gauss * dA * w))
    volume = abs(float(np.sum(flux * dA * w))) / 3.0
    return area, volume, willmore, total_gauss


def catenoid_metrics_quadrature(params: CatenoidParams, rtol=2e-4, inverted=True) -> SurfaceMetrics:
    """A, V, I, W of the (inverted) catenoid by mesh-free quadrature.

    Gauss-Legendre in s, trapezoid in theta (spectral in the periodic
    direction). A half-resolution evaluation provides the Richardson-style
    convergence estimate; the fine values are returned.
    """
    coarse = _catenoid_quadrature_once(params, params.n_s // 2, params.n_theta // 2, inverted)
    fine = _catenoid_quadrature_once(params, params.n_s, params.n_theta, inverted)
    area, volume, willmore, total_gauss = fine
    for name, c, f in zip(("area", "volume", "willmore"), coarse, fine):
        scale = max(abs(f), 1e-12)
        if abs(f - c) > rtol * scale:
            raise QuadratureNotConverged(
                f"{name} changed by {abs(f - c) / scale:.2e} rel between grid levels"
            )
    return SurfaceMetrics(
        area=area,
        volume=volume,
        iso_ratio=iso_ratio_from(area, volume),
        willmore=willmore,
        total_sff=4.0 * willmore - 2.0 * total_gauss,
        total_gauss=total_gauss,
    )


def catenoid_minimality_residual(params: CatenoidParams) -> float:
    """Quadrature of H^2 over the uninverted truncated catenoid (analytically 0)."""
    _, _, willmore, _ = _catenoid_quadrature_once(params, params.n_s, params.n_theta, False)
    return willmore


# -- surfaces of revolution ----------------------------------------------------


def revolve_profile(profile, n_theta) -> TriMesh:
    """Closed surface of revolution about the z axis.

    profile: (P, 2) array of (rho, z); first and last rows must lie on the
    axis (rho == 0), all interior rows must have rho > 0.

    Consecutive rings are offset by half an azimuthal step (brick pattern),
    which yields isoceles near-acute triangles instead of the exactly-right
    triangles a plain diagonal quad split produces. Right triangles sit on
    the obtuse/acute branch point of the mixed Voronoi area where the
    discrete energies lose smoothness.
    """
    profile = np.asarray(profile, dtype=float)
    if profile[0, 0] != 0.0 or profile[-1, 0] != 0.0:
        raise MeshValidationError("profile must start and end on the axis")
    interior = profile[1:-1]
    if np.any(interior[:, 0] <= 0.0):
        raise MeshValidationError("interior profile points must have rho > 0")
    n_rings = len(interior)
    if n_rings < 2 or n_theta < 3:
        raise MeshValidationError("profile too short or n_theta too small")

    step = 2.0 * np.pi / n_theta
    base = step * np.arange(n_theta)
    rings = np.empty((n_rings, n_theta, 3))
    for i in range(n_rings):
        theta = base + 0.5 * step * (i % 2)
        rings[i, :, 0] = interior[i, 0] * np.cos(theta)
        rings[i, :, 1] = interior[i, 0] * np.sin(theta)
        rings[i, :, 2] = interior[i, 1]

    verts = np.vstack([[0.0, 0.0, profile[0, 1]], rings.reshape(-1, 3), [0.0, 0.0, profile[-1, 1]]])
    j = np.arange(n_theta)
    jn = (j + 1) % n_theta
    first = 1 + j
    last = 1 + (n_rings - 1) * n_theta + j

    faces = [np.stack([np.zeros(n_theta, dtype=np.int64), first[jn], first[j]], axis=1)]
    for i in range(n_rings - 1):
        a = 1 + i * n_theta  # lower ring start
        b = a + n_theta      # upper ring start
        if i % 2 == 0:
            # upper ring shifted by +half step: up_j sits between lo_j, lo_{j+1}
            faces.append(np.stack([a + j, a + jn, b + j], axis=1))
            faces.append(np.stack([a + jn, b + jn, b + j], axis=1))
        else:
            # lower ring shifted by +half step: lo_j sits between up_j, up_{j+1}
            faces.append(np.stack([a + j, b + jn, b + j], axis=1))
            faces.append(np.stack([a + j, a + jn, b + jn], axis=1))
    apex = len(verts) - 1
    faces.append(np.stack([np.full(n_theta, apex, dtype=np.int64), last[j], last[jn]], axis=1))

    mesh = TriMesh(verts, np.concatenate(faces))
    if enclosed_volume(mesh) < 0.0:
        mesh = TriMesh(verts, np.concatenate(faces)[:, ::-1])
    return mesh


def inverted_catenoid_mesh(params: CatenoidParams) -> TriMesh:
    """Triangulated inverted catenoid; truncation circles are capped with fans.

    The caps close the two loops that the truncation circles map to near e3;
    their area vanishes rapidly as s_max grows.
    """
    s = np.linspace(-params.s_max, params.s_max, params.n_s + 1)
    rho = params.a * np.cosh(s / params.a)
    y = np.stack([rho, s - 1.0], axis=1)  # meridian relative to e3 in (rho, z)
    r2 = np.sum(y * y, axis=1)
    prof = np.stack([rho / r2, 1.0 + (s - 1.0) / r2], axis=1)
    cap_lo = [0.0, prof[0, 1]]
    cap_hi = [0.0, prof[-1, 1]]
    profile = np.vstack([cap_lo, prof, cap_hi])
    mesh = revolve_profile(profile, params.n_theta)
    report = validate(mesh)
    if not report.passed:
        raise MeshValidationError("inverted catenoid mesh invalid: " + report.summary())
    return mesh


# -- seed shapes at prescribed isoperimetric ratio ------------------------------


def _prolate_profile(aspect, resolution):
    n = max(8, int(round(resolution * max(1.0, aspect / 2.0))))
    phi = np.linspace(0.0, np.pi, n + 1)
    rho = np.sin(phi)
    z = -aspect * np.cos(phi)
    prof = np.stack([rho, z], axis=1)
    prof[0, 0] = 0.0
    prof[-1, 0] = 0.0
    return prof


def prolate_mesh(target_sigma: float, resolution: int = 64) -> TriMesh:
    """Prolate spheroid of revolution with iso_ratio tuned to target_sigma."""
    return _bisect_shape(
        lambda c: revolve_profile(_prolate_profile(c, resolution), resolution),
        lo=1.0 + 1e-9,
        hi=2.0,
        target=target_sigma,
        grow=True,
        what="prolate aspect ratio",
    )


# stomatocyte geometry: outer unit sphere, inner cavity sphere of radius b
# centered at height h, joined near the north pole by a circular fillet that
# is tangent to both spheres and opens at a prescribed mouth radius.
_CENTER_LIFT = 0.35   # inner sphere center height, as a fraction of 1 - b
_NECK_FRACTION = 0.5  # mouth radius, as a fraction of 1 - b


def _stomatocyte_arcs(b):
    s = 1.0 - b
    h = _CENTER_LIFT * s
    neck = min(_NECK_FRACTION * s, 0.5 * b)  # mouth cannot open wider than the cavity

    # fillet radius f solves: the circle centered at (neck + f, z_f) with
    # |F| = 1 - f (tangent inside the unit sphere) is also tangent to the
    # inner sphere, |F - (0, h)| = b + f.
    def gap(f):
        z_tan = ((1.0 - f) ** 2 - (b + f) ** 2 + h * h) / (2.0 * h)
        z_geo_sq = (1.0 - f) ** 2 - (neck + f) ** 2
        if z_geo_sq <= 0.0:
            return -np.inf
        return z_tan - np.sqrt(z_geo_sq)

    # tangency to both spheres requires |s - 2f| <= h; the mouth requires
    # neck + f <= 1 - f
    f_lo = max(0.5 * (s - h), 1e-12) * (1.0 + 1e-9)
    f_hi = min(0.5 * (s + h), 0.5 * (1.0 - neck)) * (1.0 - 1e-9)
    if f_hi <= f_lo:
        raise BisectionFailed(f"no tangent fillet exists for b={b:.4f}")
    grid = np.linspace(f_lo, f_hi, 256)
    vals = np.array([gap(f) for f in grid])
    sign_change = np.nonzero((vals[:-1] > 0.0) & (vals[1:] <= 0.0))[0]
    if vals[0] <= 0.0 or len(sign_change) == 0:
        raise BisectionFailed(f"fillet bracket failed for b={b:.4f}")
    lo, hi = grid[sign_change[0]], grid[sign_change[0] + 1]
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    f = 0.5 * (lo + hi)
    x_f = neck + f
    z_f = np.sqrt((1.0 - f) ** 2 - x_f**2)
    fc = np.array([x_f, z_f])
    t_outer = fc / (1.0 - f)                      # tangency on the unit sphere
    t_inner = fc + f * (np.array([0.0, h]) - fc) / (b + f)
    return fc, f, h, t_outer, t_inner, neck


def _stomatocyte_profile(b, resolution):
    fc, f, h, t_outer, t_inner, _ = _stomatocyte_arcs(b)

    # outer sphere: polar angle from the south pole
    t_o = np.arctan2(t_outer[0], -t_outer[1])
    # fillet: sweep counter-clockwise from t_outer to t_inner through the waist
    th_o = np.arctan2(t_outer[1] - fc[1], t_outer[0] - fc[0])
    th_i = np.arctan2(t_inner[1] - fc[1], t_inner[0] - fc[0])
    if th_i <= th_o:
        th_i += 2.0 * np.pi
    if not (th_o < np.pi < th_i):
        raise BisectionFailed(f"fillet arc does not pass the waist for b={b:.4f}")
    # inner sphere: angle from its top, ending at its bottom pole
    u_i = np.arctan2(t_inner[0], t_inner[1] - h)

    len_out, len_fill, len_in = t_o, f * (th_i - th_o), b * (np.pi - u_i)
    total = len_out + len_fill + len_in
    n_total = max(24, int(round(1.5 * resolution)))
    n_fill = max(10, int(round(n_total * len_fill / total)))
    n_out = max(8, int(round(n_total * len_out / total)))
    n_in = max(8, n_total - n_fill - n_out)

    t = np.linspace(0.0, t_o, n_out + 1)[1:]
    outer = np.stack([np.sin(t), -np.cos(t)], axis=1)
    th = np.linspace(th_o, th_i, n_fill + 2)[1:-1]
    fillet = fc[None, :] + f * np.stack([np.cos(th), np.sin(th)], axis=1)
    u = np.linspace(u_i, np.pi, n_in + 1)[:-1]
    inner = np.stack([b * np.sin(u), h + b * np.cos(u)], axis=1)

    south = [0.0, -1.0]
    inner_pole = [0.0, h - b]
    return np.vstack([south, outer, fillet, inner, inner_pole])


def dumbbell_mesh(target_sigma: float, resolution: int = 64) -> TriMesh:
    """Axisymmetric two-bulb surface (outer bulb plus inverted inner bulb).

    The inner cavity radius is tuned by bisection until the mesh hits the
    requested isoperimetric ratio; the neck waist shrinks monotonically with
    the target. Degenerates toward the double sphere as target_sigma -> 0.
    """
    return _bisect_shape(
        lambda b: revolve_profile(_stomatocyte_profile(b, resolution), resolution),
        lo=0.02,
        hi=0.985,
        target=target_sigma,
        grow=False,
        what="dumbbell cavity radius",
    )


def dumbbell_neck_radius(target_sigma: float, resolution: int = 64) -> float:
    """Waist radius of the tuned dumbbell; exposed for monotonicity checks."""
    mesh = dumbbell_mesh(target_sigma, resolution)
    # waist = smallest distance from the axis along the neck ring
    rho = np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1])
    upper = mesh.vertices[:, 2] > 0.0
    return float(np.min(rho[upper & (rho > 0.0)]))


def _bisect_shape(build, lo, hi, target, grow, what, tol=1e-3, max_iter=80):
    """Bisection of a monotone shape parameter -> iso_ratio map.

    grow=True: iso_ratio decreases as the parameter increases from lo (prolate
    aspect); the upper bracket is expanded geometrically first.
    """
    if not (0.05 < target < 0.999):
        raise BisectionFailed(f"target iso ratio {target} outside supported range")

    def measure(p):
        return iso_ratio(build(p))

    i_lo = measure(lo)
    if i_lo < target:
        raise BisectionFailed(
            f"{what}: iso ratio at the lower bracket {i_lo:.4f} already below target {target}"
        )
    if grow:
        while measure(hi) > target:
            hi *= 2.0
            if hi > 1e3:
                raise BisectionFailed(f"{what}: cannot bracket target {target}")
    else:
        i_hi = measure(hi)
        if i_hi > target:
            raise BisectionFailed(
                f"{what}: smallest reachable iso ratio {i_hi:.4f} exceeds target {target}"
            )

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        mesh = build(mid)
        val = iso_ratio(mesh)
        if abs(val - target) <= 0.5 * tol:
            return mesh
        if val > target:
            lo = mid
        else:
            hi = mid
    raise BisectionFailed(f"{what}: bisection did not converge to {target}")
