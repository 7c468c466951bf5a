"""Star-shaped hypersurfaces as radial graphs and their anisotropic geometry.

A surface is a positive radial field r over a SphereGrid together with a
star center P, embedding node theta to P + r(theta)*theta.  `geometry`
produces all pointwise quantities (unit normal, area measures, shape
operator, anisotropic mean curvature); the integral functionals (volume,
anisotropic perimeter, weighted momenta, the scale-invariant quotient Q)
are thin quadratures over that cache.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .minkowski import MinkowskiNorm, SectoralHarmonic, ProductHarmonic
from .sphere_grid import SphereGrid


class MeanConvexityError(RuntimeError):
    """Raised when an operation requires H_F > 0 and the surface fails it."""


@dataclass(frozen=True)
class StarSurface:
    """Radial graph r(theta) about a star center, sampled on a SphereGrid."""

    grid: SphereGrid
    r: np.ndarray = field(repr=False)
    center: np.ndarray = None

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).copy()
        if r.shape != (self.grid.n_nodes,):
            raise ValueError("radial field length does not match the grid")
        if not np.all(np.isfinite(r)) or np.any(r <= 0.0):
            raise ValueError("radial field must be finite and positive")
        c = (np.zeros(self.grid.dim + 1) if self.center is None
             else np.asarray(self.center, dtype=float).copy())
        if c.shape != (self.grid.dim + 1,):
            raise ValueError("center has the wrong dimension")
        r.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "center", c)

    @property
    def points(self):
        return self.center[None, :] + self.r[:, None] * self.grid.nodes

    def scaled(self, k, about=None):
        """Surface scaled by k about a point (default: its own center)."""
        about = self.center if about is None else np.asarray(about, dtype=float)
        new_center = about + k * (self.center - about)
        return StarSurface(self.grid, k * self.r, new_center)


@dataclass
class GeometryCache:
    """Pointwise geometric data of a surface/norm pair.

    Shape operator and the tangential Hessian of the norm are stored in the
    per-node orthonormal tangent frame `frame` (columns are frame vectors).
    `area_w` and `aniso_area_w` already include the quadrature weights, so
    integrals over the surface are plain sums against them.
    """

    points: np.ndarray = field(repr=False)
    normal: np.ndarray = field(repr=False)
    grad_r: np.ndarray = field(repr=False)
    area_w: np.ndarray = field(repr=False)        # measure weights d(mu)
    f_normal: np.ndarray = field(repr=False)      # F(normal)
    aniso_area_w: np.ndarray = field(repr=False)  # F(normal) d(mu)
    aniso_normal: np.ndarray = field(repr=False)  # DF(normal)
    frame: np.ndarray = field(repr=False)         # (N, d, n) tangent frame
    shape_op: np.ndarray = field(repr=False)      # (N, n, n) in that frame
    norm_hess_tan: np.ndarray = field(repr=False)  # (N, n, n) D^2F restricted
    aniso_mean_curv: np.ndarray = field(repr=False)

    @property
    def min_mean_curv(self):
        return float(np.min(self.aniso_mean_curv))


def _geometry_curve(surface, norm):
    grid = surface.grid
    r = surface.r
    rt, rtt = grid.angle_derivatives(r)
    sq = np.sqrt(r ** 2 + rt ** 2)

    theta = grid.nodes
    tau = grid.tangents
    points = surface.center[None, :] + r[:, None] * theta
    normal = (r[:, None] * theta - rt[:, None] * tau) / sq[:, None]
    grad_r = rt[:, None] * tau

    curv = (r ** 2 + 2.0 * rt ** 2 - r * rtt) / sq ** 3
    if not np.all(np.isfinite(curv)):
        raise ValueError("non-finite curvature; the surface is under-resolved")

    tangent = (rt[:, None] * theta + r[:, None] * tau) / sq[:, None]
    frame = tangent[:, :, None]
    shape_op = curv[:, None, None]

    f_nu = norm.value(normal)
    hess = norm.hess(normal)
    b = np.einsum("id,ide,ie->i", tangent, hess, tangent)
    hf = curv * b

    area_w = sq * grid.weights
    return GeometryCache(
        points=points, normal=normal, grad_r=grad_r, area_w=area_w,
        f_normal=f_nu, aniso_area_w=f_nu * area_w,
        aniso_normal=norm.grad(normal),
        frame=frame, shape_op=shape_op,
        norm_hess_tan=b[:, None, None], aniso_mean_curv=hf)


def _geometry_sphere(surface, norm):
    grid = surface.grid
    r = surface.r
    r_t, r_p, r_tt, r_tp, r_pp = grid.latlon_derivatives(r)

    st = np.repeat(grid.sin_colat, grid.nlon)
    ct = np.repeat(grid.cos_colat, grid.nlon)
    theta = grid.nodes
    e_t = grid.frame_colat
    e_p = grid.frame_lon

    grad_r = r_t[:, None] * e_t + (r_p / st)[:, None] * e_p
    w2 = r ** 2 + r_t ** 2 + (r_p / st) ** 2
    sq = np.sqrt(w2)
    points = surface.center[None, :] + r[:, None] * theta
    normal = (r[:, None] * theta - grad_r) / sq[:, None]

    # covariant Hessian of r in the round chart
    h_tt = r_tt
    h_tp = r_tp - (ct / st) * r_p
    h_pp = r_pp + st * ct * r_t

    g11 = r ** 2 + r_t ** 2
    g12 = r_t * r_p
    g22 = (r * st) ** 2 + r_p ** 2
    b11 = (r ** 2 + 2.0 * r_t ** 2 - r * h_tt) / sq
    b12 = (2.0 * r_t * r_p - r * h_tp) / sq
    b22 = ((r * st) ** 2 + 2.0 * r_p ** 2 - r * h_pp) / sq

    det = g11 * g22 - g12 ** 2
    s11 = (g22 * b11 - g12 * b12) / det
    s12 = (g22 * b12 - g12 * b22) / det
    s21 = (g11 * b12 - g12 * b11) / det
    s22 = (g11 * b22 - g12 * b12) / det
    if not (np.all(np.isfinite(s11)) and np.all(np.isfinite(s22))):
        raise ValueError("non-finite shape operator; the surface is under-resolved")

    # chart tangents and orthonormal frame
    t1 = r_t[:, None] * theta + r[:, None] * e_t
    t2 = r_p[:, None] * theta + (r * st)[:, None] * e_p
    n1 = np.sqrt(g11)
    e1 = t1 / n1[:, None]
    c12 = g12 / n1
    t2p = t2 - c12[:, None] * e1
    n2 = np.linalg.norm(t2p, axis=1)
    e2 = t2p / n2[:, None]
    frame = np.stack([e1, e2], axis=-1)

    # change of basis: components u_a = C_ai v^i with C = [[n1, c12], [0, n2]]
    # shape operator in the orthonormal frame: C S C^-1, then symmetrized.
    cs11 = n1 * s11 + c12 * s21
    cs12 = n1 * s12 + c12 * s22
    cs21 = n2 * s21
    cs22 = n2 * s22
    # right-multiply by C^-1 = [[1/n1, -c12/(n1 n2)], [0, 1/n2]]
    o11 = cs11 / n1
    o12 = -cs11 * c12 / (n1 * n2) + cs12 / n2
    o21 = cs21 / n1
    o22 = -cs21 * c12 / (n1 * n2) + cs22 / n2
    sym12 = 0.5 * (o12 + o21)
    shape_op = np.empty((grid.n_nodes, 2, 2))
    shape_op[:, 0, 0] = o11
    shape_op[:, 0, 1] = sym12
    shape_op[:, 1, 0] = sym12
    shape_op[:, 1, 1] = o22

    f_nu = norm.value(normal)
    hess = norm.hess(normal)
    bmat = np.einsum("ida,ide,ieb->iab", frame, hess, frame)
    afb = np.einsum("iab,ibc->iac", bmat, shape_op)
    hf = afb[:, 0, 0] + afb[:, 1, 1]

    area_w = (r ** (grid.dim - 1)) * sq * grid.weights
    return GeometryCache(
        points=points, normal=normal, grad_r=grad_r, area_w=area_w,
        f_normal=f_nu, aniso_area_w=f_nu * area_w,
        aniso_normal=norm.grad(normal),
        frame=frame, shape_op=shape_op,
        norm_hess_tan=bmat, aniso_mean_curv=hf)


def geometry(surface, norm):
    """All pointwise geometric quantities of a surface under a norm."""
    if norm.ambient_dim != surface.grid.dim + 1:
        raise ValueError("norm and surface grid dimensions do not match")
    if surface.grid.dim == 1:
        return _geometry_curve(surface, norm)
    return _geometry_sphere(surface, norm)


# --------------------------------------------------------------------------
# Integral functionals
# --------------------------------------------------------------------------


def volume(surface):
    """Enclosed volume, via the radial cone formula about the star center."""
    n = surface.grid.dim
    return surface.grid.integrate(surface.r ** (n + 1)) / (n + 1)


def flux_volume(surface, cache, about=None):
    """Enclosed volume via the divergence-theorem flux about any point."""
    n = surface.grid.dim
    about = surface.center if about is None else np.asarray(about, dtype=float)
    rel = cache.points - about[None, :]
    return float(np.sum(np.einsum("ij,ij->i", rel, cache.normal)
                        * cache.area_w)) / (n + 1)


def aniso_perimeter(surface, norm, cache=None):
    """Anisotropic perimeter: integral of F(normal) over the surface."""
    if cache is None:
        cache = geometry(surface, norm)
    return float(np.sum(cache.aniso_area_w))


def weighted_momentum(surface, norm, center, p=1.0, cache=None):
    """Weighted momentum: integral of dual_value(x - center)^p against the
    anisotropic area measure."""
    if p < 1.0:
        raise ValueError(f"momentum exponent must be >= 1, got {p}")
    if cache is None:
        cache = geometry(surface, norm)
    center = np.asarray(center, dtype=float)
    rel = cache.points - center[None, :]
    return float(np.sum(norm.dual_value(rel) ** p * cache.aniso_area_w))


def q_functional(surface, norm, center=None, cache=None):
    """Scale-invariant quotient Q = per^(-1-1/n) * (momentum - volume)."""
    if cache is None:
        cache = geometry(surface, norm)
    n = surface.grid.dim
    c = np.zeros(n + 1) if center is None else np.asarray(center, dtype=float)
    per = float(np.sum(cache.aniso_area_w))
    mom = weighted_momentum(surface, norm, c, 1.0, cache)
    return per ** (-1.0 - 1.0 / n) * (mom - volume(surface))


def wulff_q_value(norm_or_volume, grid=None, n=None):
    """Value of Q on any rescaled translate of the Wulff shape.

    Accepts either (norm, grid) or a precomputed enclosed volume with the
    surface dimension n.
    """
    if isinstance(norm_or_volume, MinkowskiNorm):
        if grid is None:
            raise ValueError("grid required when passing a norm")
        n = grid.dim
        rho = norm_or_volume.wulff_radius(grid.nodes)
        vol = grid.integrate(rho ** (n + 1)) / (n + 1)
    else:
        vol = float(norm_or_volume)
        if n is None:
            raise ValueError("surface dimension n required with a volume")
    return n * (n + 1) ** (-1.0 - 1.0 / n) * vol ** (-1.0 / n)


# --------------------------------------------------------------------------
# Surface constructors
# --------------------------------------------------------------------------


def sphere_surface(grid, radius=1.0, center=None):
    return StarSurface(grid, np.full(grid.n_nodes, float(radius)), center)


def wulff_surface(norm, grid, scale=1.0, center=None):
    """The rescaled Wulff shape scale*W (+ center) as a radial graph."""
    return StarSurface(grid, scale * norm.wulff_radius(grid.nodes), center)


def _harmonic_profile(grid, h):
    """Evaluate one radial harmonic described by a spec dict on the grid."""
    if grid.dim == 1:
        k = int(h.get("k", 1))
        phase = float(h.get("phase", 0.0))
        return np.cos(k * grid.angles + phase)
    kind = h.get("kind", "sectoral")
    if kind == "sectoral":
        return SectoralHarmonic(int(h.get("k", h.get("degree", 2)))).value(grid.nodes)
    if kind == "product":
        return ProductHarmonic().value(grid.nodes)
    if kind == "zonal":
        # Legendre polynomial of the vertical coordinate
        k = int(h.get("k", h.get("degree", 2)))
        coef = np.zeros(k + 1)
        coef[k] = 1.0
        return np.polynomial.legendre.legval(grid.nodes[:, 2], coef)
    raise ValueError(f"unknown harmonic kind: {kind}")


def fourier_surface(grid, r0=1.0, harmonics=(), center=None):
    """Radial profile r = r0 * (1 + sum of delta_k * harmonic_k)."""
    r = np.ones(grid.n_nodes)
    for h in harmonics:
        r = r + float(h.get("delta", 0.0)) * _harmonic_profile(grid, h)
    return StarSurface(grid, float(r0) * r, center)


def random_star_surface(grid, norm, rng, amplitude=0.25, modes=4, max_tries=200):
    """Rejection-sample a strictly F-mean-convex star-shaped surface.

    Draws radial Fourier perturbations with decaying mode amplitudes and
    rejects candidates until min H_F > 0 under `norm`.
    """
    for _ in range(max_tries):
        harmonics = []
        for k in range(1, modes + 1):
            delta = amplitude * rng.uniform(-1.0, 1.0) / k ** 2
            phase = rng.uniform(0.0, 2.0 * np.pi)
            if grid.dim == 1:
                harmonics.append({"k": k, "delta": delta, "phase": phase})
            else:
                harmonics.append({"kind": "zonal", "k": k + 1, "delta": delta})
        try:
            surf = fourier_surface(grid, 1.0, harmonics)
        except ValueError:
            continue
        if geometry(surf, norm).min_mean_curv > 1e-6:
            return surf
    raise RuntimeError("could not sample an F-mean-convex surface; "
                       "reduce the perturbation amplitude")


def surface_from_spec(spec, grid, norm=None):
    """Build a surface from a JSON-style description.

    kinds: sphere {radius}, wulff {scale} (requires a norm),
    radial-fourier {r0, harmonics: [{k, delta, phase}]}; all accept `center`.
    """
    kind = spec.get("kind")
    center = spec.get("center")
    if center is not None:
        center = np.asarray(center, dtype=float)
    if kind == "sphere":
        return sphere_surface(grid, float(spec.get("radius", 1.0)), center)
    if kind == "wulff":
        if norm is None:
            raise ValueError("wulff surfaces need a norm")
        return wulff_surface(norm, grid, float(spec.get("scale", 1.0)), center)
    if kind == "radial-fourier":
        return fourier_surface(grid, float(spec.get("r0", 1.0)),
                               spec.get("harmonics", ()), center)
    raise ValueError(f"unknown surface kind: {kind}")
