"""Minkowski norms, their duals, and Wulff shapes.

Three norm families are provided.  The euclidean norm and the ellipsoidal
norms sqrt(x^T A x) have closed-form duals and serve as oracles; the
"perturbed" family has support function h = 1 + eps*Y on the unit sphere,
with Y the restriction of a low-degree harmonic polynomial, and exercises
the numerical dual path (grid scan plus Newton refinement on the sphere).

All evaluation methods are vectorized: `x` may be a single vector of shape
(d,) or a batch of shape (..., d).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sphere_grid import SphereGrid, make_grid

_NEWTON_TOL = 1e-13
_NEWTON_MAXIT = 40


def _as_batch(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise ValueError(f"expected vectors with {d} components, got shape {x.shape}")
    single = x.ndim == 1
    return (x[None, :] if single else x.reshape(-1, d)), single, x.shape[:-1]


def _restore(values, single, lead_shape):
    if single:
        return values[0]
    return values.reshape(lead_shape + values.shape[1:])


def _check_nonzero(x):
    if np.any(np.linalg.norm(x, axis=-1) == 0.0):
        raise ValueError("norm derivative requested at x = 0")


# --------------------------------------------------------------------------
# Harmonic polynomial perturbations
# --------------------------------------------------------------------------


class SectoralHarmonic:
    """Re((x1 + i*x2)^k): a degree-k harmonic polynomial, sup 1 on the sphere.

    Restricted to the unit circle this is cos(k*t); it is harmonic in any
    ambient dimension since the remaining coordinates do not appear.
    """

    def __init__(self, degree):
        if degree < 2:
            raise ValueError("harmonic degree must be >= 2")
        self.degree = int(degree)

    def value(self, x):
        z = x[..., 0] + 1j * x[..., 1]
        return (z ** self.degree).real

    def grad(self, x):
        k = self.degree
        z = x[..., 0] + 1j * x[..., 1]
        dz = k * z ** (k - 1)
        g = np.zeros_like(x)
        g[..., 0] = dz.real
        g[..., 1] = -dz.imag
        return g

    def hess(self, x):
        k = self.degree
        z = x[..., 0] + 1j * x[..., 1]
        d2 = k * (k - 1) * z ** (k - 2)
        h = np.zeros(x.shape + (x.shape[-1],))
        h[..., 0, 0] = d2.real
        h[..., 0, 1] = -d2.imag
        h[..., 1, 0] = -d2.imag
        h[..., 1, 1] = -d2.real
        return h


class ProductHarmonic:
    """3*sqrt(3)*x1*x2*x3: a degree-3 harmonic polynomial, sup 1 on S^2."""

    degree = 3
    _scale = 3.0 * np.sqrt(3.0)

    def value(self, x):
        return self._scale * x[..., 0] * x[..., 1] * x[..., 2]

    def grad(self, x):
        g = np.empty_like(x)
        g[..., 0] = x[..., 1] * x[..., 2]
        g[..., 1] = x[..., 0] * x[..., 2]
        g[..., 2] = x[..., 0] * x[..., 1]
        return self._scale * g

    def hess(self, x):
        h = np.zeros(x.shape + (3,))
        h[..., 0, 1] = h[..., 1, 0] = x[..., 2]
        h[..., 0, 2] = h[..., 2, 0] = x[..., 1]
        h[..., 1, 2] = h[..., 2, 1] = x[..., 0]
        return self._scale * h


# --------------------------------------------------------------------------
# Norm families
# --------------------------------------------------------------------------


class MinkowskiNorm:
    """Base class: a convex 1-homogeneous norm, smooth away from the origin.

    Subclasses implement `value`, `grad`, `hess`, `dual_value`, `dual_grad`.
    Instances are immutable value objects; all methods are pure.
    """

    family = "abstract"
    ambient_dim = None

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def hess(self, x):
        raise NotImplementedError

    def dual_value(self, x):
        raise NotImplementedError

    def dual_grad(self, x):
        raise NotImplementedError

    def wulff_radius(self, directions):
        """Radial profile rho of the unit dual ball: rho = 1/dual_value."""
        return 1.0 / self.dual_value(directions)

    def spec(self):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} d={self.ambient_dim}>"


class EuclideanNorm(MinkowskiNorm):
    family = "euclidean"

    def __init__(self, ambient_dim):
        if ambient_dim not in (2, 3):
            raise ValueError("ambient dimension must be 2 or 3")
        self.ambient_dim = int(ambient_dim)
        self.positivity = 1.0

    def value(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        return _restore(np.linalg.norm(x, axis=-1), single, lead)

    def grad(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        n = np.linalg.norm(x, axis=-1, keepdims=True)
        return _restore(x / n, single, lead)

    def hess(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        n = np.linalg.norm(x, axis=-1)
        u = x / n[:, None]
        eye = np.eye(self.ambient_dim)
        h = (eye[None] - u[:, :, None] * u[:, None, :]) / n[:, None, None]
        return _restore(h, single, lead)

    def dual_value(self, x):
        return self.value(x)

    def dual_grad(self, x):
        return self.grad(x)

    def spec(self):
        return {"family": "euclidean", "dim": self.ambient_dim - 1}


class EllipsoidNorm(MinkowskiNorm):
    """F(x) = sqrt(x^T A x) for a symmetric positive-definite matrix A.

    The unit dual ball is the ellipsoid {x : x^T A^-1 x <= 1}, with semi-axes
    the square roots of the eigenvalues of A.
    """

    family = "ellipsoid"

    def __init__(self, matrix):
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 3):
            raise ValueError("matrix must be square of size 2 or 3")
        if not np.allclose(a, a.T, atol=1e-12):
            raise ValueError("matrix must be symmetric")
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise ValueError("matrix must be positive definite") from exc
        self.matrix = a.copy()
        self.matrix.setflags(write=False)
        self.inverse = np.linalg.inv(a)
        self.inverse.setflags(write=False)
        self.ambient_dim = a.shape[0]
        self.positivity = float(np.sqrt(np.linalg.eigvalsh(a)[0]))

    def value(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        q = np.einsum("ij,jk,ik->i", x, self.matrix, x)
        return _restore(np.sqrt(q), single, lead)

    def grad(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        ax = x @ self.matrix
        f = np.sqrt(np.einsum("ij,ij->i", x, ax))
        return _restore(ax / f[:, None], single, lead)

    def hess(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        ax = x @ self.matrix
        f = np.sqrt(np.einsum("ij,ij->i", x, ax))
        h = self.matrix[None] / f[:, None, None] \
            - ax[:, :, None] * ax[:, None, :] / f[:, None, None] ** 3
        return _restore(h, single, lead)

    def dual_value(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        q = np.einsum("ij,jk,ik->i", x, self.inverse, x)
        return _restore(np.sqrt(q), single, lead)

    def dual_grad(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        bx = x @ self.inverse
        f0 = np.sqrt(np.einsum("ij,ij->i", x, bx))
        return _restore(bx / f0[:, None], single, lead)

    def spec(self):
        return {"family": "ellipsoid", "matrix": self.matrix.tolist()}


class PerturbedNorm(MinkowskiNorm):
    """Support-function perturbation of the euclidean norm.

    F(x) = |x| * (1 + eps * Y(x/|x|)) with Y a harmonic polynomial of degree
    k normalized to sup 1 on the sphere, i.e. F = |x| + eps * p(x)/|x|^(k-1).
    Construction fails if the perturbation breaks strict convexity of F^2/2.

    The dual norm has no closed form; it is evaluated by maximizing
    x.y / F(y) over unit y with a coarse grid scan followed by Newton
    refinement in a tangent chart.
    """

    family = "perturbed"

    def __init__(self, ambient_dim, eps, harmonic=None, scan_resolution=None):
        if ambient_dim not in (2, 3):
            raise ValueError("ambient dimension must be 2 or 3")
        self.ambient_dim = int(ambient_dim)
        self.eps = float(eps)
        if harmonic is None:
            harmonic = SectoralHarmonic(3) if ambient_dim == 2 else ProductHarmonic()
        self.harmonic = harmonic
        if scan_resolution is None:
            scan_resolution = 512 if ambient_dim == 2 else 24
        scan = make_grid(ambient_dim - 1, scan_resolution)
        self._scan_dirs = scan.nodes
        self._scan_f = self._value_batch(scan.nodes)
        self._validate(scan)

    def _validate(self, scan):
        dirs = self._scan_dirs
        f = self._scan_f
        self.positivity = float(np.min(f))
        if self.positivity <= 0.0:
            raise ValueError("perturbation destroys positivity; reduce eps")
        # D^2(F^2/2) = F D^2F + DF (x) DF must stay positive definite.
        g = self._grad_batch(dirs)
        h = self._hess_batch(dirs)
        m = f[:, None, None] * h + g[:, :, None] * g[:, None, :]
        eigs = np.linalg.eigvalsh(m)
        self.convexity_margin = float(np.min(eigs))
        if self.convexity_margin <= 1e-10:
            raise ValueError(
                "not a Minkowski norm: D^2(F^2/2) loses positive definiteness "
                f"(min eigenvalue {self.convexity_margin:.3e}); reduce eps")

    # internal batched kernels (x: (m, d) with nonzero rows)

    def _value_batch(self, x):
        n = np.linalg.norm(x, axis=-1)
        k = self.harmonic.degree
        return n + self.eps * self.harmonic.value(x) / n ** (k - 1)

    def _grad_batch(self, x):
        n = np.linalg.norm(x, axis=-1)
        k = self.harmonic.degree
        p = self.harmonic.value(x)
        dp = self.harmonic.grad(x)
        g = x / n[:, None]
        g += self.eps * (dp / n[:, None] ** (k - 1)
                         + (1 - k) * p[:, None] * x / n[:, None] ** (k + 1))
        return g

    def _hess_batch(self, x):
        d = self.ambient_dim
        n = np.linalg.norm(x, axis=-1)
        u = x / n[:, None]
        k = self.harmonic.degree
        p = self.harmonic.value(x)
        dp = self.harmonic.grad(x)
        d2p = self.harmonic.hess(x)
        eye = np.eye(d)[None]
        h = (eye - u[:, :, None] * u[:, None, :]) / n[:, None, None]
        nk1 = n ** (k + 1)
        cross = dp[:, :, None] * x[:, None, :] + x[:, :, None] * dp[:, None, :]
        h = h + self.eps * (
            d2p / n[:, None, None] ** (k - 1)
            + (1 - k) * cross / nk1[:, None, None]
            + (1 - k) * p[:, None, None] * eye / nk1[:, None, None]
            - (1 - k) * (k + 1) * p[:, None, None]
            * x[:, :, None] * x[:, None, :] / n[:, None, None] ** (k + 3)
        )
        return h

    def value(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        return _restore(self._value_batch(x), single, lead)

    def grad(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        return _restore(self._grad_batch(x), single, lead)

    def hess(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        return _restore(self._hess_batch(x), single, lead)

    # dual evaluation

    def _tangent_basis(self, y):
        """Orthonormal basis of the tangent space at unit vectors y: (m, d, d-1)."""
        m, d = y.shape
        if d == 2:
            v = np.empty((m, 2, 1))
            v[:, 0, 0] = -y[:, 1]
            v[:, 1, 0] = y[:, 0]
            return v
        ref = np.zeros((m, 3))
        ref[np.arange(m), np.argmin(np.abs(y), axis=1)] = 1.0
        v1 = np.cross(y, ref)
        v1 /= np.linalg.norm(v1, axis=1, keepdims=True)
        v2 = np.cross(y, v1)
        return np.stack([v1, v2], axis=-1)

    def _dual_maximizer(self, x):
        """Unit maximizers of y -> x.y / F(y), one per row of x."""
        scores = (x @ self._scan_dirs.T) / self._scan_f[None, :]
        y = self._scan_dirs[np.argmax(scores, axis=1)].copy()
        xn = np.linalg.norm(x, axis=1)
        for _ in range(_NEWTON_MAXIT):
            fy = self._value_batch(y)
            gy = self._grad_batch(y)
            hy = self._hess_batch(y)
            num = np.einsum("ij,ij->i", x, y)
            dphi = x / fy[:, None] - num[:, None] * gy / fy[:, None] ** 2
            cross = x[:, :, None] * gy[:, None, :] + gy[:, :, None] * x[:, None, :]
            d2phi = (-cross / fy[:, None, None] ** 2
                     - num[:, None, None] * hy / fy[:, None, None] ** 2
                     + 2.0 * num[:, None, None] * gy[:, :, None] * gy[:, None, :]
                     / fy[:, None, None] ** 3)
            basis = self._tangent_basis(y)
            gt = np.einsum("idk,id->ik", basis, dphi)
            if np.max(np.linalg.norm(gt, axis=1) / xn) < _NEWTON_TOL:
                break
            ht = np.einsum("idk,ide,iel->ikl", basis, d2phi, basis)
            try:
                c = -np.linalg.solve(ht, gt[..., None])[..., 0]
            except np.linalg.LinAlgError as exc:
                raise RuntimeError("dual Newton hit a singular Hessian; "
                                   "the norm may be too close to degenerate") from exc
            cn = np.linalg.norm(c, axis=1, keepdims=True)
            c = np.where(cn > 0.5, 0.5 * c / np.maximum(cn, 1e-300), c)  # step cap
            y = y + np.einsum("idk,ik->id", basis, c)
            y /= np.linalg.norm(y, axis=1, keepdims=True)
        else:
            raise RuntimeError(
                "dual Newton refinement did not converge; the perturbation may "
                "leave too small a smoothness margin (reduce eps)")
        return y

    def dual_value(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        y = self._dual_maximizer(x)
        vals = np.einsum("ij,ij->i", x, y) / self._value_batch(y)
        return _restore(vals, single, lead)

    def dual_grad(self, x):
        x, single, lead = _as_batch(x, self.ambient_dim)
        _check_nonzero(x)
        y = self._dual_maximizer(x)
        g = y / self._value_batch(y)[:, None]
        return _restore(g, single, lead)

    def spec(self):
        kind = ("sectoral" if isinstance(self.harmonic, SectoralHarmonic)
                else "product")
        return {"family": "perturbed", "dim": self.ambient_dim - 1,
                "epsilon": self.eps, "harmonic": {"kind": kind,
                                                  "degree": self.harmonic.degree}}


def norm_from_spec(spec):
    """Build a norm from a JSON-style description {family, parameters}."""
    family = spec.get("family")
    if family == "euclidean":
        return EuclideanNorm(int(spec.get("dim", 1)) + 1)
    if family == "ellipsoid":
        return EllipsoidNorm(np.asarray(spec["matrix"], dtype=float))
    if family == "perturbed":
        d = int(spec.get("dim", 1)) + 1
        h = spec.get("harmonic", {})
        kind = h.get("kind", "sectoral" if d == 2 else "product")
        if kind == "sectoral":
            harmonic = SectoralHarmonic(int(h.get("degree", 3)))
        elif kind == "product":
            harmonic = ProductHarmonic()
        else:
            raise ValueError(f"unknown harmonic kind: {kind}")
        return PerturbedNorm(d, float(spec.get("epsilon", 0.1)), harmonic)
    raise ValueError(f"unknown norm family: {family}")


# --------------------------------------------------------------------------
# Duality diagnostics
# --------------------------------------------------------------------------


@dataclass
class DualityReport:
    """Max residuals of the norm/dual-norm identities over random samples."""

    primal_of_dual_grad: float   # |F(DF0(y)) - 1|
    dual_of_primal_grad: float   # |F0(DF(x)) - 1|
    grad_roundtrip: float        # |DF(DF0(y)) * F0(y) - y| / |y|
    cauchy_schwarz_gap: float    # max(0, x.y - F(x) F0(y)) / (F(x) F0(y))
    equality_case: float         # |x.y - F(x) F0(y)| at x = c DF(y)
    samples: int

    @property
    def max_residual(self):
        return max(self.primal_of_dual_grad, self.dual_of_primal_grad,
                   self.grad_roundtrip, self.cauchy_schwarz_gap,
                   self.equality_case)

    def to_dict(self):
        return {
            "primal_of_dual_grad": self.primal_of_dual_grad,
            "dual_of_primal_grad": self.dual_of_primal_grad,
            "grad_roundtrip": self.grad_roundtrip,
            "cauchy_schwarz_gap": self.cauchy_schwarz_gap,
            "equality_case": self.equality_case,
            "samples": self.samples,
            "max_residual": self.max_residual,
        }


def verify_duality(norm, n_samples=1000, rng=None):
    """Check the primal/dual identities and the generalized Cauchy-Schwarz
    inequality on random sample vectors; returns a DualityReport."""
    if rng is None:
        rng = np.random.default_rng(0)
    d = norm.ambient_dim
    x = rng.standard_normal((n_samples, d))
    y = rng.standard_normal((n_samples, d))
    # keep samples comfortably away from the origin
    x += np.sign(x) * 0.1
    y += np.sign(y) * 0.1

    fx = norm.value(x)
    f0y = norm.dual_value(y)
    gx = norm.grad(x)
    g0y = norm.dual_grad(y)

    r1 = float(np.max(np.abs(norm.value(g0y) - 1.0)))
    r2 = float(np.max(np.abs(norm.dual_value(gx) - 1.0)))
    roundtrip = norm.grad(g0y) * f0y[:, None] - y
    r3 = float(np.max(np.linalg.norm(roundtrip, axis=1)
                      / np.linalg.norm(y, axis=1)))
    gap = (np.einsum("ij,ij->i", x, y) - fx * f0y) / (fx * f0y)
    r4 = float(max(0.0, np.max(gap)))
    # equality is attained along the gradient rays, in both pairings:
    # x = c*DF0(y) saturates x.y <= F(x)F0(y), x = c*DF(y) the swapped form
    c = rng.uniform(0.5, 2.0, size=n_samples)
    xeq = c[:, None] * g0y
    gap_eq = (np.einsum("ij,ij->i", xeq, y)
              - norm.value(xeq) * f0y) / (norm.value(xeq) * f0y)
    xeq2 = c[:, None] * norm.grad(y)
    gap_eq2 = (np.einsum("ij,ij->i", xeq2, y)
               - norm.dual_value(xeq2) * norm.value(y)) \
        / (norm.dual_value(xeq2) * norm.value(y))
    r5 = float(max(np.max(np.abs(gap_eq)), np.max(np.abs(gap_eq2))))
    return DualityReport(r1, r2, r3, r4, r5, n_samples)


# --------------------------------------------------------------------------
# Wulff shapes
# --------------------------------------------------------------------------


@dataclass
class WulffShape:
    """The unit dual ball of a norm, sampled as a radial graph on a grid.

    `rho` satisfies dual_value(node) * rho = 1 at every node.  `volume` is
    the enclosed volume and `perimeter` the anisotropic perimeter; for the
    exact shape the perimeter equals (n+1) * volume with n the surface
    dimension, and `identity_residual` records the relative quadrature
    residual of that identity.
    """

    norm: MinkowskiNorm
    grid: SphereGrid
    rho: np.ndarray = field(repr=False)
    volume: float
    perimeter: float
    identity_residual: float

    def surface(self, scale=1.0, center=None):
        from .hypersurface import StarSurface
        c = np.zeros(self.grid.dim + 1) if center is None else center
        return StarSurface(self.grid, scale * self.rho, c)


def make_wulff(norm, grid):
    """Sample the Wulff shape of `norm` on `grid` and check its area identity."""
    if norm.ambient_dim != grid.dim + 1:
        raise ValueError("norm and grid dimensions do not match")
    rho = norm.wulff_radius(grid.nodes)
    n = grid.dim
    vol = grid.integrate(rho ** (n + 1)) / (n + 1)
    from .hypersurface import StarSurface, aniso_perimeter
    per = aniso_perimeter(StarSurface(grid, rho), norm)
    residual = abs(per - (n + 1) * vol) / per
    return WulffShape(norm, grid, rho, vol, per, residual)
