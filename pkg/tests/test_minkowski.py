import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulff_lab import (
    EllipsoidNorm,
    EuclideanNorm,
    PerturbedNorm,
    SectoralHarmonic,
    make_grid,
    make_wulff,
    norm_from_spec,
    verify_duality,
)


def _fd_grad(fn, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def test_euclidean_values(euclid2):
    assert euclid2.value([3.0, 4.0]) == pytest.approx(5.0)
    np.testing.assert_allclose(euclid2.grad([3.0, 4.0]), [0.6, 0.8])
    assert euclid2.dual_value([3.0, 4.0]) == pytest.approx(5.0)


def test_ellipsoid_values(ellipse2):
    # F = sqrt(4 x1^2 + x2^2), differentiated by hand
    assert ellipse2.value([1.0, 0.0]) == pytest.approx(2.0)
    np.testing.assert_allclose(ellipse2.grad([1.0, 0.0]), [2.0, 0.0])
    assert ellipse2.dual_value([0.0, 1.0]) == pytest.approx(1.0)
    x = np.array([0.7, -1.3])
    np.testing.assert_allclose(ellipse2.grad(x),
                               _fd_grad(ellipse2.value, x), atol=1e-7)


def test_ellipsoid_validation():
    with pytest.raises(ValueError, match="symmetric"):
        EllipsoidNorm([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError, match="positive definite"):
        EllipsoidNorm([[1.0, 0.0], [0.0, -2.0]])


def test_hessian_annihilates_argument(euclid2, ellipse2, perturbed2):
    rng = np.random.default_rng(11)
    x = rng.standard_normal((50, 2)) + 0.1
    for norm in (euclid2, ellipse2, perturbed2):
        hx = np.einsum("ijk,ik->ij", norm.hess(x), x)
        assert np.max(np.abs(hx)) < 1e-10


def test_grad_requires_nonzero(euclid2, perturbed2):
    for norm in (euclid2, perturbed2):
        with pytest.raises(ValueError, match="x = 0"):
            norm.grad(np.zeros(2))


def test_ellipsoid_dual_brute_force(ellipse2):
    # maximize x.y / F(y) over a million directions
    t = np.linspace(0.0, 2 * np.pi, 1_000_000, endpoint=False)
    y = np.column_stack([np.cos(t), np.sin(t)])
    fy = ellipse2.value(y)
    for x in ([0.0, 1.0], [1.0, 0.0], [0.3, -0.8]):
        brute = np.max(y @ np.asarray(x) / fy)
        assert ellipse2.dual_value(x) == pytest.approx(brute, abs=1e-9)


def test_perturbed_gradient_identity(perturbed2):
    # F(DF0(y)) = 1 on 100 random directions
    rng = np.random.default_rng(5)
    y = rng.standard_normal((100, 2))
    assert np.max(np.abs(perturbed2.value(perturbed2.dual_grad(y)) - 1.0)) < 1e-8


def test_perturbed_construction_rejects_large_eps():
    with pytest.raises(ValueError, match="positive definite"):
        PerturbedNorm(2, 0.5)


def test_duality_report_euclidean(euclid2):
    rep = verify_duality(euclid2, 500, np.random.default_rng(0))
    assert rep.max_residual < 1e-12


def test_duality_report_ellipsoid(ellipse2, ellipse3):
    for norm in (ellipse2, ellipse3):
        rep = verify_duality(norm, 500, np.random.default_rng(1))
        assert rep.max_residual < 1e-9


def test_duality_report_perturbed(perturbed2, perturbed3):
    for norm in (perturbed2, perturbed3):
        rep = verify_duality(norm, 300, np.random.default_rng(2))
        assert rep.max_residual < 1e-6


def test_cauchy_schwarz_simple_gap(euclid2):
    # orthogonal unit vectors: slack exactly 1
    x = np.array([1.0, 0.0])
    y = np.array([0.0, 1.0])
    gap = x @ y - euclid2.value(x) * euclid2.dual_value(y)
    assert gap == pytest.approx(-1.0)


def test_perturbed_biduality(perturbed2):
    # applying the dual construction twice recovers F: the second dual is
    # the support function of the sampled unit dual ball
    g = make_grid(1, 8192)
    rho = perturbed2.wulff_radius(g.nodes)
    boundary = rho[:, None] * g.nodes
    rng = np.random.default_rng(9)
    for x in rng.standard_normal((10, 2)):
        scores = boundary @ x
        j = int(np.argmax(scores))
        sl = [(j - 1) % 8192, j, (j + 1) % 8192]
        vals = scores[sl]
        denom = vals[0] - 2 * vals[1] + vals[2]
        shift = 0.5 * (vals[0] - vals[2]) / denom if denom != 0 else 0.0
        t = g.angles[j] + shift * (2 * np.pi / 8192)
        d = np.array([np.cos(t), np.sin(t)])
        refined = (perturbed2.wulff_radius(d) * d) @ x
        assert abs(max(refined, vals[1]) - perturbed2.value(x)) < 1e-6


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(1e-3, 1e3),
       cx=st.floats(-5, 5), cy=st.floats(-5, 5))
def test_homogeneity(lam, cx, cy):
    norm = EllipsoidNorm(np.diag([4.0, 1.0]))
    pert = PerturbedNorm(2, 0.1)
    x = np.array([cx + 0.01, cy + 7.0])
    for n in (norm, pert):
        assert n.value(lam * x) == pytest.approx(lam * n.value(x), rel=1e-10)
        assert n.dual_value(lam * x) == pytest.approx(
            lam * n.dual_value(x), rel=1e-8)


def test_grad_zero_homogeneous(ellipse2, perturbed2):
    rng = np.random.default_rng(4)
    x = rng.standard_normal((20, 2)) + 0.1
    for norm in (ellipse2, perturbed2):
        np.testing.assert_allclose(norm.grad(3.7 * x), norm.grad(x),
                                   atol=1e-12)


def test_make_wulff_circle(euclid2, grid512):
    w = make_wulff(euclid2, grid512)
    assert w.volume == pytest.approx(np.pi, abs=1e-12)
    assert w.perimeter == pytest.approx(2 * np.pi, abs=1e-10)
    np.testing.assert_allclose(w.rho, 1.0)


def test_make_wulff_ellipse(ellipse2, grid512):
    # semi-axes (2, 1): area pi*a*b
    w = make_wulff(ellipse2, grid512)
    assert w.volume == pytest.approx(2 * np.pi, abs=1e-10)
    assert w.identity_residual < 1e-10


def test_make_wulff_sphere(euclid3, grid2_32):
    w = make_wulff(euclid3, grid2_32)
    assert w.volume == pytest.approx(4 * np.pi / 3, abs=1e-10)
    assert w.perimeter == pytest.approx(4 * np.pi, abs=1e-9)


def test_wulff_rho_duality_identity(perturbed2, grid256):
    w = make_wulff(perturbed2, grid256)
    assert np.max(np.abs(perturbed2.dual_value(grid256.nodes) * w.rho - 1.0)) < 1e-12


def test_wulff_identity_refines(ellipse3, perturbed2):
    prev = {1: None, 2: None}
    for res in (64, 128):
        w = make_wulff(perturbed2, make_grid(1, res))
        if prev[1] is not None:
            assert w.identity_residual < prev[1]
        prev[1] = w.identity_residual
    for res in (16, 24):
        w = make_wulff(ellipse3, make_grid(2, res))
        if prev[2] is not None:
            assert w.identity_residual < prev[2]
        prev[2] = w.identity_residual


def test_norm_from_spec_roundtrip(ellipse2, perturbed2):
    for norm in (EuclideanNorm(3), ellipse2, perturbed2):
        clone = norm_from_spec(norm.spec())
        x = np.array([0.4, -1.1, 0.7][: norm.ambient_dim])
        assert clone.value(x) == pytest.approx(norm.value(x), rel=1e-12)
    with pytest.raises(ValueError, match="unknown norm family"):
        norm_from_spec({"family": "crystalline"})


def test_sectoral_harmonic_is_harmonic():
    h = SectoralHarmonic(4)
    rng = np.random.default_rng(6)
    x = rng.standard_normal((30, 2))
    lap = np.einsum("ijj->i", h.hess(x))
    assert np.max(np.abs(lap)) < 1e-12
