"""Spectral calculus on the sphere: quadrature, derivatives, identities."""

import numpy as np
import pytest

from adsql.errors import EmbeddingError, GridMismatchError
from adsql.sphere import (
    OneFormField,
    ScalarField,
    SphereGrid,
    SurfaceMetric,
    SymTensorField,
    curl,
    divergence,
    gradient,
    integrate,
    laplacian,
)


def rotated_gradient_form(grid, metric, f_values):
    """omega_a = eps_a^c grad_c f for the given metric."""
    df = gradient(ScalarField(grid, f_values), metric)
    vt, vp = metric.raise_form(df)
    s = metric.sqrt_det
    return OneFormField(grid, s * vp, -s * vt)


class TestQuadrature:
    def test_weights_sum_to_sphere_area(self, grid16):
        assert abs(np.sum(grid16.weights) - 4.0 * np.pi) < 1e-12

    def test_area_of_unit_sphere(self, grid16):
        rnd = SurfaceMetric.round_sphere(grid16)
        one = ScalarField.constant(grid16, 1.0)
        assert abs(integrate(one, rnd) - 4.0 * np.pi) < 1e-12

    def test_odd_harmonic_integrates_to_zero(self, grid16):
        rnd = SurfaceMetric.round_sphere(grid16)
        x1 = grid16.unit_cartesian()[0]
        assert abs(integrate(ScalarField(grid16, x1), rnd)) < 1e-13

    def test_x1_squared(self, grid16):
        # int (x~1)^2 over S^2 = 4 pi / 3
        rnd = SurfaceMetric.round_sphere(grid16)
        x1 = grid16.unit_cartesian()[0]
        val = integrate(ScalarField(grid16, x1 * x1), rnd)
        assert abs(val - 4.0 * np.pi / 3.0) < 1e-13

    def test_orthonormality_to_half_band(self, grid16):
        basis = grid16.basis_values()
        deg = grid16.basis_degrees()
        keep = deg <= grid16.lmax // 2
        sub = basis[keep].reshape(np.sum(keep), -1)
        w = grid16.weights.ravel()
        gram = (sub * w) @ sub.T
        assert np.max(np.abs(gram - np.eye(len(sub)))) < 1e-12

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            SphereGrid(16, ntheta=10)
        with pytest.raises(ValueError):
            SphereGrid(16, nphi=20)


class TestGradient:
    def test_constant_has_zero_gradient(self, grid16):
        rnd = SurfaceMetric.round_sphere(grid16)
        df = gradient(ScalarField.constant(grid16, 3.7), rnd)
        assert df.sup_norm() < 1e-11

    def test_gradient_norm_on_radius_r_sphere(self, grid16):
        # |grad x~1|^2 = (1 - x~1^2) / r^2 nodewise
        r = 2.0
        m = SurfaceMetric.round_sphere(grid16, r)
        x1 = grid16.unit_cartesian()[0]
        df = gradient(ScalarField(grid16, x1), m)
        got = m.norm2_form(df)
        assert np.max(np.abs(got - (1.0 - x1 * x1) / r**2)) < 1e-12

    def test_finite_difference_oracle(self, grid16):
        # central differences of a band-limited closed form against d_theta
        def f(theta, phi):
            x1 = np.sin(theta) * np.cos(phi)
            x2 = np.sin(theta) * np.sin(phi)
            return x1 * x2 + np.cos(theta)

        th, ph = grid16.theta_grid, grid16.phi_grid
        h = 1e-5
        fd = (f(th + h, ph) - f(th - h, ph)) / (2.0 * h)
        spec = grid16.dtheta(f(th, ph))
        assert np.max(np.abs(fd - spec)) < 1e-8

    def test_grid_mismatch_raises(self, grid16, grid8):
        rnd8 = SurfaceMetric.round_sphere(grid8)
        f16 = ScalarField.constant(grid16, 1.0)
        with pytest.raises(GridMismatchError):
            integrate(f16, rnd8)


class TestDivergenceLaplacian:
    def test_divergence_of_gradient_l1(self, grid16):
        rnd = SurfaceMetric.round_sphere(grid16)
        x1 = grid16.unit_cartesian()[0]
        w = gradient(ScalarField(grid16, x1), rnd)
        dv = divergence(w, rnd)
        assert np.max(np.abs(dv.values + 2.0 * x1)) < 1e-11

    def test_zero_form(self, grid16):
        rnd = SurfaceMetric.round_sphere(grid16)
        assert divergence(OneFormField.zero(grid16), rnd).sup_norm() == 0.0

    def test_divergence_theorem(self, grid16, rng):
        # int div(omega) dS = 0 on a closed surface, non-round metric; omega is
        # a smooth, non-exact form f dg built from band-limited scalars
        x1 = grid16.unit_cartesian()[0]
        rnd = SurfaceMetric.round_sphere(grid16)
        m = SurfaceMetric(SymTensorField(grid16, rnd.g.tt * (1 + 0.2 * x1), rnd.g.tp,
                                         rnd.g.pp * (1 + 0.2 * x1)))
        f = grid16.random_field(rng, lcap=5)
        dg = gradient(ScalarField(grid16, grid16.random_field(rng, lcap=5)), m)
        w = OneFormField(grid16, f * dg.comp_theta, f * dg.comp_phi)
        total = integrate(divergence(w, m), m)
        assert abs(total) < 1e-10

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_laplacian_eigenvalues(self, grid16, ell):
        r = 1.7
        m = SurfaceMetric.round_sphere(grid16, r)
        x1, x2, x3 = grid16.unit_cartesian()
        f = {1: x3, 2: x1 * x2, 3: x3 * (5 * x3**2 - 3) / 2.0}[ell]
        lap = laplacian(ScalarField(grid16, f), m)
        lam = -ell * (ell + 1) / r**2
        assert np.max(np.abs(lap.values - lam * f)) < 1e-10

    def test_adjointness(self, grid16, rng):
        # int f div(w) = -int <grad f, w> for a non-round metric
        x1, x2, x3 = grid16.unit_cartesian()
        rnd = SurfaceMetric.round_sphere(grid16)
        m = SurfaceMetric(SymTensorField(grid16, rnd.g.tt * (1 + 0.15 * x2), rnd.g.tp,
                                         rnd.g.pp * (1 + 0.15 * x2)))
        f = ScalarField(grid16, grid16.random_field(rng, lcap=6))
        w = gradient(ScalarField(grid16, grid16.random_field(rng, lcap=6)), m)
        lhs = integrate(divergence(w, m) * f, m)
        df = gradient(f, m)
        rhs = -integrate(ScalarField(grid16, m.inner(df, w)), m)
        assert abs(lhs - rhs) < 1e-10


class TestCurl:
    def test_curl_of_exact_form(self, grid16, rng):
        rnd = SurfaceMetric.round_sphere(grid16)
        w = gradient(ScalarField(grid16, grid16.random_field(rng, lcap=8)), rnd)
        assert curl(w, rnd).sup_norm() < 1e-11

    def test_curl_of_rotated_gradient(self, grid16):
        # omega_a = eps_a^c grad_c x~1 has curl = +2 x~1 with eps_{tp} = +sqrt(det):
        # eps^{ab} grad_a (eps_b^c grad_c f) = -Delta f = +2 x~1 for l = 1.
        rnd = SurfaceMetric.round_sphere(grid16)
        x1 = grid16.unit_cartesian()[0]
        om = rotated_gradient_form(grid16, rnd, x1)
        got = curl(om, rnd)
        assert np.max(np.abs(got.values - 2.0 * x1)) < 1e-11

    def test_curl_of_zero(self, grid16):
        rnd = SurfaceMetric.round_sphere(grid16)
        assert curl(OneFormField.zero(grid16), rnd).sup_norm() == 0.0


class TestSpectralConvergence:
    def test_laplacian_residual_drops(self):
        # analytic, non-band-limited field: for f = exp(a cos theta) on the
        # unit sphere, Delta f = (-2 a mu + a^2 (1 - mu^2)) f; the spectral
        # residual must drop by >= 100x from lmax 8 to 16
        res = {}
        a = 2.0
        for lmax in (8, 16):
            g = SphereGrid(lmax)
            mu = np.cos(g.theta_grid)
            f = np.exp(a * mu)
            rnd = SurfaceMetric.round_sphere(g)
            lap = laplacian(ScalarField(g, f), rnd)
            exact = (-2.0 * a * mu + a * a * (1.0 - mu * mu)) * f
            res[lmax] = np.max(np.abs(lap.values - exact))
        assert res[8] / max(res[16], 1e-16) > 100.0


class TestFieldTypes:
    def test_symmetric_by_construction(self, grid16):
        t = SymTensorField.zero(grid16)
        mat = t.matrix()
        assert np.array_equal(mat[..., 0, 1], mat[..., 1, 0])

    def test_non_riemannian_rejected(self, grid16):
        bad = SymTensorField(grid16, -np.ones(grid16.shape), np.zeros(grid16.shape),
                             np.ones(grid16.shape))
        with pytest.raises(EmbeddingError):
            SurfaceMetric(bad)

    def test_metric_inverse_identity(self, grid16, rng):
        x1 = grid16.unit_cartesian()[0]
        rnd = SurfaceMetric.round_sphere(grid16, 1.3)
        m = SurfaceMetric(SymTensorField(grid16, rnd.g.tt * (1 + 0.3 * x1),
                                         0.05 * rnd.g.pp, rnd.g.pp))
        assert m.inverse_identity_error() < 1e-12

    def test_nonfinite_rejected(self, grid16):
        bad = np.ones(grid16.shape)
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            ScalarField(grid16, bad)

    def test_values_immutable(self, grid16):
        f = ScalarField.constant(grid16, 1.0)
        with pytest.raises(ValueError):
            f.values[0, 0] = 2.0

    def test_scalar_roundtrip(self, grid16, rng):
        f = ScalarField(grid16, grid16.random_field(rng))
        back = ScalarField.from_json_dict(f.to_json_dict(), grid16)
        assert np.max(np.abs(back.values - f.values)) < 1e-15

    def test_one_form_roundtrip_fresh_grid(self, grid16, rng):
        w = OneFormField(grid16, grid16.random_field(rng), grid16.random_field(rng))
        back = OneFormField.from_json_dict(w.to_json_dict())
        assert back.grid.lmax == grid16.lmax
        assert np.max(np.abs(back.comp_phi - w.comp_phi)) < 1e-15

    def test_synthesize_analyze_roundtrip(self, grid16, rng):
        c = rng.standard_normal(grid16.n_modes)
        v = grid16.synthesize(c)
        assert np.max(np.abs(grid16.analyze(v) - c)) < 1e-12
