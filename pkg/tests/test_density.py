"""Exponential-tilt dose density: normalization, closed forms, sampling."""

import numpy as np
import pytest
from scipy import stats

from dosepref.density import (conditional_moments, density_at, grid_masses,
                              sample_dose, sample_doses_rows)
from dosepref.model import DoseGrid

from conftest import quadratic_surface, random_composite


def _simple_composite():
    # composite reduces to Q(x, a) = c(x) a - 2 a^2 by making both
    # surfaces identical, so the weight drops out
    surf = quadratic_surface(0.0, -0.8, -2.0, (2.6, -3.4))
    from dosepref.model import CompositeSurface, PreferenceModel
    pref = PreferenceModel(theta=np.zeros(3), weight_covariate_indices=(0, 1))
    return CompositeSurface(q_y=surf, q_z=surf, pref=pref)


class TestNormalization:
    def test_masses_sum_to_one(self, rng, wide_grid):
        cs = random_composite(rng)
        for _ in range(20):
            x = rng.normal(0, 0.5, size=2)
            cd = density_at(cs, beta=rng.uniform(0.05, 2.0), x=x, grid=wide_grid)
            assert abs(np.dot(wide_grid.quad_weights, cd.density) - 1.0) < 1e-10

    def test_beta_zero_is_uniform(self, wide_grid):
        cs = _simple_composite()
        cd = density_at(cs, beta=0.0, x=np.array([0.5, -0.5]), grid=wide_grid)
        np.testing.assert_allclose(cd.density, 1.0 / 12.0, atol=1e-12)

    def test_shift_invariance(self, wide_grid):
        # adding a dose-free constant to the index must not move the density
        cs = _simple_composite()
        x = np.array([0.3, -0.3])
        base = density_at(cs, 0.4, x, wide_grid).density
        shifted = quadratic_surface(57.0, -0.8, -2.0, (2.6, -3.4))
        from dosepref.model import CompositeSurface, PreferenceModel
        cs2 = CompositeSurface(q_y=shifted, q_z=shifted,
                               pref=PreferenceModel(np.zeros(3), (0, 1)))
        np.testing.assert_allclose(density_at(cs2, 0.4, x, wide_grid).density,
                                   base, atol=1e-12)


class TestTruncatedNormalForm:
    # Q = c a - 2 a^2 tilted by beta is N(c/4, 1/(4 beta)) truncated to the grid
    def test_pointwise_match(self):
        grid = DoseGrid(-6.0, 6.0, 2001)
        cs = _simple_composite()
        x = np.array([0.3, -0.3])
        c = 2.6 * 0.3 - 3.4 * (-0.3) - 0.8
        for beta in (0.15, 0.25, 0.6):
            cd = density_at(cs, beta, x, grid)
            sd = 1.0 / np.sqrt(4.0 * beta)
            ref = stats.truncnorm.pdf(grid.points, (-6 - c / 4) / sd,
                                      (6 - c / 4) / sd, loc=c / 4, scale=sd)
            np.testing.assert_allclose(cd.density, ref, rtol=1e-6)

    def test_moments(self):
        grid = DoseGrid(-6.0, 6.0, 2001)
        cs = _simple_composite()
        x = np.array([0.3, -0.3])
        c = 2.6 * 0.3 - 3.4 * (-0.3) - 0.8
        cd = density_at(cs, 0.25, x, grid)
        means, cov = conditional_moments(cd, [cs.on_grid(x[None, :], grid.points)[0]])
        # grid values of Q feed the moment routine; cross-check mean dose
        # and variance against the untruncated normal (truncation at 6 sd
        # past the mean is negligible here)
        mean_dose = np.dot(grid.quad_weights, grid.points * cd.density)
        var_dose = np.dot(grid.quad_weights,
                          (grid.points - mean_dose) ** 2 * cd.density)
        assert abs(mean_dose - c / 4) < 1e-6
        np.testing.assert_allclose(var_dose, 1.0 / (4 * 0.25), rtol=1e-4)
        assert cov.shape == (1, 1) and means.shape == (1,)

    def test_uniform_variance(self, wide_grid):
        cs = _simple_composite()
        cd = density_at(cs, 0.0, np.zeros(2), wide_grid)
        mean_dose = np.dot(wide_grid.quad_weights, wide_grid.points * cd.density)
        var_dose = np.dot(wide_grid.quad_weights,
                          wide_grid.points ** 2 * cd.density) - mean_dose**2
        assert abs(mean_dose) < 1e-10
        # uniform on [-6, 6]: var = 12^2 / 12 = 12; relative form 1/3 of half-range^2
        np.testing.assert_allclose(var_dose, 12.0, rtol=1e-4)


class TestSampling:
    def test_inverse_cdf_endpoints(self, wide_grid):
        cs = _simple_composite()
        cd = density_at(cs, 0.3, np.array([0.3, -0.3]), wide_grid)
        assert sample_dose(cd, 0.0) == pytest.approx(-6.0)
        assert sample_dose(cd, 1.0 - 1e-12) == pytest.approx(6.0, abs=1e-3)
        a = sample_dose(cd, 0.5)
        assert -6.0 < a < 6.0

    def test_ks_against_truncated_normal(self, wide_grid):
        cs = _simple_composite()
        x = np.array([0.3, -0.3])
        c = 2.6 * 0.3 - 3.4 * (-0.3) - 0.8
        beta = 0.25
        cd = density_at(cs, beta, x, wide_grid)
        u = np.random.default_rng(99).uniform(size=100_000)
        draws = np.array([sample_dose(cd, ui) for ui in u])
        sd = 1.0 / np.sqrt(4 * beta)
        res = stats.kstest(draws, stats.truncnorm(
            (-6 - c / 4) / sd, (6 - c / 4) / sd, loc=c / 4, scale=sd).cdf)
        assert res.statistic < 0.01

    def test_sample_moments_within_3_se(self, wide_grid):
        cs = _simple_composite()
        x = np.array([0.1, 0.4])
        cd = density_at(cs, 0.25, x, wide_grid)
        n = 100_000
        u = np.random.default_rng(5).uniform(size=n)
        draws = np.array([sample_dose(cd, ui) for ui in u])
        mean_dose = np.dot(wide_grid.quad_weights, wide_grid.points * cd.density)
        var_dose = np.dot(wide_grid.quad_weights,
                          (wide_grid.points - mean_dose) ** 2 * cd.density)
        assert abs(draws.mean() - mean_dose) < 3 * np.sqrt(var_dose / n)
        kurt_excess = 3 * var_dose**2  # normal 4th central moment
        se_var = np.sqrt((kurt_excess - var_dose**2) / n)
        assert abs(draws.var() - var_dose) < 3 * se_var

    def test_vectorized_sampler_matches_scalar(self, rng, wide_grid):
        cs = random_composite(rng)
        X = rng.normal(0, 0.5, size=(40, 2))
        log_rows = 0.3 * cs.on_grid(X, wide_grid.points)
        u = rng.uniform(size=40)
        vec = sample_doses_rows(log_rows, wide_grid, u)
        for i, x in enumerate(X):
            cd = density_at(cs, 0.3, x, wide_grid)
            assert vec[i] == pytest.approx(sample_dose(cd, u[i]), abs=1e-10)


class TestPerturbationStability:
    def test_surface_error_bound(self, rng, wide_grid):
        # a uniform error eps on the fitted surface moves the tilted density
        # by at most a factor exp(2 beta eps) - 1 <= 4 beta eps for small eps;
        # the 4x form is the working bound used throughout
        cs = random_composite(rng)
        beta = 0.5
        for eps in (1e-3, 1e-2):
            for _ in range(10):
                x = rng.normal(0, 0.5, size=2)
                q = cs.on_grid(x[None, :], wide_grid.points)[0]
                bump = rng.uniform(-eps, eps, size=q.size)
                f0 = grid_masses((beta * q)[None, :], wide_grid.quad_weights)[0] / wide_grid.quad_weights
                f1 = grid_masses((beta * (q + bump))[None, :], wide_grid.quad_weights)[0] / wide_grid.quad_weights
                bound = 4.0 * (np.exp(beta * eps) - 1.0) * f0
                assert np.all(np.abs(f1 - f0) <= bound + 1e-15)

    def test_grid_refinement_converges(self):
        # masses integrated against a smooth function converge at O(step^2)
        cs = _simple_composite()
        x = np.array([0.3, -0.3])
        vals = []
        for m in (61, 121, 241, 481):
            grid = DoseGrid(-6.0, 6.0, m)
            cd = density_at(cs, 0.25, x, grid)
            vals.append(np.dot(grid.quad_weights, grid.points ** 2 * cd.density))
        errs = np.abs(np.array(vals[:-1]) - vals[-1])
        assert errs[1] < errs[0] / 3
        assert errs[2] < errs[1] / 3
