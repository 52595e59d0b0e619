import numpy as np
import pytest
from hypothesis import given, strategies as st

from dosepref.model import (CompositeSurface, DoseGrid, PreferenceModel, Sample,
                            composite_eval, contrast_eval, expit, logit, weight,
                            weight_grad)

from conftest import quadratic_surface


class TestExpit:
    def test_zero(self):
        assert expit(0.0) == 0.5

    def test_minus_one(self):
        assert expit(-1.0) == pytest.approx(1.0 / (1.0 + np.e), rel=1e-12)

    @pytest.mark.parametrize("u", [-3.0, 0.7, 12.0])
    def test_reflection(self, u):
        assert expit(u) == pytest.approx(1.0 - expit(-u), abs=1e-15)

    def test_no_overflow_at_extremes(self):
        assert expit(700.0) == 1.0
        assert expit(-700.0) == pytest.approx(0.0, abs=1e-300)
        assert np.isfinite(expit(np.array([-750.0, 750.0]))).all()

    @given(st.floats(min_value=-700, max_value=700))
    def test_in_open_unit_interval_and_monotone_bounds(self, u):
        w = expit(u)
        assert 0.0 <= w <= 1.0
        if abs(u) < 30:
            assert 0.0 < w < 1.0

    @pytest.mark.parametrize("w", [0.1 * k for k in range(1, 10)])
    def test_logit_roundtrip(self, w):
        assert expit(logit(w)) == pytest.approx(w, abs=1e-12)


class TestWeight:
    def test_intercept_only_zero(self):
        pref = PreferenceModel([0.0])
        assert weight(pref, [3.1, -2.0]) == 0.5

    def test_two_covariates(self):
        # theta from the patient-specific simulation setting
        pref = PreferenceModel([0.0, -2.0, 2.0], (0, 1))
        assert weight(pref, [0.5, 0.0]) == pytest.approx(expit(-1.0), rel=1e-10)

    def test_intercept_only_fixed_omega(self):
        pref = PreferenceModel([logit(0.3)])
        for x in ([0.0, 0.0], [5.0, -5.0]):
            assert weight(pref, x) == pytest.approx(0.3, rel=1e-12)

    def test_bad_index(self):
        pref = PreferenceModel([0.0, 1.0], (5,))
        with pytest.raises(IndexError):
            weight(pref, [1.0, 2.0])


class TestWeightGrad:
    def test_at_zero(self):
        pref = PreferenceModel([0.0])
        np.testing.assert_allclose(weight_grad(pref, [1.0]), [0.25])

    def test_matches_finite_differences(self, rng):
        h = 1e-6
        for _ in range(100):
            theta = rng.normal(0, 1.5, size=3)
            x = rng.normal(0, 1, size=2)
            pref = PreferenceModel(theta, (0, 1))
            g = weight_grad(pref, x)
            fd = np.empty(3)
            for k in range(3):
                e = np.zeros(3)
                e[k] = h
                fd[k] = (weight(pref.with_theta(theta + e), x)
                         - weight(pref.with_theta(theta - e), x)) / (2 * h)
            np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-9)

    def test_saturation(self):
        pref = PreferenceModel([500.0, 100.0], (0,))
        np.testing.assert_allclose(weight_grad(pref, [1.0, 0.0]), 0.0, atol=1e-100)


def _composite(w):
    pref = PreferenceModel([logit(w)] if 0 < w < 1 else [700.0 if w == 1 else -700.0])
    q_y = quadratic_surface(slope=2.0, x_slopes=(4.0, -2.0))
    q_z = quadratic_surface(slope=-2.0, x_slopes=(2.0, -4.0))
    return CompositeSurface(q_y, q_z, pref)


class TestComposite:
    def test_degenerate_weight_one(self):
        cs = _composite(1.0)
        x, a = np.array([0.4, -0.2]), 0.7
        assert composite_eval(cs, x, a) == pytest.approx(cs.q_y(x, a), rel=1e-12)

    def test_midpoint(self):
        pref = PreferenceModel([0.0])
        q_y = quadratic_surface(const=3.0, slope=0.0, curv=0.0)
        q_z = quadratic_surface(const=1.0, slope=0.0, curv=0.0)
        cs = CompositeSurface(q_y, q_z, pref)
        assert composite_eval(cs, [0.0, 0.0], 0.5) == pytest.approx(2.0)

    def test_weighted_sum_oracle(self, rng):
        cs = _composite(0.3)
        for _ in range(100):
            x = rng.normal(size=2)
            a = rng.uniform(-3, 3)
            brute = 0.3 * cs.q_y(x, a) + 0.7 * cs.q_z(x, a)
            assert composite_eval(cs, x, a) == pytest.approx(brute, rel=1e-10, abs=1e-10)

    def test_affine_in_weight(self, rng):
        # composite = Q_Z + w * (Q_Y - Q_Z)
        for _ in range(50):
            w = rng.uniform(0.05, 0.95)
            cs = _composite(w)
            x = rng.normal(size=2)
            a = rng.uniform(-3, 3)
            expected = cs.q_z(x, a) + w * contrast_eval(cs, x, a)
            assert composite_eval(cs, x, a) == pytest.approx(expected, abs=1e-12 * (1 + abs(expected)))


class TestContrast:
    def test_identical_surfaces(self):
        q = quadratic_surface(slope=1.0)
        cs = CompositeSurface(q, q, PreferenceModel([0.3]))
        assert contrast_eval(cs, [1.0, 1.0], 0.5) == 0.0

    def test_generative_truth_at_origin(self):
        # both outcome models share the -2a^2 term, so R(x, a) is linear in a
        cs = _composite(0.3)
        x = np.zeros(2)
        for a in (0.0, 0.5, -1.2):
            assert contrast_eval(cs, x, a) == pytest.approx(4.0 * a, rel=1e-12, abs=1e-12)

    def test_antisymmetry(self, rng):
        cs = _composite(0.3)
        swapped = CompositeSurface(cs.q_z, cs.q_y, cs.pref)
        x = rng.normal(size=2)
        assert contrast_eval(cs, x, 0.8) == pytest.approx(-contrast_eval(swapped, x, 0.8))


class TestTypes:
    def test_sample_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Sample(np.array([np.nan, 0.0]), 0.0, 0.0, 0.0)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            DoseGrid(1.0, 1.0, 11)
        with pytest.raises(ValueError):
            DoseGrid(0.0, 1.0, 2)

    def test_grid_points(self):
        g = DoseGrid(-1.0, 1.0, 5)
        np.testing.assert_allclose(g.points, [-1.0, -0.5, 0.0, 0.5, 1.0])
        assert g.step == 0.5
        assert g.quad_weights.sum() == pytest.approx(2.0)

    def test_pref_distinct_indices(self):
        with pytest.raises(ValueError):
            PreferenceModel([0.0, 1.0, 2.0], (0, 0))
