import numpy as np
import pytest

from hasod.errors import FitFailure, MeanQueryOnVarianceOnlyModel
from hasod.gp import (
    GPModel,
    KernelParams,
    condition_on_points,
    gp_fit,
    kernel_matrix,
    make_model,
    matern52_kernel,
)
from hasod.numkit import RandomStream

UNIT = KernelParams(sigma_f2=1.0, ell=1.0, sigma_n2=0.0)


class TestKernel:
    def test_coincident_points(self):
        p = KernelParams(sigma_f2=3.5, ell=0.7, sigma_n2=0.0)
        assert abs(matern52_kernel(np.zeros(3), np.zeros(3), p) - 3.5) < 1e-12

    def test_unit_value(self):
        # (1 + sqrt5 + 5/3) * exp(-sqrt5) to 10 digits
        v = matern52_kernel(np.array([0.0]), np.array([1.0]), UNIT)
        assert abs(v - 0.5239941088) < 1e-9

    def test_far_decay(self):
        v = matern52_kernel(np.array([0.0]), np.array([100.0]), UNIT)
        assert v < 1e-30

    def test_closed_form(self):
        r = 0.37
        s = np.sqrt(5) * r / 0.9
        expected = 2.0 * (1 + s + s * s / 3) * np.exp(-s)
        p = KernelParams(sigma_f2=2.0, ell=0.9, sigma_n2=0.0)
        assert abs(matern52_kernel(np.zeros(1), np.array([r]), p) - expected) < 1e-12

    def test_matrix_symmetric_psd(self):
        for seed in range(5):
            X = RandomStream(seed).uniforms(30).reshape(10, 3) * 2 - 1
            K = kernel_matrix(X, X, UNIT)
            assert np.allclose(K, K.T, atol=1e-12)
            assert np.min(np.linalg.eigvalsh(K)) >= -1e-8


class TestMakeModel:
    def test_chol_reproduces_kernel(self):
        X = RandomStream(3).uniforms(24).reshape(8, 3)
        y = RandomStream(4).normals(8)
        p = KernelParams(1.0, 0.5, 0.1)
        m = make_model(X, y, p)
        K = kernel_matrix(X, X, p) + p.sigma_n2 * np.eye(8)
        assert np.allclose(m.chol @ m.chol.T, K, atol=1e-8)

    def test_mean_linear_in_y(self):
        X = RandomStream(5).uniforms(20).reshape(10, 2)
        y1 = RandomStream(6).normals(10)
        y2 = RandomStream(7).normals(10)
        p = KernelParams(1.0, 0.8, 0.05)
        q = RandomStream(8).uniforms(10).reshape(5, 2)
        m1, _ = make_model(X, y1, p).predict_batch(q)
        m2, _ = make_model(X, y2, p).predict_batch(q)
        m12, _ = make_model(X, y1 + y2, p).predict_batch(q)
        assert np.allclose(m12, m1 + m2, atol=1e-8)


class TestFit:
    def test_constant_response(self):
        X = RandomStream(1).uniforms(30).reshape(10, 3)
        model = gp_fit(X, np.full(10, 4.2), RandomStream(2))
        mean, _ = model.predict(np.array([0.5, -0.3, 0.9]))
        assert abs(mean - 4.2) < 1e-6

    def test_noise_recovery_smooth_1d(self):
        stream = RandomStream(77)
        X = np.sort(stream.uniforms(30)).reshape(30, 1) * 2 - 1
        y = np.sin(2 * X[:, 0]) + 0.01 * stream.normals(30)
        model = gp_fit(X, y, RandomStream(78))
        assert 1e-6 <= model.params.sigma_n2 <= 0.1

    def test_determinism(self):
        stream_data = RandomStream(9)
        X = stream_data.uniforms(24).reshape(12, 2)
        y = stream_data.normals(12)
        a = gp_fit(X, y, RandomStream(10))
        b = gp_fit(X, y, RandomStream(10))
        assert a.params == b.params

    def test_params_within_bounds(self):
        stream = RandomStream(12)
        X = stream.uniforms(30).reshape(15, 2)
        y = 3 * X[:, 0] + stream.normals(15)
        model = gp_fit(X, y, RandomStream(13))
        for v in (model.params.sigma_f2, model.params.ell, model.params.sigma_n2):
            assert 1e-4 * (1 - 1e-9) <= v <= 1e4 * (1 + 1e-9)

    def test_replicated_rows_ok(self):
        X = np.vstack([np.zeros((3, 2)), np.ones((3, 2))])
        y = np.array([1.0, 1.1, 0.9, 5.0, 5.1, 4.9])
        model = gp_fit(X, y, RandomStream(14))
        mean, _ = model.predict(np.ones(2))
        assert abs(mean - 5.0) < 0.5

    def test_too_few_points(self):
        with pytest.raises(FitFailure):
            gp_fit(np.zeros((2, 2)), np.zeros(2), RandomStream(0))


class TestPredict:
    def _smooth_model(self):
        stream = RandomStream(21)
        X = stream.uniforms(40).reshape(20, 2) * 2 - 1
        y = np.sin(X[:, 0]) + np.cos(X[:, 1])
        return make_model(X, y, KernelParams(1.0, 1.0, 1e-6)), X, y

    def test_near_interpolation(self):
        model, X, y = self._smooth_model()
        for i in range(5):
            mean, _ = model.predict(X[i])
            assert abs(mean - y[i]) < 1e-3

    def test_prior_reversion_far_away(self):
        model, X, y = self._smooth_model()
        far = np.array([500.0, 500.0])
        mean, var = model.predict(far)
        assert abs(mean - y.mean()) < 1e-6
        assert abs(var - model.params.sigma_f2) < 1e-6

    def test_variance_lower_at_training_point(self):
        model, X, _ = self._smooth_model()
        corners = np.array(
            [[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float
        )
        dists = np.min(
            np.linalg.norm(X[:, None, :] - corners[None], axis=2), axis=0
        )
        far_corner = corners[np.argmax(dists)]
        assert model.variance(X[0]) < model.variance(far_corner)

    def test_variance_clamped(self):
        model, X, _ = self._smooth_model()
        grid = RandomStream(22).uniforms(40).reshape(20, 2) * 2 - 1
        var = model.variance_batch(grid)
        assert np.all(var >= 0.0)
        assert np.all(var <= model.params.sigma_f2 + model.params.sigma_n2 + 1e-12)


class TestConditioning:
    def _model(self):
        stream = RandomStream(33)
        X = stream.uniforms(24).reshape(12, 2) * 2 - 1
        y = X[:, 0] ** 2 + stream.normals(12) * 0.1
        return make_model(X, y, KernelParams(1.0, 0.8, 0.01))

    def test_empty_conditioning_unchanged(self):
        model = self._model()
        cond = condition_on_points(model, np.zeros((0, 2)))
        q = np.array([0.3, -0.4])
        assert abs(cond.variance(q) - model.variance(q)) < 1e-12

    def test_strict_decrease(self):
        model = self._model()
        x_star = np.array([0.2, 0.2])
        new = np.array([[0.25, 0.15]])
        cond = condition_on_points(model, new)
        assert cond.variance(x_star) < model.variance(x_star)

    def test_never_increases(self):
        model = self._model()
        pts = RandomStream(34).uniforms(10).reshape(5, 2) * 2 - 1
        cond = condition_on_points(model, pts)
        grid = RandomStream(35).uniforms(30).reshape(15, 2) * 2 - 1
        assert np.all(cond.variance_batch(grid) <= model.variance_batch(grid) + 1e-9)

    def test_repeat_conditioning_nearly_idempotent(self):
        model = self._model()
        p = np.array([[0.1, 0.1]])
        once = condition_on_points(model, p)
        twice = condition_on_points(once, p)
        q = np.array([0.5, -0.5])
        # the second copy only acts through the sigma_n2 replicate effect
        assert twice.variance(q) <= once.variance(q) + 1e-12
        assert abs(twice.variance(q) - once.variance(q)) < model.params.sigma_n2 + 1e-8

    def test_mean_query_forbidden(self):
        model = self._model()
        cond = condition_on_points(model, np.array([[0.0, 0.0]]))
        assert cond.variance_only
        with pytest.raises(MeanQueryOnVarianceOnlyModel):
            cond.predict(np.zeros(2))

    def test_fitted_model_not_flagged(self):
        model = self._model()
        assert isinstance(model, GPModel)
        assert not model.variance_only
