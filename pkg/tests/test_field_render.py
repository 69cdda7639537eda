import numpy as np
import pytest

from scatterscene.field import (
    Ray,
    RaySamples,
    composite,
    deltas_from_t,
    intersect_cube,
    render_ray,
    sample_ray,
    sample_stratified,
    transmittance,
)
from scatterscene.field.render import composite_backward


class TestSampling:
    def test_single_sample_midpoint(self):
        ray = Ray([0, 0, 0], [0, 0, 1], near=1.0, far=3.0)
        t = sample_ray(ray, 1, rng=None)
        assert t.shape == (1,)
        assert t[0] == pytest.approx(2.0)

    def test_midpoints_for_any_n(self):
        ray = Ray([0, 0, 0], [0, 0, 1], near=0.0, far=1.0)
        t = sample_ray(ray, 4, rng=None)
        np.testing.assert_allclose(t, [0.125, 0.375, 0.625, 0.875])

    def test_samples_fall_in_their_strata(self, rng):
        near, far = np.array([2.0]), np.array([6.0])
        n = 4
        t = sample_stratified(near, far, n, rng)[0]
        width = (6.0 - 2.0) / n
        for i in range(n):
            assert 2.0 + i * width <= t[i] <= 2.0 + (i + 1) * width
        assert np.all(np.diff(t) > 0)

    def test_deterministic_given_seed(self):
        near, far = np.zeros(8), np.ones(8)
        a = sample_stratified(near, far, 16, np.random.default_rng(7))
        b = sample_stratified(near, far, 16, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_ray_validation(self):
        with pytest.raises(ValueError):
            Ray([0, 0, 0], [0, 0, 2.0], 0.0, 1.0)
        with pytest.raises(ValueError):
            Ray([0, 0, 0], [0, 0, 1.0], 1.0, 1.0)


class TestTransmittance:
    def test_empty_medium(self):
        t = transmittance(np.zeros((1, 5)), np.full((1, 5), 0.3))
        np.testing.assert_array_equal(t, np.ones((1, 5)))

    def test_geometric_decay(self):
        sigma = np.full((1, 6), 2.0)
        delta = np.full((1, 6), 0.5)
        t = transmittance(sigma, delta)[0]
        expected = np.exp(-(np.arange(6)).astype(float))
        np.testing.assert_allclose(t, expected, rtol=1e-12)

    def test_matches_cumsum_oracle(self, rng):
        sigma = rng.random((3, 32)) * 4
        delta = rng.random((3, 32)) * 0.2 + 0.01
        t = transmittance(sigma, delta)
        for r in range(3):
            acc = 0.0
            for i in range(32):
                assert t[r, i] == pytest.approx(np.exp(-acc), abs=1e-12)
                acc += sigma[r, i] * delta[r, i]

    def test_telescoping_weights(self, rng):
        sigma = rng.random((4, 16)) * 3
        delta = rng.random((4, 16)) * 0.3 + 0.01
        trans = transmittance(sigma, delta)
        alpha = 1 - np.exp(-sigma * delta)
        weights = trans * alpha
        t_next = trans * np.exp(-sigma * delta)
        np.testing.assert_allclose(trans[:, 1:], t_next[:, :-1], rtol=1e-12)
        np.testing.assert_allclose(weights.sum(axis=1), 1 - t_next[:, -1], rtol=1e-12)
        assert np.all(weights.sum(axis=1) <= 1.0 + 1e-12)


class TestRenderRay:
    def test_empty_medium_is_black(self):
        s = RaySamples(
            t=np.linspace(0, 1, 8),
            deltas=np.full(8, 0.125),
            densities=np.zeros(8),
            colors=np.full((8, 3), 0.7),
        )
        np.testing.assert_array_equal(render_ray(s), np.zeros(3))

    def test_opaque_sample_returns_its_color(self):
        s = RaySamples(
            t=np.array([0.5]),
            deltas=np.array([1.0]),
            densities=np.array([1e4]),
            colors=np.array([[0.2, 0.5, 0.9]]),
        )
        np.testing.assert_allclose(render_ray(s), [0.2, 0.5, 0.9], atol=1e-12)

    def test_homogeneous_medium_matches_closed_form(self, rng):
        # sigma = 2, depth 1, constant colour: C = c (1 - e^{-2})
        sigma_v, depth = 2.0, 1.0
        c = np.array([0.8, 0.4, 0.2])
        n = 1024
        t = sample_stratified(np.array([0.0]), np.array([depth]), n, rng)[0]
        s = RaySamples(
            t=t,
            deltas=deltas_from_t(t[None, :], np.array([depth]))[0],
            densities=np.full(n, sigma_v),
            colors=np.tile(c, (n, 1)),
        )
        expected = c * (1 - np.exp(-sigma_v * depth))
        assert np.abs(render_ray(s) - expected).max() <= 1e-3

    def test_discretisation_error_decreases(self):
        sigma_v, depth = 2.0, 1.0
        c = np.array([0.8, 0.4, 0.2])
        expected = c * (1 - np.exp(-sigma_v * depth))
        errs = []
        for n in (16, 64, 256, 1024):
            # average over seeds to damp stratified-sampling noise
            errors = []
            for seed in range(5):
                rng = np.random.default_rng(seed)
                t = sample_stratified(np.array([0.0]), np.array([depth]), n, rng)[0]
                s = RaySamples(
                    t=t,
                    deltas=deltas_from_t(t[None, :], np.array([depth]))[0],
                    densities=np.full(n, sigma_v),
                    colors=np.tile(c, (n, 1)),
                )
                errors.append(np.abs(render_ray(s) - expected).max())
            errs.append(np.mean(errors))
        assert errs[0] > errs[1] > errs[2] > errs[3]


class TestCompositeBackward:
    def test_matches_finite_differences(self, rng):
        rays, n = 2, 12
        sigma = rng.random((rays, n)) * 2
        delta = rng.random((rays, n)) * 0.2 + 0.05
        colors = rng.random((rays, n, 3))
        dout = rng.standard_normal((rays, 3))

        out, cache = composite(sigma, delta, colors)
        dsigma, dcolors = composite_backward(sigma, delta, colors, cache, dout)

        eps = 1e-6
        for r in range(rays):
            for i in range(n):
                for arr, grad in ((sigma, dsigma),):
                    bumped = arr.copy()
                    bumped[r, i] += eps
                    up, _ = composite(bumped, delta, colors)
                    bumped[r, i] -= 2 * eps
                    down, _ = composite(bumped, delta, colors)
                    fd = ((up - down) / (2 * eps) * dout).sum()
                    assert grad[r, i] == pytest.approx(fd, rel=1e-4, abs=1e-8)

    def test_color_gradient_is_weights(self, rng):
        sigma = rng.random((1, 6))
        delta = np.full((1, 6), 0.2)
        colors = rng.random((1, 6, 3))
        dout = np.ones((1, 3))
        out, cache = composite(sigma, delta, colors)
        _, dcolors = composite_backward(sigma, delta, colors, cache, dout)
        np.testing.assert_allclose(dcolors[0, :, 0], cache["weights"][0], rtol=1e-12)


class TestIntersectCube:
    def test_centered_ray(self):
        near, far, hit = intersect_cube(
            np.array([[0.0, 0.0, -3.0]]), np.array([[0.0, 0.0, 1.0]]), 1.0
        )
        assert hit[0]
        assert near[0] == pytest.approx(2.0)
        assert far[0] == pytest.approx(4.0)

    def test_miss_is_flagged(self):
        near, far, hit = intersect_cube(
            np.array([[0.0, 5.0, -3.0]]), np.array([[0.0, 0.0, 1.0]]), 1.0
        )
        assert not hit[0]

    def test_origin_inside(self):
        near, far, hit = intersect_cube(
            np.array([[0.0, 0.0, 0.0]]), np.array([[0.0, 0.0, 1.0]]), 1.0
        )
        assert hit[0] and near[0] == 0.0 and far[0] == pytest.approx(1.0)
