import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from geodspace import (
    GeodesicState,
    christoffel_at,
    exp_map,
    geodesic_residual,
    integrate,
    log_map,
    make_space,
    parallel_transport,
)
from geodspace.connection import Trajectory
from geodspace.errors import InsufficientSamples, OutOfChart
from geodspace.models import sphere_tangent_to_stereo, stereo_to_sphere

FROZEN = oracles.frozen()

ALL_SPACES = ["euclidean2", "euclidean3", "pseudoeuclidean3", "klein2", "klein3", "circle",
              "cylinder", "flat_torus", "flat_strip", "flat_mobius", "sphere2",
              "punctured_sphere", "projective_plane", "punctured_projective_plane",
              "product(euclidean1,cylinder)", "product(sphere2,euclidean1)"]


def random_state(space, rng, scale=0.8):
    while True:
        p = rng.uniform(-scale, scale, space.dim)
        if space.in_chart(p):
            break
    v = rng.normal(size=space.dim)
    v /= space.norm(p, v) if space.has_metric else np.linalg.norm(v)
    return GeodesicState(p, v)


class TestChristoffel:
    def test_euclidean_zero(self):
        assert not np.any(christoffel_at(make_space("euclidean2"), [0.3, -1.2]))

    def test_klein_origin_matches_oracle(self):
        got = christoffel_at(make_space("klein2"), [0.0, 0.0])
        np.testing.assert_allclose(got, FROZEN["klein_christoffel_origin"], atol=0)

    def test_klein_half(self):
        got = christoffel_at(make_space("klein2"), [0.5, 0.0])
        np.testing.assert_allclose(got, FROZEN["klein_christoffel_half"], rtol=1e-14)
        assert got[0, 0, 0] == pytest.approx(4 / 3)
        assert got[1, 0, 1] == pytest.approx(2 / 3)
        assert got[1, 1, 0] == pytest.approx(2 / 3)
        assert got[0, 1, 1] == 0.0

    def test_stereo_sphere_matches_symbolic(self):
        got = christoffel_at(make_space("sphere2"), [0.3, -0.4])
        np.testing.assert_allclose(got, FROZEN["stereo_christoffel_sample"], rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("model,name", [("klein", "klein2"), ("stereo", "sphere2")])
    def test_live_symbolic_oracle(self, model, name, rng):
        space = make_space(name)
        for _ in range(20):
            p = rng.uniform(-0.6, 0.6, 2)
            np.testing.assert_allclose(christoffel_at(space, p), oracles.christoffel(model, p),
                                       rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("name", ALL_SPACES)
    def test_lower_index_symmetry(self, name, rng):
        space = make_space(name)
        for _ in range(1000 // len(ALL_SPACES) + 1):
            p = random_state(space, rng).point
            G = christoffel_at(space, p)
            assert np.array_equal(G, np.swapaxes(G, 1, 2))

    @pytest.mark.parametrize("name", ["euclidean3", "cylinder", "flat_torus", "flat_mobius", "circle"])
    def test_flat_spaces_vanish(self, name, rng):
        space = make_space(name)
        assert space.is_flat
        assert not np.any(christoffel_at(space, random_state(space, rng).point))

    @pytest.mark.parametrize("name", ["klein2", "sphere2", "euclidean3", "product(sphere2,euclidean1)"])
    def test_metric_positive_definite(self, name, rng):
        space = make_space(name)
        for _ in range(20):
            g = space.metric(random_state(space, rng).point)
            np.testing.assert_allclose(g, g.T)
            assert np.linalg.eigvalsh(g).min() > 0

    def test_out_of_chart(self):
        with pytest.raises(OutOfChart):
            christoffel_at(make_space("klein2"), [1.0, 0.0])


class TestIntegrate:
    def test_euclidean_unit_segment(self):
        tr = integrate(make_space("euclidean2"), GeodesicState([0, 0], [1, 0]), 1.0)
        np.testing.assert_allclose(tr.final.point, [1, 0], atol=1e-12)
        np.testing.assert_allclose(tr.final.velocity, [1, 0], atol=1e-12)
        assert np.all(np.diff(tr.t) > 0)

    def test_euclidean_long_segment(self):
        p, v = np.array([0.3, -0.2]), np.array([0.7, 1.1])
        tr = integrate(make_space("euclidean2"), GeodesicState(p, v), 10.0)
        assert np.linalg.norm(tr.final.point - (p + 10 * v)) < 1e-9

    def test_sphere_great_circle_period(self):
        space = make_space("sphere2")
        P, V = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
        x0 = np.array([1.0, 0.0])
        v0 = sphere_tangent_to_stereo(P, V)
        tr = integrate(space, GeodesicState(x0, v0), FROZEN["great_circle_period"], 1e-11)
        np.testing.assert_allclose(tr.final.point, x0, atol=1e-6)
        np.testing.assert_allclose(tr.final.velocity, v0, atol=1e-6)
        for t in np.linspace(0, 2 * math.pi, 13):
            np.testing.assert_allclose(stereo_to_sphere(tr.at(t).point),
                                       oracles.great_circle(P, V, t), atol=1e-7)

    def test_klein_stays_on_chord(self):
        space = make_space("klein2")
        tr = integrate(space, GeodesicState([0, 0], [1, 0]), 8.0)
        assert not tr.truncated
        assert np.all(np.abs(tr.points[:, 1]) == 0)
        assert np.all(np.abs(tr.points[:, 0]) < 1)
        assert np.all(np.diff(tr.points[:, 0]) >= -1e-12)
        assert tr.at(3.0).point[0] == pytest.approx(FROZEN["klein_chart_radius_t3"], abs=1e-8)

    def test_cylinder_wraps(self):
        tr = integrate(make_space("cylinder"), GeodesicState([0, 0], [0, 1]), 7.0)
        assert tr.final.point[1] == pytest.approx(7.0 - 2 * math.pi, abs=1e-9)
        assert np.all((tr.points[:, 1] >= 0) & (tr.points[:, 1] < 2 * math.pi))

    def test_mobius_flips_on_crossing(self):
        tr = integrate(make_space("flat_mobius"), GeodesicState([0.5, 0.2], [1, 0]), 1.0)
        np.testing.assert_allclose(tr.final.point, [0.5, -0.2], atol=1e-12)

    def test_backward(self):
        tr = integrate(make_space("euclidean2"), GeodesicState([0, 0], [1, 2]), -2.0)
        assert np.all(np.diff(tr.t) > 0)
        np.testing.assert_allclose(tr.final.point, [-2, -4], atol=1e-12)

    def test_klein_truncates_at_boundary(self):
        # a straight-line flow that is not a geodesic is not needed: the strip is bounded in y
        tr = integrate(make_space("flat_strip"), GeodesicState([0, 0], [0, 1]), 5.0)
        assert tr.truncated
        assert tr.t_end == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("c", [0.5, 2.0, -1.0])
    @pytest.mark.parametrize("name", ["klein2", "sphere2", "euclidean3", "flat_torus"])
    def test_affine_reparametrization(self, name, c, rng):
        space = make_space(name)
        s = random_state(space, rng, 0.5)
        t = 0.7
        a = integrate(space, GeodesicState(s.point, c * s.velocity), t, 1e-11).final.point
        b = integrate(space, s, c * t, 1e-11).final
        q, _ = space.nearest(a, b.point)
        assert np.linalg.norm(q - a) < 1e-8

    @pytest.mark.parametrize("name", ["klein2", "sphere2", "projective_plane", "product(sphere2,euclidean1)"])
    def test_speed_conserved(self, name, rng):
        space = make_space(name)
        s = random_state(space, rng, 0.5)
        tr = integrate(space, s, 4.0, 1e-10, max_step=0.2)
        speeds = [space.inner(p, v, v) for p, v in zip(tr.points, tr.velocities)]
        assert np.ptp(speeds) < 1e-6

    def test_product_factors_are_geodesics(self, rng):
        space = make_space("product(sphere2,klein2)")
        s1, s2 = make_space("sphere2"), make_space("klein2")
        s = random_state(space, rng, 0.4)
        tr = integrate(space, s, 1.5, 1e-11)
        a = integrate(s1, GeodesicState(s.point[:2], s.velocity[:2]), 1.5, 1e-11).final.point
        b = integrate(s2, GeodesicState(s.point[2:], s.velocity[2:]), 1.5, 1e-11).final.point
        np.testing.assert_allclose(tr.final.point, np.concatenate([a, b]), atol=1e-7)


class TestResidual:
    def test_euclidean_line(self):
        space = make_space("euclidean2")
        tr = integrate(space, GeodesicState([0, 0], [1, 0.5]), 1.0, max_step=0.01)
        for t in tr.t[1:-1]:
            assert np.linalg.norm(geodesic_residual(space, tr, t)) < 1e-8

    def test_klein_chord(self):
        space = make_space("klein2")
        tr = integrate(space, GeodesicState([-0.3, 0.1], [0.4, 0.2]), 2.0, 1e-11, max_step=0.01)
        worst = max(np.linalg.norm(geodesic_residual(space, tr, t)) for t in tr.t)
        assert worst < 1e-6

    def test_corruption_detected(self):
        space = make_space("klein2")
        tr = integrate(space, GeodesicState([-0.3, 0.1], [0.4, 0.2]), 2.0, 1e-11, max_step=0.01)
        vel = tr.velocities.copy()
        k = len(vel) // 2
        vel[k] *= 1.1
        bad = Trajectory(space, tr.t, tr.points, vel, None, tr.t_start, tr.t_stop)
        assert np.linalg.norm(geodesic_residual(space, bad, tr.t[k])) > 1e-3

    def test_too_few_samples(self):
        space = make_space("euclidean2")
        tr = integrate(space, GeodesicState([0, 0], [1, 0]), 1.0)
        short = Trajectory(space, tr.t[:2], tr.points[:2], tr.velocities[:2], None, 0.0, 1.0)
        with pytest.raises(InsufficientSamples):
            geodesic_residual(space, short, 0.0)

    @pytest.mark.parametrize("name", ["euclidean2", "klein2", "sphere2", "cylinder", "flat_mobius",
                                      "projective_plane", "product(euclidean1,cylinder)"])
    def test_every_space_small_residual(self, name, rng):
        # second-order stencil error scales with step^4; at max_step 0.01 it sits far below 1e-5
        space = make_space(name)
        s = random_state(space, rng, 0.5)
        tr = integrate(space, s, 2.0, 1e-11, max_step=0.01)
        worst = max(np.linalg.norm(geodesic_residual(space, tr, t)) for t in tr.t[2:-2])
        assert worst < 1e-5


class TestExpLog:
    def test_euclidean_exp(self):
        np.testing.assert_allclose(exp_map(make_space("euclidean2"), [1, 2], [3, -1]), [4, 1], atol=1e-12)

    @pytest.mark.parametrize("name", ALL_SPACES)
    def test_zero_vector(self, name, rng):
        space = make_space(name)
        p = random_state(space, rng).point
        assert np.array_equal(exp_map(space, p, np.zeros(space.dim)), p)

    def test_klein_exp(self):
        got = exp_map(make_space("klein2"), [0, 0], [1, 0], 1e-11)
        np.testing.assert_allclose(got, FROZEN["klein_exp_unit"], atol=1e-9)

    def test_euclidean_log(self):
        np.testing.assert_allclose(log_map(make_space("euclidean2"), [0, 0], [2, 3]), [2, 3], atol=1e-10)

    def test_log_same_point(self):
        assert not np.any(log_map(make_space("klein2"), [0.2, 0.1], [0.2, 0.1]))

    def test_klein_log(self):
        got = log_map(make_space("klein2"), [0, 0], [0.5, 0])
        np.testing.assert_allclose(got, FROZEN["klein_log_half"], atol=1e-8)

    @given(st.lists(st.floats(-0.6, 0.6), min_size=4, max_size=4))
    def test_round_trip_klein(self, xs):
        space = make_space("klein2")
        p = np.array(xs[:2]) * 0.9
        v = np.array(xs[2:]) * 2.0
        q = exp_map(space, p, v, 1e-11)
        np.testing.assert_allclose(log_map(space, p, q), v, atol=1e-6)

    @given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
    def test_round_trip_euclidean(self, xs):
        space = make_space("euclidean3")
        p, v = np.array(xs[:3]), np.array(xs[3:])
        np.testing.assert_allclose(log_map(space, p, exp_map(space, p, v)), v, atol=1e-6)


class TestTransport:
    def test_flat_identity(self):
        space = make_space("euclidean2")
        tr = integrate(space, GeodesicState([0, 0], [0.3, 1.7]), 3.0)
        np.testing.assert_allclose(parallel_transport(space, tr, [1, 1]), [1, 1], atol=1e-12)

    def test_klein_norm_preserved(self, rng):
        space = make_space("klein2")
        for _ in range(5):
            s = random_state(space, rng, 0.5)
            tr = integrate(space, s, 2.0)
            w0 = rng.normal(size=2)
            w1 = parallel_transport(space, tr, w0)
            assert space.inner(tr.final.point, w1, w1) == pytest.approx(
                space.inner(s.point, w0, w0), rel=1e-6)

    def test_octant_holonomy(self):
        space = make_space("sphere2")
        corners = [np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), np.array([0, 1.0, 0])]
        w = oracles.stereo_push(corners[0], [1.0, 0, 0])
        w0 = w.copy()
        for a, b in zip(corners, corners[1:] + corners[:1]):
            x = oracles.stereo(a)
            v = oracles.stereo_push(a, b)  # b is the unit tangent at a pointing towards b
            tr = integrate(space, GeodesicState(x, v), math.pi / 2, 1e-11)
            w = parallel_transport(space, tr, w, 1e-11)
        g = space.metric([0.0, 0.0])
        cos = (w @ g @ w0) / math.sqrt((w @ g @ w) * (w0 @ g @ w0))
        assert math.acos(np.clip(cos, -1, 1)) == pytest.approx(FROZEN["octant_holonomy"], abs=1e-4)
