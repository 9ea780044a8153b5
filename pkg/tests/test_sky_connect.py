import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from geodspace import GeodesicState, canonicalize, connect, exp_map, foot, make_space, sky, triangle_first_law
from geodspace.errors import NoConnectionFound, UnsupportedChart
from geodspace.sky_connect import orthogonality_residual, sky_difference_roots

FROZEN = oracles.frozen()


def disc_point(rng, radius=0.9, n=2):
    while True:
        p = rng.uniform(-radius, radius, n)
        if p @ p < radius**2:
            return p


def unoriented_count(space, conns):
    reps = []
    for c in conns:
        r = canonicalize(space, c.cls.rep, oriented=False)
        if not any(np.allclose(r.rep.point, q.rep.point, atol=1e-6) and
                   np.allclose(r.rep.velocity, q.rep.velocity, atol=1e-6) for q in reps):
            reps.append(r)
    return len(reps)


class TestSky:
    def test_origin_zero_section(self, rng):
        sec = sky("euclidean2", [0, 0])
        for _ in range(10):
            d = rng.normal(size=2)
            d /= np.linalg.norm(d)
            t = sec.evaluate(d)
            np.testing.assert_allclose(t.direction, d, atol=1e-12)
            np.testing.assert_allclose(t.offset, 0, atol=1e-12)

    def test_offset_projection(self):
        t = sky("euclidean2", [1, 0]).evaluate(np.array([0.0, 1.0]))
        np.testing.assert_allclose(t.direction, [0, 1], atol=1e-12)
        np.testing.assert_allclose(t.offset, [1, 0], atol=1e-12)

    def test_klein_centre(self, rng):
        sec = sky("klein2", [0, 0])
        for _ in range(10):
            d = rng.normal(size=2)
            d /= np.linalg.norm(d)
            np.testing.assert_allclose(sec.evaluate(d).offset, 0, atol=1e-12)

    @pytest.mark.parametrize("name", ["euclidean2", "euclidean3", "klein2", "klein3"])
    def test_is_section(self, name, rng):
        space = make_space(name)
        x = disc_point(rng, 0.8, space.dim)
        sec = sky(space, x)
        for _ in range(20):
            d = rng.normal(size=space.dim)
            d /= np.linalg.norm(d)
            assert np.linalg.norm(sec.evaluate(d).direction - d) < 1e-10

    def test_unsupported(self):
        with pytest.raises(UnsupportedChart):
            sky("sphere2", [0, 0])


class TestRoots:
    def test_euclidean_axis(self):
        roots = sky_difference_roots("euclidean2", [0, 0], [1, 0])
        got = sorted(tuple(np.round(r, 9)) for r in roots)
        assert got == [(-1.0, 0.0), (1.0, 0.0)]

    def test_euclidean3_random(self, rng):
        for _ in range(10):
            x, z = rng.normal(size=(2, 3))
            d = (z - x) / np.linalg.norm(z - x)
            roots = sky_difference_roots("euclidean3", x, z)
            assert len(roots) == 2
            for r in roots:
                assert min(np.linalg.norm(r - d), np.linalg.norm(r + d)) < 1e-8

    def test_klein(self):
        roots = sky_difference_roots("klein2", [0, 0], [0.5, 0])
        assert len(roots) == 2
        for r in roots:
            assert abs(abs(r[0]) - 1) < 1e-8

    def test_single_unoriented_root(self, rng):
        for _ in range(100):
            x, z = rng.uniform(-3, 3, (2, 2))
            roots = sky_difference_roots("euclidean2", x, z)
            assert len(roots) == 2
            assert np.linalg.norm(roots[0] + roots[1]) < 1e-8


class TestConnect:
    def test_euclidean_segment(self):
        conns = connect("euclidean3", [0, 0, 0], [1, 1, 1])
        assert len(conns) == 1
        c = conns[0]
        assert c.length == pytest.approx(math.sqrt(3))
        np.testing.assert_allclose(c.start_velocity, np.ones(3), atol=1e-10)

    def test_klein_diameter(self):
        conns = connect("klein2", [-0.9, 0], [0.9, 0])
        assert len(conns) == 1
        assert conns[0].residual < 1e-6
        assert conns[0].length == pytest.approx(2 * math.atanh(0.9), rel=1e-8)

    def test_cylinder_windings(self):
        conns = connect("cylinder", [0, 0], [1, math.pi], windings=1)
        assert len(conns) >= 3
        assert all(c.residual < 1e-9 for c in conns)

    @pytest.mark.parametrize("name", ["klein2", "euclidean3", "cylinder", "flat_torus", "flat_mobius",
                                      "sphere2", "projective_plane", "product(euclidean1,cylinder)"])
    def test_exp_consistency(self, name, rng):
        space = make_space(name)
        for _ in range(5):
            x = disc_point(rng, 0.7, space.dim)
            z = disc_point(rng, 0.7, space.dim)
            for c in connect(space, x, z, windings=1):
                assert space.norm(x, c.start_velocity) == pytest.approx(c.length, rel=1e-9)
                end = exp_map(space, x, c.start_velocity, 1e-11)
                assert space.separation(end, z) < 1e-6

    def test_klein_length_matches_distance(self, rng):
        for _ in range(10):
            x, z = disc_point(rng), disc_point(rng)
            (c,) = connect("klein2", x, z)
            assert c.length == pytest.approx(oracles.klein_distance(x, z), rel=1e-7)

    @pytest.mark.parametrize("name", ["euclidean2", "euclidean3", "klein2"])
    def test_hadamard_uniqueness(self, name, rng):
        space = make_space(name)
        for _ in range(40):
            x = disc_point(rng, 0.9, space.dim)
            z = disc_point(rng, 0.9, space.dim)
            assert unoriented_count(space, connect(space, x, z)) == 1

    def test_sphere_antipodes(self):
        with pytest.raises(NoConnectionFound):
            connect("sphere2", [1, 0], [-1, 0])


class TestFoot:
    def test_euclidean(self):
        c = canonicalize(make_space("euclidean2"), GeodesicState([4, 0], [1, 0]))
        q, _ = foot("euclidean2", [0, 1], c)
        np.testing.assert_allclose(q, [0, 0], atol=1e-9)

    def test_on_geodesic(self):
        space = make_space("klein2")
        c = canonicalize(space, GeodesicState([0.1, 0.2], [1, -0.5]))
        p = space.reduce(*[np.asarray(a) for a in (c.rep.point, c.rep.velocity)])[0]
        q, t = foot(space, p, c)
        np.testing.assert_allclose(q, p, atol=1e-9)
        assert t == pytest.approx(0.0, abs=1e-8)

    def test_klein_symmetric(self):
        space = make_space("klein2")
        c = canonicalize(space, GeodesicState([0.3, 0], [1, 0]))
        q, t = foot(space, [0, 0.5], c)
        np.testing.assert_allclose(q, [0, 0], atol=1e-9)
        assert orthogonality_residual(space, [0, 0.5], c, t) < 1e-6

    def test_strict_minimum_and_orthogonality(self, rng):
        space = make_space("klein2")
        for _ in range(20):
            p = disc_point(rng, 0.8)
            c = canonicalize(space, GeodesicState(disc_point(rng, 0.8), rng.normal(size=2)))
            q, t = foot(space, p, c)
            assert orthogonality_residual(space, p, c, t) < 1e-6
            d0 = space.distance(p, q)
            for delta in (1e-3, 1e-2):
                for sgn in (1, -1):
                    from geodspace.geodesic_space import flow
                    other, _ = flow(space, c.rep.point, c.rep.velocity, t + sgn * delta)
                    assert space.distance(p, other) > d0


class TestTriangle:
    def test_euclidean_zero_slack(self, rng):
        for _ in range(20):
            x, y, z = rng.normal(size=(3, 2))
            r = triangle_first_law("euclidean2", x, y, z)
            assert abs(r.slack) < 1e-9
            assert r.slack == pytest.approx(oracles.euclid_triangle_slack(x, y, z), abs=1e-9)

    def test_klein_right_triangle(self):
        r = triangle_first_law("klein2", [0, 0], [0.5, 0], [0, 0.5])
        assert r.slack > 0
        assert r.slack == pytest.approx(FROZEN["klein_slack_right_triangle"], rel=1e-6)
        assert r.alpha3 == pytest.approx(math.pi / 2, abs=1e-8)

    def test_degenerate(self):
        r = triangle_first_law("klein2", [-0.5, 0], [0.5, 1e-7], [0.1, 0.0])
        assert r.slack >= -1e-9

    @given(st.lists(st.floats(-0.6, 0.6), min_size=6, max_size=6))
    def test_klein_nonnegative(self, xs):
        x, y, z = np.array(xs).reshape(3, 2)
        if min(np.linalg.norm(x - y), np.linalg.norm(x - z), np.linalg.norm(y - z)) < 1e-3:
            return
        r = triangle_first_law("klein2", x, y, z)
        assert r.slack >= -1e-9
        assert r.slack == pytest.approx(oracles.klein_triangle_slack(x, y, z), abs=1e-6)
