import math

import numpy as np
import pytest

from geodspace import GeodesicState, integrate, make_covering, make_space
from geodspace.errors import BadParams, BadSheet, UnknownCovering, UnknownSpace
from geodspace.models import COVERING_NAMES, klein_distance, parse_space

import oracles


def upstairs_state(cov, rng):
    up = cov.upstairs
    scale = 0.9 if up.kind in ("round", "punctured_round", "strip") else 3.0
    while True:
        p = rng.uniform(-scale, scale, up.dim)
        if up.in_chart(p):
            break
    v = rng.normal(size=up.dim)
    return GeodesicState(p, v / up.norm(p, v))


class TestMakeSpace:
    def test_euclidean2(self):
        s = make_space("euclidean", n=2)
        assert s.dim == 2 and s.is_flat and s.is_hadamard
        assert s.in_chart([1e6, -1e6])
        assert s.identifications == []

    def test_product_inherits_identifications(self):
        s = make_space("product(euclidean(1), cylinder)")
        assert s.dim == 3
        assert len(s.identifications) == 1
        assert "6.28318" in s.identifications[0]

    def test_klein(self):
        s = make_space("klein_hyperbolic(2)")
        assert s.is_hadamard and s.has_metric
        assert s.in_chart([0.99, 0]) and not s.in_chart([1.0, 0]) and not s.in_chart([0.8, 0.8])
        np.testing.assert_allclose(s.metric([0.5, 0]), [[1 / 0.75 + 0.25 / 0.5625, 0], [0, 1 / 0.75]])

    @pytest.mark.parametrize("text,dim", [("euclidean3", 3), ("euclidean(4)", 4), ("klein2", 2),
                                          ("klein_hyperbolic(3)", 3), ("pseudoeuclidean(3, 2, 1)", 3),
                                          ("product:euclidean1,cylinder", 3), ("sphere", 2),
                                          ("torus", 2), ("mobius", 2), ("strip", 2), ("circle", 1)])
    def test_names(self, text, dim):
        assert parse_space(text).dim == dim

    def test_pseudoeuclidean_signature_metadata(self):
        s = make_space("pseudoeuclidean", n=3, signature="2,1")
        assert s.signature == (2, 1)
        assert not s.has_metric and s.is_flat

    @pytest.mark.parametrize("bad,exc", [("hyperbolic_wobble", UnknownSpace), ("euclidean0", BadParams),
                                         ("product(euclidean1)", BadParams), (3, UnknownSpace),
                                         ("sphere2(3)", BadParams)])
    def test_errors(self, bad, exc):
        with pytest.raises(exc):
            make_space(bad)

    def test_klein_distance_matches_oracle(self, rng):
        for _ in range(20):
            a, b = rng.uniform(-0.6, 0.6, (2, 2))
            assert klein_distance(a, b) == pytest.approx(oracles.klein_distance(a, b), rel=1e-10)

    def test_punctured_projective_excludes_pole(self):
        s = make_space("punctured_projective_plane")
        assert not s.in_chart([0.0, 0.0])
        assert s.in_chart([1e-11, 0.0])


class TestCoverings:
    def test_plane_over_cylinder_projection(self):
        cov = make_covering("plane_over_cylinder")
        np.testing.assert_allclose(cov.project([1.0, 7.0]), [1.0, 7.0 - 2 * math.pi])
        np.testing.assert_allclose(cov.project([1.0, -1.0]), [1.0, 2 * math.pi - 1.0])

    def test_sphere_over_projective(self):
        cov = make_covering("sphere_over_projective")
        assert cov.sheet_count == 2
        x = np.array([1.5, 0.5])
        y = cov.project(x)
        assert np.linalg.norm(y) <= 1.0
        np.testing.assert_allclose(cov.project(-x / (x @ x)), y, atol=1e-14)

    def test_line_over_circle_lift(self):
        cov = make_covering("line_over_circle")
        assert cov.lift([0.5], 3)[0] == pytest.approx(0.5 + 6 * math.pi)

    def test_unknown(self):
        with pytest.raises(UnknownCovering):
            make_covering("torus_over_sphere")

    def test_bad_sheet(self):
        with pytest.raises(BadSheet):
            make_covering("sphere_over_projective").check_sheet(2)
        with pytest.raises(BadSheet):
            make_covering("plane_over_torus").check_sheet((1, 2, 3))

    @pytest.mark.parametrize("name", COVERING_NAMES)
    def test_project_lift_identity(self, name, rng):
        cov = make_covering(name)
        for _ in range(20):
            x = cov.project(upstairs_state(cov, rng).point)
            for k in cov.sheets(1):
                np.testing.assert_allclose(cov.project(cov.lift(x, k)), x, atol=1e-12)

    @pytest.mark.parametrize("name", COVERING_NAMES)
    def test_geodesic_covering(self, name, rng):
        """Integrate-then-project agrees with project-then-integrate."""
        cov = make_covering(name)
        up, down = cov.upstairs, cov.downstairs
        for _ in range(100):
            s = upstairs_state(cov, rng)
            tr_up = integrate(up, s, 1.5, 1e-10)
            if tr_up.truncated:
                continue
            x, v = cov.project_tangent(s.point, s.velocity)
            tr_down = integrate(down, GeodesicState(x, v), 1.5, 1e-10)
            for t in (0.5, 1.0, tr_up.t_end):
                a = cov.project(tr_up.at(t).point)
                b = tr_down.at(t).point
                assert down.separation(a, b) < 1e-6
