import math

import numpy as np
import pytest
from scipy import special

from indefrf.errors import DomainError
from indefrf.specfun import (
    bessel_j,
    gamma_fn,
    radial_char,
    scaled_bessel,
    sphere_surface_area,
)
from oracles import bessel_series


class TestBessel:
    def test_origin(self):
        assert bessel_j(0, 0) == 1.0
        assert bessel_j(2.5, 0) == 0.0

    def test_half_integer_identity(self):
        x = math.pi / 2
        assert bessel_j(0.5, x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.sin(x), rel=1e-14)
        assert bessel_j(0.5, x) == pytest.approx(2 / math.pi, rel=1e-14)

    def test_known_value(self):
        assert bessel_j(1, 1) == pytest.approx(0.4400505857, abs=1e-10)

    @pytest.mark.parametrize("nu", [0.0, 1.5, 7.0, 12.0])
    def test_series_oracle(self, nu):
        for x in (0.01, 0.7, 3.3, 11.9, 29.5):
            ref = bessel_series(nu, x)
            assert bessel_j(nu, x) == pytest.approx(ref, rel=1e-8, abs=1e-300)

    def test_recurrence(self):
        nu = np.arange(1, 13)[:, None] * 1.0
        x = np.linspace(0.5, 30, 40)[None, :]
        lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
        rhs = 2 * nu / x * bessel_j(nu, x)
        assert np.max(np.abs(lhs - rhs)) < 1e-7

    def test_broadcast(self):
        out = bessel_j(np.array([0.0, 1.0]), np.array([[1.0], [2.0]]))
        assert out.shape == (2, 2)

    @pytest.mark.parametrize("nu,x", [(-1, 1.0), (0, -0.5), (0, np.nan), (np.inf, 1.0)])
    def test_domain(self, nu, x):
        with pytest.raises(DomainError):
            bessel_j(nu, x)


class TestGamma:
    @pytest.mark.parametrize("x,expected", [(1, 1.0), (0.5, math.sqrt(math.pi)), (5, 24.0)])
    def test_values(self, x, expected):
        assert gamma_fn(x) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("x", [0, -1, np.nan])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            gamma_fn(x)


class TestSphereArea:
    def test_low_dimensions(self):
        assert sphere_surface_area(1) == pytest.approx(2.0)
        assert sphere_surface_area(2) == pytest.approx(2 * math.pi)
        assert sphere_surface_area(3) == pytest.approx(4 * math.pi)

    def test_d16(self):
        assert sphere_surface_area(16) == pytest.approx(2 * math.pi**8 / 5040, rel=1e-14)

    @pytest.mark.parametrize("d", [0, -2, 2.5, True])
    def test_domain(self, d):
        with pytest.raises(DomainError):
            sphere_surface_area(d)


class TestRadialChar:
    @pytest.mark.parametrize("d", [1, 2, 3, 4, 16])
    def test_origin_and_continuity(self, d):
        u = np.array([0.0, 0.999e-3, 1.001e-3])
        h = radial_char(d, u)
        assert h[0] == 1.0
        assert abs(h[1] - h[2]) < 1e-6

    def test_d3_is_sinc(self):
        u = np.linspace(0.01, 20, 50)
        np.testing.assert_allclose(radial_char(3, u), np.sin(u) / u, rtol=1e-12, atol=1e-15)

    def test_d2_is_j0(self):
        u = np.linspace(0.01, 20, 50)
        np.testing.assert_allclose(radial_char(2, u), special.j0(u), atol=1e-15)

    def test_sphere_average(self):
        # h_d(|w|) = E cos(w . theta) over uniform directions theta
        g = np.random.default_rng(3)
        theta = g.standard_normal((200_000, 5))
        theta /= np.linalg.norm(theta, axis=1, keepdims=True)
        assert np.mean(np.cos(2.0 * theta[:, 0])) == pytest.approx(radial_char(5, 2.0), abs=5e-3)


class TestScaledBessel:
    @pytest.mark.parametrize("alpha", [0.5, 8.0, 10.0, 12.5])
    def test_matches_oracle(self, alpha):
        for w in (0.0, 0.3, 0.99, 1.0, 2.5, 9.0):
            ref = 2**alpha / math.gamma(alpha + 1) if w == 0 else (2 / w) ** alpha * bessel_series(alpha, 2 * w)
            assert scaled_bessel(alpha, np.array([w]))[0] == pytest.approx(ref, rel=1e-10, abs=1e-14)
