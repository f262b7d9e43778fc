import math

import numpy as np
import pytest

from hypsmear.hypgeom import GeodesicSimplex, HPoint, from_klein, origin, to_klein
from hypsmear.volume import (
    QuadratureSpec,
    extrapolated_regular_volume,
    gauss_bonnet_area,
    ideal_regular_volume,
    klein_volume,
    lobachevsky,
    regular_simplex,
    regular_simplex_volume,
    signed_volume,
    triangle_signed_area,
)

import oracles

# closed form pi - 3 arccos(cosh L / (1 + cosh L)), frozen from tests/oracles.py
EQUILATERAL_AREA_2 = 1.1616934409423951

# 3 Lambda(pi/3); the series oracle at 2e6 terms reproduces it to 1e-13
V3 = 1.0149416064096536


def test_klein_volume_equilateral_closed_form():
    r = klein_volume(regular_simplex(2, 2.0))
    assert r.converged
    assert r.value == pytest.approx(EQUILATERAL_AREA_2, abs=2e-8)
    assert r.err_estimate <= 1e-8


def test_klein_volume_against_mc_oracle():
    s = regular_simplex(2, 2.0)
    est, sig = oracles.mc_klein_mass(to_klein(s.vertices), samples=400_000, seed=11)
    assert abs(est - klein_volume(s).value) <= 4.0 * sig


def test_klein_volume_tightened_tolerance():
    spec = QuadratureSpec(abs_tol=1e-11, max_subdivisions=20_000)
    r = klein_volume(regular_simplex(2, 2.0), spec)
    assert r.converged
    assert r.value == pytest.approx(EQUILATERAL_AREA_2, abs=1e-10)


def test_gauss_bonnet_routes_agree():
    # angle route and side route must match on a generic triangle
    rng = np.random.default_rng(7)
    for _ in range(10):
        pts = [from_klein(u) for u in rng.uniform(-0.55, 0.55, size=(3, 2))]
        d = [
            math.acosh(max(1.0, -oracles_mink(pts[i], pts[j])))
            for i, j in ((0, 1), (1, 2), (2, 0))
        ]
        a_sides = gauss_bonnet_area(sides=d)
        s = GeodesicSimplex(pts)
        q = klein_volume(s).value
        assert a_sides == pytest.approx(q, abs=1e-7)


def oracles_mink(x, y):
    c1, c2 = x.coords, y.coords
    return -c1[0] * c2[0] + c1[1] * c2[1] + c1[2] * c2[2]


def test_lobachevsky_against_series_oracle():
    for theta in (0.3, math.pi / 6.0, math.pi / 3.0, 1.2):
        assert lobachevsky(theta) == pytest.approx(
            oracles.lobachevsky_fourier(theta), abs=1e-6
        )


def test_lobachevsky_identities():
    # odd, pi-periodic, zero at multiples of pi/2, duplication law
    assert lobachevsky(0.0) == pytest.approx(0.0, abs=1e-15)
    assert lobachevsky(math.pi / 2.0) == pytest.approx(0.0, abs=1e-12)
    for t in (0.2, 0.7, 1.3):
        assert lobachevsky(-t) == pytest.approx(-lobachevsky(t), abs=1e-12)
        assert lobachevsky(t + math.pi) == pytest.approx(lobachevsky(t), abs=1e-12)
        assert lobachevsky(2.0 * t) == pytest.approx(
            2.0 * lobachevsky(t) + 2.0 * lobachevsky(t + math.pi / 2.0), abs=1e-12
        )


def test_lobachevsky_maximum():
    assert lobachevsky(math.pi / 6.0) == pytest.approx(0.5074708032048266, abs=1e-12)
    grid = np.linspace(0.01, math.pi - 0.01, 500)
    vals = [lobachevsky(t) for t in grid]
    assert max(vals) <= lobachevsky(math.pi / 6.0) + 1e-9


def test_regular_simplex_edge_lengths():
    for n, L in ((2, 1.0), (2, 5.0), (3, 2.5)):
        v = regular_simplex(n, L).vertices
        for i in range(n + 1):
            for j in range(i + 1, n + 1):
                c = -(-v[i, 0] * v[j, 0] + np.dot(v[i, 1:], v[j, 1:]))
                assert math.acosh(max(c, 1.0)) == pytest.approx(L, abs=1e-9)


def test_signed_volume_orientation():
    s = regular_simplex(2, 2.0)
    a = signed_volume(s)
    swapped = GeodesicSimplex([HPoint(s.vertices[i]) for i in (1, 0, 2)])
    assert signed_volume(swapped) == pytest.approx(-a, abs=1e-9)
    assert a == pytest.approx(EQUILATERAL_AREA_2, abs=1e-7)


def test_triangle_signed_area_matches_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(5):
        pts = [from_klein(u) for u in rng.uniform(-0.5, 0.5, size=(3, 2))]
        a = triangle_signed_area(*pts)
        q = klein_volume(GeodesicSimplex(pts)).value
        assert abs(a) == pytest.approx(q, abs=1e-7)


def test_triangle_signed_area_degenerate():
    a = origin(2)
    b = from_klein(np.array([0.3, 0.0]))
    c = from_klein(np.array([0.6, 0.0]))
    assert triangle_signed_area(a, b, c) == pytest.approx(0.0, abs=1e-6)


def test_ideal_constants():
    c2 = ideal_regular_volume(2)
    assert c2.v_n == math.pi and c2.method == "exact"
    c3 = ideal_regular_volume(3)
    assert c3.v_n == pytest.approx(V3, abs=1e-14)
    assert c3.v_n == pytest.approx(3.0 * oracles.lobachevsky_fourier(math.pi / 3.0), abs=1e-6)
    assert c3.method == "lobachevsky"
    with pytest.raises(ValueError):
        ideal_regular_volume(1)


def test_extrapolation_reaches_v2():
    value, err = extrapolated_regular_volume(2)
    assert abs(value - math.pi) <= max(err, 1e-5)


def test_regular_volume_monotone_in_L():
    vals = [regular_simplex_volume(2, L).value for L in (1.0, 2.0, 4.0, 8.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < math.pi
