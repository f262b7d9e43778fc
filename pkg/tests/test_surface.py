import math

import numpy as np
import pytest

from hypsmear.hypgeom import HPoint, distance, minkowski, origin
from hypsmear.smear.surface import (
    SurfaceModel,
    bundled_model_path,
    load_model,
    reduce_to_domain,
    save_model,
)

J = np.array([-1.0, 1.0, 1.0])


def test_bundled_genus2_shape(genus2):
    assert genus2.chi == -2
    assert len(genus2.generators) == 8
    assert len(genus2.polygon) == 8
    assert genus2.boundary == ()
    assert genus2.exact_area == pytest.approx(4.0 * math.pi, abs=1e-14)
    assert genus2.domain_radius() == pytest.approx(2.4484524476780756, abs=1e-9)
    assert genus2.boundary_length() == 0.0


def test_bundled_torus_shape(torus):
    assert torus.chi == -1
    assert len(torus.generators) == 4
    assert len(torus.boundary) > 0
    assert torus.exact_area == pytest.approx(2.0 * math.pi, abs=1e-14)
    assert torus.boundary_length() == pytest.approx(6.114283677923990, abs=1e-9)


def test_unknown_bundled_name():
    with pytest.raises(ValueError):
        bundled_model_path("klein_bottle")


def test_save_load_roundtrip(genus2, tmp_path):
    p = tmp_path / "m.json"
    save_model(genus2, p)
    back = load_model(p)
    assert back.chi == genus2.chi
    assert np.array_equal(back.gen_mats, genus2.gen_mats)
    assert np.array_equal(back.poly_coords, genus2.poly_coords)


def test_load_rejects_wrong_dim(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"dim": 3}')
    with pytest.raises(ValueError):
        load_model(p)


def test_constructor_rejects_nonnegative_chi(genus2):
    with pytest.raises(ValueError):
        SurfaceModel(genus2.gen_mats, genus2.poly_coords, (), genus2.base, 0)


def test_constructor_rejects_wrong_area(genus2):
    with pytest.raises(ValueError, match="area"):
        SurfaceModel(genus2.gen_mats, genus2.poly_coords, (), genus2.base, -3)


def test_constructor_rejects_missing_inverse(genus2):
    with pytest.raises(ValueError, match="inverse"):
        SurfaceModel(genus2.gen_mats[:7], genus2.poly_coords, (), genus2.base, -2)


def test_constructor_rejects_bad_boundary_polar(torus):
    polars = [2.0 * u for u in torus.boundary]
    with pytest.raises(ValueError, match="polar"):
        SurfaceModel(torus.gen_mats, torus.poly_coords, polars, torus.base, -1)


def test_generators_are_lorentz_and_closed_under_inverse(genus2):
    for g in genus2.gen_mats:
        assert np.allclose(g.T @ np.diag(J) @ g, np.diag(J), atol=1e-10)
    inv = genus2._inv_index
    for i, j in enumerate(inv):
        assert np.allclose(genus2.gen_mats[i] @ genus2.gen_mats[j], np.eye(3), atol=1e-9)


def test_reduce_to_domain_roundtrip(genus2):
    rng = np.random.default_rng(21)
    inside = origin(2)
    for _ in range(12):
        word = rng.integers(0, 8, size=rng.integers(1, 6))
        g = np.eye(3)
        for w in word:
            g = g @ genus2.gen_mats[w]
        moved = HPoint(g @ inside.coords)
        red, gamma = reduce_to_domain(moved, genus2)
        assert distance(red, inside) < 1e-4
        # conditioning grows with cosh(distance); compare relative to scale
        back_err = np.max(np.abs(gamma.matrix @ red.coords - moved.coords))
        assert back_err <= 1e-4 * max(1.0, moved.coords[0])


def test_reduce_batch_lands_in_polygon(genus2):
    rng = np.random.default_rng(5)
    # words of moderate length scatter points a few diameters out
    pts = []
    for _ in range(40):
        g = np.eye(3)
        for w in rng.integers(0, 8, size=3):
            g = g @ genus2.gen_mats[w]
        v = rng.normal(size=2) * 0.4
        r = np.linalg.norm(v)
        x = np.array([math.cosh(r), *(math.sinh(r) * v / max(r, 1e-12))])
        pts.append(g @ x)
    pts = np.array(pts)
    red, elems = genus2.reduce_batch(pts)
    assert genus2.point_in_polygon(red, tol=1e-9).all()
    back = np.einsum("bij,bj->bi", elems, red)
    assert np.max(np.abs(back - pts)) < 1e-4


def test_reduce_batch_distance_budget(genus2):
    far = np.array([[math.cosh(41.0), math.sinh(41.0), 0.0]])
    with pytest.raises(ValueError):
        genus2.reduce_batch(far)


def test_boundary_lines_are_unit_polars(torus):
    lines = torus.boundary_lines(4.0)
    assert lines.shape[0] >= len(torus.boundary)
    q = -(lines[:, 0] ** 2) + lines[:, 1] ** 2 + lines[:, 2] ** 2
    assert np.allclose(q, 1.0, atol=1e-9)
    # base point strictly on the surface side of every line
    s = (torus.base.coords * J) @ lines.T
    assert np.all(s < 0)


def test_boundary_lines_closed_model_empty(genus2):
    assert genus2.boundary_lines(5.0).shape == (0, 3)


def test_fold_batch_unfolds(torus):
    lines = torus.boundary_lines(torus.domain_radius() + 3.0)
    rng = np.random.default_rng(9)
    pts = []
    for _ in range(25):
        v = rng.normal(size=2)
        v *= rng.uniform(0.0, 2.5) / np.linalg.norm(v)
        r = np.linalg.norm(v)
        pts.append([math.cosh(r), *(math.sinh(r) * v / max(r, 1e-12))])
    pts = np.array(pts)
    folded, unf = torus.fold_batch(pts, lines)
    depth = torus.distance_to_boundary(folded, lines)
    assert np.all(depth >= -1e-9)
    back = np.einsum("bij,bj->bi", unf, folded)
    assert np.max(np.abs(back - pts)) < 1e-8


def test_distance_to_boundary_signs(torus):
    lines = torus.boundary_lines(torus.domain_radius() + 3.0)
    d0 = torus.distance_to_boundary(torus.base.coords[None, :], lines)[0]
    assert d0 > 0
    # reflect the base across its nearest boundary line: depth flips sign
    s = (torus.base.coords * J) @ lines.T
    u = lines[int(np.argmax(s))]
    refl = torus.base.coords - 2.0 * minkowski(torus.base.coords, u) * u
    d1 = torus.distance_to_boundary(refl[None, :], lines)[0]
    assert d1 == pytest.approx(-d0, abs=1e-9)


def test_element_ball_contains_identity_and_is_lorentz(genus2):
    ball = genus2.element_ball(4.0)
    ident = np.min(np.max(np.abs(ball - np.eye(3)), axis=(1, 2)))
    assert ident < 1e-12
    jm = np.diag(J)
    for g in ball[:50]:
        assert np.allclose(g.T @ jm @ g, jm, atol=1e-9)
    # every element moves the base point by at most the requested radius
    imgs = ball @ genus2.base.coords
    cosh_d = -(imgs * J) @ genus2.base.coords
    assert np.all(np.arccosh(np.maximum(1.0, cosh_d)) <= 4.0 + 1e-6)


def test_point_in_polygon_basics(genus2):
    assert genus2.point_in_polygon(np.array([[0.0, 0.0]]))[0]
    assert not genus2.point_in_polygon(np.array([[0.99, 0.0]]))[0]
