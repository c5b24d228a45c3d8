import json

import numpy as np
import pytest

from wsurf import surface as sf
from wsurf.errors import DegenerateMetric, InvalidParams

rng = np.random.default_rng(11)


def rand_points(p, n=20):
    return rng.uniform(*p.s_range, n), rng.uniform(*p.t_range, n)


def test_sphere_cap_curvatures():
    for R in (0.5, 1.0, 3.0):
        p = sf.sphere_cap(R)
        g = sf.geometry_batch(p, *rand_points(p))
        np.testing.assert_allclose(g.H, 2 / R, rtol=1e-12)
        np.testing.assert_allclose(g.K, 1 / R**2, rtol=1e-12)
        # inward normal
        assert np.all(np.einsum("ij,ij->i", g.n, g.r) < 0)
        np.testing.assert_allclose(g.lap_H, 0, atol=1e-10)


def test_orientation_flip_negates_H():
    p, q = sf.sphere_cap(orientation=1), sf.sphere_cap(orientation=-1)
    s, t = rand_points(p)
    np.testing.assert_allclose(sf.geometry_batch(q, s, t).H, -sf.geometry_batch(p, s, t).H)
    np.testing.assert_allclose(sf.geometry_batch(q, s, t).K, sf.geometry_batch(p, s, t).K)


def test_cylinder_and_catenoid():
    g = sf.geometry_batch(sf.cylinder(2.0, 1.0), *rand_points(sf.cylinder(2.0, 1.0)))
    np.testing.assert_allclose(np.abs(g.H), 0.5, rtol=1e-12)
    np.testing.assert_allclose(g.K, 0, atol=1e-13)
    cat = sf.catenoid_band(1.0)
    g = sf.geometry_batch(cat, *rand_points(cat))
    np.testing.assert_allclose(g.H, 0, atol=1e-12)
    assert np.all(g.K < 0)


def test_torus_curvature_formula():
    R, rho = 2.0, 1.0
    p = sf.torus_band(R, rho)
    s, t = rand_points(p)
    g = sf.geometry_batch(p, s, t)
    # distance to the axis determines cos v
    d = np.hypot(g.r[:, 0], g.r[:, 1])
    c = (d - R) / rho
    np.testing.assert_allclose(g.K, c / (rho * (R + rho * c)), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(np.abs(g.H), np.abs((R + 2 * rho * c) / (rho * (R + rho * c))), rtol=1e-10)


def test_graph_patch_matches_fd_of_height():
    coeffs = {(2, 0): 0.3, (1, 1): -0.2, (0, 3): 0.1}
    p = sf.graph_patch(coeffs)
    x, y, h = 0.4, 0.6, 1e-4
    z = lambda a, b: 0.3 * a * a - 0.2 * a * b + 0.1 * b**3  # noqa: E731
    zx = (z(x + h, y) - z(x - h, y)) / (2 * h)
    zy = (z(x, y + h) - z(x, y - h)) / (2 * h)
    zxx = (z(x + h, y) - 2 * z(x, y) + z(x - h, y)) / h**2
    zyy = (z(x, y + h) - 2 * z(x, y) + z(x, y - h)) / h**2
    zxy = (z(x + h, y + h) - z(x + h, y - h) - z(x - h, y + h) + z(x - h, y - h)) / (4 * h * h)
    w = 1 + zx**2 + zy**2
    K = (zxx * zyy - zxy**2) / w**2
    H = ((1 + zy**2) * zxx - 2 * zx * zy * zxy + (1 + zx**2) * zyy) / w**1.5
    g = sf.geometry_at(p, x, y)
    assert float(g.K) == pytest.approx(K, rel=1e-6)
    assert abs(float(g.H)) == pytest.approx(abs(H), rel=1e-6)


def test_area_quadrature():
    p = sf.sphere_cap(1.0, (0.0, np.pi / 3))
    geo = sf.sample_interior(p, 16)
    assert np.sum(geo.area_weight) == pytest.approx(2 * np.pi * (1 - np.cos(np.pi / 3)), rel=1e-13)
    cyl = sf.cylinder(1.5, 2.0)
    assert np.sum(sf.sample_interior(cyl, 8).area_weight) == pytest.approx(2 * np.pi * 1.5 * 2.0, rel=1e-13)


def test_sphere_cap_boundary_frame():
    theta = np.pi / 3
    p = sf.sphere_cap(1.0, (0.0, theta))
    bs = sf.sample_boundary(p, 12)
    np.testing.assert_allclose(bs.kappa_n, 1.0, rtol=1e-12)
    np.testing.assert_allclose(bs.tau_g, 0.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(bs.kappa_g), 1 / np.tan(theta), rtol=1e-10)
    np.testing.assert_allclose(np.sum(bs.arc_weight), 2 * np.pi * np.sin(theta), rtol=1e-13)
    # outward co-normal points away from the pole
    assert np.all(bs.eta[:, 2] < 0)


def test_degenerate_edges_detected():
    assert "s0" in sf.sphere_cap().degenerate
    assert list(sf.disk(1.0).boundary_edges) == ["s1"]
    with pytest.raises(DegenerateMetric):
        sf.geometry_at(sf.sphere_cap(), 0.0, 0.3)


def test_rescale_and_invalid():
    p = sf.rescale(sf.sphere_cap(1.0), 2.0)
    assert float(sf.geometry_at(p, 0.5, 0.1).H) == pytest.approx(1.0)
    with pytest.raises(InvalidParams):
        sf.rescale(p, 0.0)
    with pytest.raises(InvalidParams):
        sf.make_builtin("klein_bottle")


def test_json_roundtrip():
    for p in (sf.sphere_cap(2.0), sf.torus_band(), sf.catenoid_band(1.5, (-0.5, 0.5)), sf.rescale(sf.cylinder(), 3.0)):
        q = sf.patch_from_json(p.to_json())
        s, t = rand_points(p, 5)
        np.testing.assert_allclose(q.position(s, t), p.position(s, t), rtol=1e-14)
        assert json.loads(q.to_json()) == json.loads(p.to_json())


def test_axisym_sphere_profile_matches_sphere():
    p = sf.patch_from_dict({"name": "axisym", "profile": "sphere", "R": 1.0, "t_range": [-0.8, 0.8]})
    g = sf.geometry_batch(p, np.linspace(-0.7, 0.7, 9), np.full(9, 0.4))
    np.testing.assert_allclose(np.abs(g.H), 2.0, rtol=1e-10)
    np.testing.assert_allclose(g.K, 1.0, rtol=1e-10)
