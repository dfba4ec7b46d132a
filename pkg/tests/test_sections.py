"""Cross-sections and holonomy: construction, the analytic section-map
oracle, rescaled-tube containment, injectivity, and stepwise orbits."""

import numpy as np
import pytest

from rflowlab.errors import BetaTooLarge, LeftTube, SingularBase, Timeout
from rflowlab.flows import CAT_MATRIX, LAMBDA_PLUS, get_flow, sample_points
from rflowlab.sections import (
    holonomy,
    holonomy_orbit,
    make_section,
    section_coords,
    section_point,
)

TORUS = get_flow("solid_torus")
CAT = get_flow("cat_suspension")
RIGID = get_flow("rigid_rotation")


def _pt(flow, coords):
    return flow.manifold.wrap(coords)


def test_make_section_radius():
    sec = make_section(TORUS, _pt(TORUS, (-0.5, 0.0, 0.0)), 0.1)
    assert sec.radius == pytest.approx(0.05)
    sec = make_section(CAT, _pt(CAT, (0.3, 0.3, 0.3)), 0.1)
    assert sec.radius == pytest.approx(0.1)


def test_make_section_singular_base():
    with pytest.raises(SingularBase):
        make_section(TORUS, _pt(TORUS, (0.0, 0.2, 0.0)), 0.1)


def test_make_section_beta_too_large():
    with pytest.raises(BetaTooLarge):
        make_section(CAT, _pt(CAT, (0.3, 0.3, 0.3)), 0.5)


def test_radius_linear_in_beta():
    x = _pt(TORUS, (-0.7, 0.1, 0.0))
    r1 = make_section(TORUS, x, 0.05).radius
    r2 = make_section(TORUS, x, 0.10).radius
    assert r2 == pytest.approx(2 * r1)


def test_section_coords_roundtrip():
    sec = make_section(CAT, _pt(CAT, (0.4, 0.6, 0.3)), 0.1)
    u = np.array([0.03, -0.04])
    p = section_point(CAT, sec, u)
    assert np.allclose(section_coords(CAT, sec, p), u, atol=1e-12)


def test_holonomy_base_maps_to_base():
    x = _pt(CAT, (0.2, 0.8, 0.6))
    sec = make_section(CAT, x, 0.1)
    res = holonomy(CAT, sec, 1.0, x)
    assert res.hit_time == pytest.approx(1.0, abs=1e-9)
    assert res.distance_to_base <= 1e-9
    assert res.tube_ok


def test_holonomy_matches_analytic_map_small():
    """Numerical holonomy vs the closed-form section map, forward and back."""
    rng = np.random.default_rng(31)
    beta = 0.1
    L = CAT.rescale.L
    for t in (1.0, 2.0, -1.0, 5.0, -5.0, 3.5):
        dom = beta / L ** abs(t)
        for _ in range(25):
            x = _pt(CAT, rng.uniform(0, 1, size=3))
            sec = make_section(CAT, x, beta)
            u = rng.uniform(-1, 1, size=2)
            u *= rng.uniform(0, 0.95) * dom / max(np.linalg.norm(u), 1e-12)
            y = section_point(CAT, sec, u)
            res = holonomy(CAT, sec, t, y)
            expect = CAT.analytic_holonomy(x, t, u)
            assert np.linalg.norm(res.image_coords - expect) < 1e-6


def test_holonomy_solid_torus_disk_isometry():
    x = _pt(TORUS, (0.5, 0.0, 0.0))
    sec = make_section(TORUS, x, 0.1)
    y = _pt(TORUS, (0.5, 0.01, 0.0))
    res = holonomy(TORUS, sec, 1.0, y)
    assert np.allclose(res.image.coords[1:], (0.01, 0.0), atol=1e-9)
    assert res.image.coords[0] == pytest.approx(res.target.base.coords[0], abs=1e-9)
    assert np.allclose(res.image_coords, section_coords(TORUS, sec, y), atol=1e-9)


def test_rescaled_tube_property_sampled():
    """tube_ok holds for y inside the beta / L^t domain (both example flows)."""
    rng = np.random.default_rng(32)
    beta = 0.1
    for flow, tmin in ((CAT, 0.5), (TORUS, 0.05)):
        L = flow.rescale.L
        for _ in range(40):
            t = rng.uniform(tmin, 3.0)
            if flow is TORUS:
                x = sample_points(flow, 1, seed=rng.integers(1 << 30),
                                  x_range=(0.1, 1.9))[0]
            else:
                x = _pt(flow, rng.uniform(0, 1, size=3))
            sec = make_section(flow, x, beta)
            u = rng.uniform(-1, 1, size=2)
            u *= rng.uniform(0, 0.95) * (beta / L ** t) * sec.base_field_norm \
                / max(np.linalg.norm(u), 1e-12)
            y = section_point(flow, sec, u)
            res = holonomy(flow, sec, t, y, radius_slack=4.0)
            assert res.tube_ok, (flow.name, t, u)


def test_holonomy_injectivity_probe():
    rng = np.random.default_rng(33)
    x = _pt(CAT, (0.35, 0.55, 0.45))
    sec = make_section(CAT, x, 0.1)
    dom = 0.1 / CAT.rescale.L
    images = []
    for _ in range(60):
        u = rng.uniform(-1, 1, size=2)
        u *= rng.uniform(0.05, 0.95) * dom / max(np.linalg.norm(u), 1e-12)
        res = holonomy(CAT, sec, 1.0, section_point(CAT, sec, u))
        images.append(res.image_coords)
    images = np.array(images)
    for i in range(len(images)):
        d = np.linalg.norm(images - images[i], axis=1)
        d[i] = np.inf
        assert np.min(d) > 1e-9


def test_holonomy_orbit_empty():
    x = _pt(CAT, (0.2, 0.2, 0.2))
    out = holonomy_orbit(CAT, x, 0.1, 1.0, 0, x)
    assert out.results == [] and out.error is None


def test_holonomy_orbit_matrix_powers():
    x = _pt(CAT, (0.31, 0.41, 0.59))
    sec_dom = 0.1 / CAT.rescale.L ** 3
    u = np.array([0.6, -0.3]) * sec_dom
    sec = make_section(CAT, x, 0.1)
    y = section_point(CAT, sec, u)
    out = holonomy_orbit(CAT, x, 0.1, 1.0, 3, y)
    assert out.error is None and len(out.results) == 3
    m = np.eye(2)
    for k in range(3):
        m = CAT_MATRIX @ m
        expect = m @ u
        got = out.results[k].image_coords
        assert np.linalg.norm(got - expect) < 1e-6, k
    # offsets grow with the top eigenvalue
    n0 = np.linalg.norm(u)
    n3 = np.linalg.norm(out.results[2].image_coords)
    assert n3 > LAMBDA_PLUS ** 2 * n0


def test_holonomy_orbit_torus_offset_point_leaves_tube():
    """Constant transverse offsets outlive the shrinking rescaled radius."""
    x = _pt(TORUS, (-0.5, 0.0, 0.0))
    y = _pt(TORUS, (-0.5, 0.005, 0.0))
    out = holonomy_orbit(TORUS, x, 0.1, 1.0, 40, y, radius_slack=1.0)
    assert isinstance(out.error, LeftTube)
    assert out.error_step <= 10
    # transverse coordinates and hit times are exact while the orbit exists
    for res in out.results:
        assert res.hit_time == pytest.approx(1.0, abs=1e-6)
        assert np.allclose(res.image.coords[1:], (0.005, 0.0), atol=1e-9)


def test_holonomy_orbit_torus_base_chain_reaches_singular_region():
    """The base orbit itself stops with an explicit error once ||X|| underflows."""
    x = _pt(TORUS, (-0.5, 0.0, 0.0))
    out = holonomy_orbit(TORUS, x, 0.1, 1.0, 40, x)
    assert isinstance(out.error, (SingularBase, Timeout))
    assert 20 <= out.error_step <= 35
