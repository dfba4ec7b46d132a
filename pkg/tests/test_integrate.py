"""Flow map correctness: identities, analytic solutions, group property,
time reversal, an independent scipy cross-check, and crossing location."""

import math

import numpy as np
import pytest

from rflowlab.errors import LeftTube, NoCrossing
from rflowlab.flows import CAT_MATRIX, get_flow
from rflowlab.integrate import first_crossing, flow_map, orbit, orbit_batch
from rflowlab.sections import make_section

TORUS = get_flow("solid_torus")
CAT = get_flow("cat_suspension")
RIGID = get_flow("rigid_rotation")


def _pt(flow, coords):
    return flow.manifold.wrap(coords)


def test_flow_map_identity_at_zero():
    x = _pt(TORUS, (0.3, 0.1, 0.2))
    assert flow_map(TORUS, x, 0.0) is x


def test_rigid_rotation_period_four():
    x = _pt(RIGID, (0.0, 0.5, 0.0))
    y = flow_map(RIGID, x, 4.0)
    assert np.allclose(y.coords, x.coords, atol=1e-8)


def test_solid_torus_exponential_escape():
    x = _pt(TORUS, (0.5, 0.0, 0.0))
    y = flow_map(TORUS, x, math.log(2.0))
    assert np.allclose(y.coords, (1.0, 0.0, 0.0), atol=1e-8)


def test_solid_torus_decay_toward_singular_disk():
    x = _pt(TORUS, (-0.5, 0.2, 0.1))
    y = flow_map(TORUS, x, 3.0)
    assert y.coords[0] == pytest.approx(-0.5 * math.exp(-3.0), abs=1e-8)
    assert np.allclose(y.coords[1:], (0.2, 0.1), atol=1e-10)


def test_cat_suspension_crosses_gluing():
    v = np.array([0.2, 0.3])
    x = _pt(CAT, (v[0], v[1], 0.25))
    y = flow_map(CAT, x, 1.0)
    expect = (CAT_MATRIX @ v) % 1.0
    assert np.allclose(y.coords[:2], expect, atol=1e-9)
    assert y.coords[2] == pytest.approx(0.25, abs=1e-9)


def test_group_property():
    rng = np.random.default_rng(21)
    tol = 1e-9
    for flow in (TORUS, CAT, RIGID):
        for _ in range(100):
            raw = rng.uniform(0.05, 0.95, size=3)
            if flow.manifold.disk_axes is not None:
                raw = np.array([rng.uniform(-1.9, 1.9), 0.4 * raw[1], 0.4 * raw[2]])
            x = flow.manifold.wrap(raw)
            a, b = rng.uniform(0.1, 1.5, size=2)
            one = flow_map(flow, flow_map(flow, x, a, tol=tol), b, tol=tol)
            two = flow_map(flow, x, a + b, tol=tol)
            assert flow.manifold.distance(one, two) <= 10 * tol * (a + b + 1)


def test_time_reversal():
    rng = np.random.default_rng(22)
    tol = 1e-9
    for flow in (TORUS, CAT, RIGID):
        for _ in range(30):
            raw = rng.uniform(0.05, 0.95, size=3)
            if flow.manifold.disk_axes is not None:
                raw = np.array([rng.uniform(-1.9, 1.9), 0.4 * raw[1], 0.4 * raw[2]])
            x = flow.manifold.wrap(raw)
            t = rng.uniform(0.2, 5.0)
            back = flow_map(flow, flow_map(flow, x, t, tol=tol), -t, tol=tol)
            assert flow.manifold.distance(back, x) <= 10 * tol * (2 * t + 1)


def test_transverse_coordinates_preserved():
    """Rigid rotation and suspension move transverse coordinates only at gluings."""
    x = _pt(RIGID, (0.3, 0.25, -0.4))
    y = flow_map(RIGID, x, 2.7)
    assert np.allclose(y.coords[1:], x.coords[1:], atol=1e-10)
    x = _pt(CAT, (0.3, 0.7, 0.1))
    y = flow_map(CAT, x, 0.5)  # no gluing crossed
    assert np.allclose(y.coords[:2], x.coords[:2], atol=1e-10)


def test_against_scipy_oracle():
    """Independent check of the custom integrator on the solid torus."""
    from scipy.integrate import solve_ivp

    def rhs(_t, y):
        return TORUS.field(y)

    x0 = np.array([-1.7, 0.3, -0.2])
    t_end = 2.5
    ref = solve_ivp(rhs, (0, t_end), x0, rtol=1e-11, atol=1e-12, method="DOP853")
    ours = flow_map(TORUS, _pt(TORUS, x0), t_end, tol=1e-10)
    assert np.allclose(ours.coords, ref.y[:, -1], atol=1e-7)


def test_orbit_sampling_monotone():
    x = _pt(TORUS, (0.5, 0.1, 0.0))
    times = np.array([-1.0, -0.5, 0.0, 0.25, 0.5])
    seg = orbit(TORUS, x, times)
    assert len(seg.points) == 5
    assert np.allclose(seg.points[2].coords, x.coords, atol=1e-12)
    xs = [p.coords[0] for p in seg.points]
    assert all(np.diff(xs) > 0)  # rightward drift on (0, 1)


def test_orbit_batch_matches_scalar():
    rng = np.random.default_rng(23)
    pts = np.stack([rng.uniform(-1.9, 1.9, size=8),
                    rng.uniform(-0.4, 0.4, size=8),
                    rng.uniform(-0.4, 0.4, size=8)], axis=1)
    times = np.array([0.0, 0.5, 1.0, 2.0])
    batch = orbit_batch(TORUS, pts, times, tol=1e-10)
    for i in range(8):
        for j, t in enumerate(times):
            ref = flow_map(TORUS, _pt(TORUS, pts[i]), float(t), tol=1e-10)
            assert TORUS.manifold.distance_array(batch[i, j], ref.coords) < 1e-7


def test_first_crossing_at_base():
    x = _pt(CAT, (0.4, 0.6, 0.3))
    sec = make_section(CAT, x, 0.1)
    ev = first_crossing(CAT, x, sec, window=(-0.01, 0.01))
    assert abs(ev.hit_time) <= 1e-9
    assert abs(ev.residual) <= 1e-10
    assert CAT.manifold.distance(ev.hit_point, x) <= 1e-9


def test_first_crossing_cat_gluing():
    base = _pt(CAT, (0.7, 0.5, 0.0))
    sec = make_section(CAT, base, 0.25)
    y = _pt(CAT, (0.2, 0.3, 0.5))
    ev = first_crossing(CAT, y, sec, window=(0.0, 1.0))
    assert ev.hit_time == pytest.approx(0.5, abs=1e-9)
    # the hit sits on the identified fiber; compare as manifold points
    assert CAT.manifold.distance(ev.hit_point, base) <= 1e-9
    assert np.allclose(ev.offset_coords, (0.0, 0.0), atol=1e-9)


def test_first_crossing_left_tube():
    base = _pt(RIGID, (0.0, 0.0, 0.0))
    sec = make_section(RIGID, base, 0.1)
    y = _pt(RIGID, (2.0, 0.5, 0.0))
    with pytest.raises(LeftTube) as exc:
        first_crossing(RIGID, y, sec, window=(0.0, 4.0))
    assert exc.value.hit_time == pytest.approx(2.0, abs=1e-6)


def test_first_crossing_no_crossing():
    base = _pt(RIGID, (0.0, 0.0, 0.0))
    sec = make_section(RIGID, base, 0.1)
    y = _pt(RIGID, (1.0, 0.0, 0.0))
    with pytest.raises(NoCrossing):
        first_crossing(RIGID, y, sec, window=(0.0, 0.5))


def test_t_max_validation():
    x = _pt(RIGID, (0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        flow_map(RIGID, x, 500.0)
