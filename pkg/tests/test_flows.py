"""Flow catalog: field values, norms, singular sets, rescale constants."""

import math

import numpy as np
import pytest

from rflowlab.flows import (
    estimate_lipschitz,
    eval_field,
    field_norm,
    get_flow,
    reversed_flow,
    sample_points,
)

TORUS = get_flow("solid_torus")
CAT = get_flow("cat_suspension")
RIGID = get_flow("rigid_rotation")


def _pt(flow, coords):
    return flow.manifold.wrap(coords)


def test_solid_torus_field_values():
    assert np.allclose(eval_field(TORUS, _pt(TORUS, (0.0, 0.2, 0.0))), (0, 0, 0))
    assert np.allclose(eval_field(TORUS, _pt(TORUS, (-0.5, 0.0, 0.0))), (0.5, 0, 0))
    assert np.allclose(eval_field(TORUS, _pt(TORUS, (1.5, 0.0, 0.0))), (1.0, 0, 0))


def test_field_norms():
    assert field_norm(TORUS, _pt(TORUS, (-0.5, 0, 0))) == pytest.approx(0.5)
    assert field_norm(TORUS, _pt(TORUS, (0.0, 0.3, 0.1))) == 0.0
    assert field_norm(CAT, _pt(CAT, (0.12, 0.9, 0.4))) == pytest.approx(1.0)
    assert field_norm(RIGID, _pt(RIGID, (1.7, 0.2, 0.1))) == pytest.approx(1.0)


def test_singular_predicate_matches_field_norm():
    rng = np.random.default_rng(2)
    for flow in (TORUS, CAT, RIGID):
        pts = np.stack([p.coords for p in sample_points(flow, 10_000, seed=4)])
        # include exact singular points for the torus
        if flow is TORUS:
            pts[:50, 0] = 0.0
        norms = np.linalg.norm(flow.field(pts), axis=-1)
        pred = flow.singular_predicate(pts)
        assert np.array_equal(pred, norms < 1e-12)
    del rng


def test_field_continuity_lipschitz():
    """||X(p) - X(q)|| <= Lip * d(p, q) on nearby random pairs."""
    rng = np.random.default_rng(9)
    for flow in (TORUS, CAT, RIGID):
        lip = math.log(estimate_lipschitz(flow, samples=500, seed=1).L)
        pts = np.stack([p.coords for p in sample_points(flow, 10_000, seed=5)])
        delta = rng.normal(size=pts.shape) * 1e-3
        if flow.manifold.disk_axes is not None:
            qs = pts.copy()
            qs[:, 0] += delta[:, 0]  # perturb along the axis only, stay in disk
        else:
            qs = pts + delta
        qs = flow.manifold.wrap_array(qs)
        dv = np.linalg.norm(flow.field(pts) - flow.field(qs), axis=-1)
        dd = flow.manifold.distance_array(pts, qs)
        assert np.all(dv <= lip * dd + 1e-10)


def test_eval_field_pure():
    x = _pt(TORUS, (0.37, 0.11, -0.05))
    a = eval_field(TORUS, x)
    b = eval_field(TORUS, x)
    assert np.array_equal(a, b)


def test_lipschitz_estimates():
    assert estimate_lipschitz(RIGID, samples=300, seed=0).L == pytest.approx(1.0, abs=1e-9)
    assert estimate_lipschitz(CAT, samples=300, seed=0).L == pytest.approx(1.0, abs=1e-9)
    est = estimate_lipschitz(TORUS, samples=1000, seed=0)
    assert est.L == pytest.approx(math.e, rel=1e-6)
    assert est.beta0 == pytest.approx(0.25 / math.e, rel=1e-6)


def test_rescale_invariants():
    for flow in (TORUS, CAT, RIGID):
        assert flow.rescale.L >= 1.0
        assert flow.rescale.beta0 > 0.0


def test_estimate_requires_samples():
    with pytest.raises(ValueError):
        estimate_lipschitz(TORUS, samples=10)


def test_reversed_flow_negates_field():
    rev = reversed_flow(CAT)
    x = _pt(CAT, (0.1, 0.2, 0.3))
    assert np.allclose(eval_field(rev, x), -eval_field(CAT, x))
    assert rev.name == "cat_suspension_reversed"


def test_singular_set_is_the_zero_disk():
    xs = np.linspace(-2, 2, 2001)
    pts = np.stack([xs, np.zeros_like(xs), np.zeros_like(xs)], axis=1)
    norms = np.linalg.norm(TORUS.field(pts), axis=-1)
    assert np.all((norms > 0) == (np.abs(xs) > 1e-12))
