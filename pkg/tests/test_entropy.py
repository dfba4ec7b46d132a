"""Separated-set counts and entropy estimates at module-test scale."""

import numpy as np
import pytest

from rflowlab.entropy import entropy_estimate, separated_count
from rflowlab.errors import Saturated, StepTooCoarse
from rflowlab.flows import LAMBDA_PLUS, get_flow, sample_points

TORUS = get_flow("solid_torus")
CAT = get_flow("cat_suspension")
RIGID = get_flow("rigid_rotation")


def _line_samples(xs):
    return [RIGID.manifold.wrap((float(x), 0.0, 0.0)) for x in xs]


def test_count_one_when_nothing_separates():
    pts = _line_samples([0.0, 0.01, 0.02, 0.03])
    assert separated_count(RIGID, pts, 0.0, 0.2, 0.05) == 1


def test_rigid_counts_independent_of_t():
    rng = np.random.default_rng(51)
    pts = sample_points(RIGID, 300, seed=51)
    c0 = separated_count(RIGID, pts, 0.0, 0.2, 0.05)
    c4 = separated_count(RIGID, pts, 4.0, 0.2, 0.05)
    assert c0 == c4
    del rng


def test_greedy_equals_brute_force_on_line_instances():
    """Rigid-rotation samples on an axis arc: the separation graph is an
    interval packing, where a left-to-right greedy is exactly maximal."""
    rng = np.random.default_rng(52)
    for trial in range(5):
        xs = np.sort(rng.uniform(-0.9, 0.9, size=40))
        eps = float(rng.uniform(0.05, 0.3))
        pts = _line_samples(xs)
        got = separated_count(RIGID, pts, 1.0, eps, 0.05)
        # DP oracle: maximum subset with pairwise gaps > eps
        best = np.ones(len(xs), dtype=int)
        for i in range(len(xs)):
            for j in range(i):
                if xs[i] - xs[j] > eps:
                    best[i] = max(best[i], best[j] + 1)
        assert got == int(np.max(best)), (trial, eps)


def test_step_too_coarse():
    pts = sample_points(CAT, 50, seed=53)
    with pytest.raises(StepTooCoarse):
        separated_count(CAT, pts, 1.0, 0.1, 0.2)


def test_entropy_rigid_slope_zero():
    rep = entropy_estimate(RIGID, {"count": 500, "seed": 54}, [0.2, 0.1],
                           [0.0, 1.0, 2.0, 3.0, 4.0], 0.05)
    assert abs(rep.verdict) <= 0.02
    assert rep.monotone_in_t and rep.monotone_in_eps


def test_entropy_cat_growth_rate_coarse():
    rep = entropy_estimate(CAT, {"count": 3000, "seed": 55}, [0.2],
                           [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0], 0.05)
    assert rep.monotone_in_t
    assert rep.slopes[0] == pytest.approx(np.log(LAMBDA_PLUS), rel=0.35)


def test_entropy_torus_bounded_growth_coarse():
    rep = entropy_estimate(
        TORUS,
        {"count": 1500, "seed": 56, "x_range": (0.05, 1.95),
         "disk_radius_max": 0.95},
        [0.2], [2.0, 3.0, 4.0, 5.0, 6.0], 0.05)
    assert abs(rep.verdict) <= 0.1


def test_entropy_saturated():
    with pytest.raises(Saturated):
        entropy_estimate(CAT, {"count": 30, "seed": 57}, [0.05],
                         [0.0, 1.0, 2.0, 3.0], 0.025)


def test_entropy_deterministic():
    spec = {"count": 400, "seed": 58}
    a = entropy_estimate(CAT, spec, [0.2], [0.0, 1.0, 2.0], 0.05)
    b = entropy_estimate(CAT, spec, [0.2], [0.0, 1.0, 2.0], 0.05)
    assert np.array_equal(a.counts, b.counts)


def test_neighbor_screen_tree_matches_fallback(monkeypatch):
    """KD-tree deck-copy screen and the exact pairwise fallback agree."""
    import rflowlab.entropy as ent

    pts = sample_points(CAT, 300, seed=60)
    coords = np.stack([p.coords for p in pts])
    cache = ent._OrbitCache(CAT, coords, 1.0, 0.05)
    with_tree = cache.neighbor_lists(0.2)
    monkeypatch.setattr(ent, "cKDTree", None)
    without = cache.neighbor_lists(0.2)
    for a, b in zip(with_tree, without):
        assert np.array_equal(np.sort(a), np.sort(b))


def test_report_serialization(tmp_path):
    rep = entropy_estimate(RIGID, {"count": 200, "seed": 59}, [0.2, 0.1],
                           [0.0, 1.0, 2.0], 0.05)
    csv_path = tmp_path / "counts.csv"
    json_path = tmp_path / "summary.json"
    rep.to_csv(csv_path)
    rep.to_json(json_path)
    dats = rep.to_dat(tmp_path / "counts_eps{eps}.dat")
    assert csv_path.read_text().startswith("eps,t,count\n")
    assert "verdict" in json_path.read_text()
    assert len(dats) == 2
