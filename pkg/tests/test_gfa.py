"""Placement stage: Weiszfeld iteration, location-allocation, linkages."""

import numpy as np
import pytest

from chainforge.errors import InfeasibleConfigError, ValidationError
from chainforge.gfa import (GfaConfig, assign_linkages, locate_region,
                            run_gfa, weighted_effort, weiszfeld_single)
from chainforge.model import instance_from_dict
from conftest import tiny_dict


def grid_search_effort(points, weights, step=0.1):
    """Brute-force reference: best weighted effort on a coordinate grid."""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    gx = np.arange(min(xs) - 1.0, max(xs) + 1.0 + step / 2, step)
    gy = np.arange(min(ys) - 1.0, max(ys) + 1.0 + step / 2, step)
    best = float("inf")
    pts = np.asarray(points)
    wts = np.asarray(weights)
    for x in gx:
        d = np.hypot(pts[:, 0] - x, pts[:, 1] - gy[:, None])
        totals = d @ wts
        best = min(best, float(totals.min()))
    return best


def test_single_point_is_its_own_median():
    result = weiszfeld_single([(3.0, 4.0)], [2.0])
    assert result.location == (3.0, 4.0)
    assert result.objective == 0.0
    assert result.converged


def test_dominant_weight_pulls_to_that_point():
    # One customer outweighs all others combined, so the weighted median
    # sits on it.
    points = [(0.0, 0.0), (10.0, 0.0), (5.0, 8.0)]
    weights = [1.0, 1.0, 10.0]
    result = weiszfeld_single(points, weights)
    assert result.location[0] == pytest.approx(5.0, abs=1e-3)
    assert result.location[1] == pytest.approx(8.0, abs=1e-3)


def test_symmetric_square_median_is_center():
    points = [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0)]
    result = weiszfeld_single(points, [1.0] * 4)
    assert result.location[0] == pytest.approx(1.0, abs=1e-6)
    assert result.location[1] == pytest.approx(1.0, abs=1e-6)


def test_objective_trace_descends():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        points = [tuple(p) for p in rng.uniform(0, 50, size=(n, 2))]
        weights = list(rng.uniform(0.5, 20.0, size=n))
        result = weiszfeld_single(points, weights)
        trace = result.objective_trace
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
        assert result.objective == pytest.approx(
            weighted_effort(result.location, points, weights))


def test_matches_grid_search():
    rng = np.random.default_rng(5)
    for _ in range(5):
        n = int(rng.integers(2, 7))
        points = [tuple(p) for p in rng.uniform(0, 30, size=(n, 2))]
        weights = list(rng.uniform(1.0, 10.0, size=n))
        result = weiszfeld_single(points, weights)
        reference = grid_search_effort(points, weights)
        assert result.objective <= reference * 1.005 + 1e-9


def test_weiszfeld_input_validation():
    with pytest.raises(ValidationError):
        weiszfeld_single([], [])
    with pytest.raises(ValidationError):
        weiszfeld_single([(0.0, 0.0)], [1.0, 2.0])


def test_locate_region_single_center_matches_weiszfeld(tiny):
    region = tiny.region("R1")
    config = GfaConfig(restarts=3)
    placement = locate_region(region, 1, config, np.random.default_rng(0))
    direct = weiszfeld_single([c.location for c in region.customers],
                              [c.demand.mean for c in region.customers])
    assert placement.objective == pytest.approx(direct.objective, rel=1e-3)
    assert set(placement.assignment.values()) == {0}


def test_locate_region_rejects_bad_counts(tiny):
    region = tiny.region("R1")
    config = GfaConfig()
    rng = np.random.default_rng(0)
    with pytest.raises(InfeasibleConfigError):
        locate_region(region, 0, config, rng)
    with pytest.raises(InfeasibleConfigError):
        locate_region(region, 4, config, rng)
    with pytest.raises(InfeasibleConfigError):
        locate_region(region, 2, config, rng, initial=[(0.0, 0.0)])


def test_assign_linkages_nearest(tiny, tiny_design):
    assert tiny_design.customer_dc == {
        "C1": "D1", "C2": "D1", "C3": "D2", "C4": "D3", "C5": "D3"}
    assert tiny_design.dc_warehouse == {"D1": "W1", "D2": "W1", "D3": "W2"}
    assert tiny_design.mean_local_demand == {
        "D1": 80.0, "D2": 40.0, "D3": 65.0}
    assert tiny_design.linked("D1", "C1")
    assert not tiny_design.linked("D1", "C3")


def test_assign_linkages_tie_breaks_on_lower_id():
    data = tiny_dict()
    # C2 exactly between D1 (2,1) and D2 (8,1); DC equidistant from both
    # warehouses.
    data["regions"][0]["customers"][1]["location"] = [5.0, 1.0]
    data["regions"][1]["dcs"][0]["location"] = [15.0, 0.0]
    instance = instance_from_dict(data)
    design = assign_linkages(
        instance, {dc.id: dc.location for dc in instance.dcs()})
    assert design.customer_dc["C2"] == "D1"
    assert design.dc_warehouse["D3"] == "W1"


def test_assign_linkages_distance_matrix(tiny, tiny_design):
    assert tiny_design.distances["D1"]["C1"] == pytest.approx(2.0 ** 0.5)
    assert tiny_design.distances["D2"]["C3"] == pytest.approx(2.0 ** 0.5)
    # The matrix is complete, even across regions.
    assert tiny_design.distances["D1"]["C4"] == pytest.approx(30.0)


def test_run_gfa_converges_and_covers_all_dcs(tiny):
    result = run_gfa(tiny, GfaConfig(rng_seed=1))
    assert result.converged
    assert set(result.design.dc_locations) == {"D1", "D2", "D3"}
    assert set(result.region_objectives) == {"R1", "R2"}
    assert all(v >= 0.0 for v in result.region_objectives.values())
    total = sum(result.design.mean_local_demand.values())
    assert total == pytest.approx(40.0 * 4 + 25.0)


def test_run_gfa_is_deterministic(tiny):
    a = run_gfa(tiny, GfaConfig(rng_seed=9))
    b = run_gfa(tiny, GfaConfig(rng_seed=9))
    assert a.design.dc_locations == b.design.dc_locations
    assert a.region_objectives == b.region_objectives


def test_run_gfa_beats_declared_locations(tiny):
    # The optimizer is free to keep the declared sites, so its weighted
    # effort can only match or beat them.
    declared = assign_linkages(tiny, {dc.id: dc.location for dc in tiny.dcs()})
    placed = run_gfa(tiny, GfaConfig(rng_seed=2))
    for region in tiny.regions:
        declared_effort = sum(
            c.demand.mean * declared.distances[declared.customer_dc[c.id]][c.id]
            for c in region.customers)
        assert (placed.region_objectives[region.id]
                <= declared_effort + 1e-9)
