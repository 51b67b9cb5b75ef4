"""Green field analysis: demand-weighted center-of-gravity placement.

Each region gets K candidate distribution centers.  A single center is the
weighted geometric median of its customers, found by Weiszfeld fixed-point
iteration; K > 1 centers come from alternating nearest-center assignment
with per-cluster Weiszfeld refinement, restarted from random customer
subsets to escape poor local partitions.  Warehouses then link to their
nearest DC choices: every DC gets its nearest warehouse and every customer
its nearest DC within the region, keeping the single-channel structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InfeasibleConfigError, ValidationError
from .model import (NetworkDesign, NetworkInstance, Region,
                    derive_mean_local_demand, euclidean_distance)

# Guard against division by zero when an iterate lands on a demand point.
_SINGULARITY_EPS = 1e-9


@dataclass(frozen=True)
class GfaConfig:
    """Knobs for the placement stage.

    dc_count_per_region may override the number of centers per region;
    when given it must agree with the DC entities declared in the
    instance, since those carry the capacities the later stages use.
    """

    dc_count_per_region: Mapping[str, int] | None = None
    max_iterations: int = 200
    tolerance: float = 1e-4
    restarts: int = 8
    rng_seed: int = 0


@dataclass(frozen=True)
class WeiszfeldResult:
    location: tuple[float, float]
    objective: float
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...]


def weighted_effort(location: tuple[float, float],
                    points: Sequence[tuple[float, float]],
                    weights: Sequence[float]) -> float:
    """Demand-weighted total distance from one location to all points."""
    return sum(w * euclidean_distance(location, p) for p, w in zip(points, weights))


def weiszfeld_single(points: Sequence[tuple[float, float]],
                     weights: Sequence[float],
                     *, max_iterations: int = 200,
                     tolerance: float = 1e-4,
                     initial: tuple[float, float] | None = None) -> WeiszfeldResult:
    """Weighted geometric median by Weiszfeld fixed-point iteration.

    Starts from the weighted centroid (or ``initial``) and repeats the
    inverse-distance-weighted update until the step is below tolerance.
    The weighted-effort objective is recorded each iteration; the update
    is a descent step, which the tests assert.
    """
    if len(points) == 0:
        raise ValidationError("weiszfeld_single needs at least one point")
    if len(points) != len(weights):
        raise ValidationError("points and weights must have equal length")
    if any(w < 0 for w in weights):
        raise ValidationError("weights must be >= 0")
    total_weight = float(sum(weights))
    if total_weight <= 0:
        raise ValidationError("at least one weight must be positive")

    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    ws = np.array(weights, dtype=float)

    if initial is None:
        px = float(np.dot(ws, xs) / total_weight)
        py = float(np.dot(ws, ys) / total_weight)
    else:
        px, py = float(initial[0]), float(initial[1])

    trace = [float(np.dot(ws, np.hypot(xs - px, ys - py)))]
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        dist = np.hypot(xs - px, ys - py)
        safe = np.maximum(dist, _SINGULARITY_EPS)
        pull = ws / safe
        denom = float(pull.sum())
        nx = float(np.dot(pull, xs) / denom)
        ny = float(np.dot(pull, ys) / denom)
        step = math.hypot(nx - px, ny - py)
        px, py = nx, ny
        trace.append(float(np.dot(ws, np.hypot(xs - px, ys - py))))
        if step <= tolerance:
            converged = True
            break
    return WeiszfeldResult(location=(px, py), objective=trace[-1],
                           iterations=iterations, converged=converged,
                           objective_trace=tuple(trace))


@dataclass(frozen=True)
class RegionPlacement:
    locations: tuple[tuple[float, float], ...]
    assignment: dict[str, int]  # customer id -> slot
    objective: float
    iterations: int
    converged: bool


def _nearest_slot(point: tuple[float, float],
                  locations: Sequence[tuple[float, float]]) -> int:
    best = 0
    best_d = euclidean_distance(point, locations[0])
    for k in range(1, len(locations)):
        d = euclidean_distance(point, locations[k])
        if d < best_d:
            best, best_d = k, d
    return best


def locate_region(region: Region, k: int, config: GfaConfig,
                  rng: np.random.Generator,
                  initial: Sequence[tuple[float, float]] | None = None) -> RegionPlacement:
    """Place k centers for one region by location-allocation.

    Runs ``config.restarts`` starts: the first from ``initial`` when
    given (the instance's declared DC locations), the rest from random
    distinct customer sites.  Each start alternates nearest-center
    assignment with per-cluster Weiszfeld until the assignment stops
    changing.  The best start by weighted effort wins.
    """
    customers = region.customers
    n = len(customers)
    if k < 1:
        raise InfeasibleConfigError(f"region {region.id}: need at least one DC")
    if k > n:
        raise InfeasibleConfigError(
            f"region {region.id}: {k} DCs requested for {n} customers")
    points = [c.location for c in customers]
    weights = [c.demand.mean for c in customers]

    best: RegionPlacement | None = None
    for restart in range(max(1, config.restarts)):
        if restart == 0 and initial is not None:
            if len(initial) != k:
                raise InfeasibleConfigError(
                    f"region {region.id}: {len(initial)} initial locations for {k} DCs")
            locations = [tuple(map(float, p)) for p in initial]
        else:
            chosen = rng.choice(n, size=k, replace=False)
            locations = [points[int(i)] for i in chosen]

        assignment = [_nearest_slot(p, locations) for p in points]
        iterations = 0
        converged = False
        for iterations in range(1, config.max_iterations + 1):
            # Re-center every cluster on its weighted geometric median.
            new_locations = list(locations)
            for slot in range(k):
                members = [i for i in range(n) if assignment[i] == slot]
                if not members:
                    # Re-seed an empty cluster on the customer farthest
                    # from its current center.
                    far = max(range(n),
                              key=lambda i: euclidean_distance(
                                  points[i], locations[assignment[i]]))
                    new_locations[slot] = points[far]
                    assignment[far] = slot
                    continue
                sub = weiszfeld_single(
                    [points[i] for i in members], [weights[i] for i in members],
                    max_iterations=config.max_iterations, tolerance=config.tolerance,
                    initial=locations[slot])
                new_locations[slot] = sub.location
            moved = max(euclidean_distance(a, b)
                        for a, b in zip(locations, new_locations))
            locations = new_locations
            new_assignment = [_nearest_slot(p, locations) for p in points]
            if new_assignment == assignment and moved <= config.tolerance:
                converged = True
                break
            assignment = new_assignment

        objective = sum(
            weights[i] * euclidean_distance(points[i], locations[assignment[i]])
            for i in range(n))
        placement = RegionPlacement(
            locations=tuple(locations),
            assignment={customers[i].id: assignment[i] for i in range(n)},
            objective=objective, iterations=iterations, converged=converged)
        if best is None or placement.objective < best.objective - 1e-12:
            best = placement
    assert best is not None
    return best


@dataclass(frozen=True)
class GfaResult:
    design: NetworkDesign
    region_objectives: dict[str, float]
    iterations_used: dict[str, int]
    converged: bool


def assign_linkages(instance: NetworkInstance,
                    dc_locations: Mapping[str, tuple[float, float]]) -> NetworkDesign:
    """Minimum-distance single-channel linkages for fixed DC locations.

    Every DC links to its nearest warehouse and every customer to the
    nearest DC inside its own region; distance ties break on the lower
    id.  Also derives each DC's expected local demand from the customer
    assignment.
    """
    dc_warehouse: dict[str, str] = {}
    customer_dc: dict[str, str] = {}
    distances: dict[str, dict[str, float]] = {}
    all_customers = instance.customers()
    for dc in instance.dcs():
        loc = dc_locations[dc.id]
        dc_warehouse[dc.id] = min(
            instance.warehouses,
            key=lambda w: (euclidean_distance(loc, w.location), w.id)).id
        distances[dc.id] = {
            c.id: euclidean_distance(loc, c.location) for c in all_customers}
    for region in instance.regions:
        for customer in region.customers:
            customer_dc[customer.id] = min(
                region.dcs,
                key=lambda dc: (distances[dc.id][customer.id], dc.id)).id
    design = NetworkDesign(
        dc_locations={dc.id: tuple(dc_locations[dc.id]) for dc in instance.dcs()},
        dc_warehouse=dc_warehouse, customer_dc=customer_dc, distances=distances,
        mean_local_demand={},
    )
    design.mean_local_demand.update(
        derive_mean_local_demand(instance, customer_dc))
    return design


def run_gfa(instance: NetworkInstance, config: GfaConfig | None = None) -> GfaResult:
    """Place all regions' DCs and wire up the network linkages."""
    config = config or GfaConfig()
    rng = np.random.default_rng(config.rng_seed)
    dc_locations: dict[str, tuple[float, float]] = {}
    objectives: dict[str, float] = {}
    iterations: dict[str, int] = {}
    all_converged = True
    for region in instance.regions:
        k = len(region.dcs)
        if config.dc_count_per_region is not None:
            requested = config.dc_count_per_region.get(region.id, k)
            if requested != k:
                raise InfeasibleConfigError(
                    f"region {region.id}: config requests {requested} DCs but the "
                    f"instance declares {k}")
        placement = locate_region(
            region, k, config, rng, initial=[dc.location for dc in region.dcs])
        for slot, dc in enumerate(region.dcs):
            dc_locations[dc.id] = placement.locations[slot]
        objectives[region.id] = placement.objective
        iterations[region.id] = placement.iterations
        all_converged = all_converged and placement.converged
    design = assign_linkages(instance, dc_locations)
    return GfaResult(design=design, region_objectives=objectives,
                     iterations_used=iterations, converged=all_converged)


def save_design(result: GfaResult, path: str) -> None:
    """Write a GfaResult as JSON."""
    import json

    design = result.design
    payload = {
        "dc_locations": {k: list(v) for k, v in sorted(design.dc_locations.items())},
        "z": dict(sorted(design.dc_warehouse.items())),
        "y": dict(sorted(design.customer_dc.items())),
        "distances": {dc: {c: d for c, d in sorted(row.items())}
                      for dc, row in sorted(design.distances.items())},
        "mean_local_demand": dict(sorted(design.mean_local_demand.items())),
        "region_objectives": dict(sorted(result.region_objectives.items())),
        "iterations_used": dict(sorted(result.iterations_used.items())),
        "converged": result.converged,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_design(path: str) -> GfaResult:
    """Read a design file written by save_design."""
    import json

    from .errors import ParseError

    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    try:
        design = NetworkDesign(
            dc_locations={k: (float(v[0]), float(v[1]))
                          for k, v in data["dc_locations"].items()},
            dc_warehouse=dict(data["z"]),
            customer_dc=dict(data["y"]),
            distances={dc: {c: float(d) for c, d in row.items()}
                       for dc, row in data["distances"].items()},
            mean_local_demand={k: float(v)
                               for k, v in data["mean_local_demand"].items()},
        )
        return GfaResult(
            design=design,
            region_objectives={k: float(v)
                               for k, v in data["region_objectives"].items()},
            iterations_used={k: int(v)
                             for k, v in data["iterations_used"].items()},
            converged=bool(data["converged"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: not a valid design file ({exc})") from exc
