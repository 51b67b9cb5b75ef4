"""Core network types, instance loading, and shared geometry.

An instance file is a single JSON object with the following keys (unknown
keys are rejected at every level):

    warehouses            list of {id, location, capacity, order_unit_cost}
                          order_unit_cost is either a number (uniform over
                          DCs) or a mapping of DC id to number
    regions               list of {id, local_food_cost, average_income,
                          residential_areas, unfulfilled_unit_cost,
                          dcs, customers} plus optional persons_per_area,
                          accessibility_weights {affordability,
                          transportation, quality}
    regions[].dcs         list of {id, location, capacity,
                          inventory_unit_cost}; the listed location is the
                          initial placement refined by the green field stage
    regions[].customers   list of {id, location} plus optional demand
                          overriding the instance-wide demand spec
    nutrients             list of {id, weight, min_requirement,
                          per_kg_content}
    path_weights          optional list of {dc, customer, factor}
    stochastic            {demand: {family: "normal", mean, variance|std},
                          supply_loss: {family: "uniform", low, high}}
                          supply_loss parameterizes the retained fraction
                          (1 - loss) applied to each shipment
    safety_stock_fraction fraction of each DC's capacity kept as a floor
    horizon               number of planning periods
    persons_per_area      default population per residential area
    normalization_scales  optional {affordability, transportation, quality}

Distances are Euclidean on the coordinate plane, in kilometres.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import ParseError, ValidationError

DEFAULT_PERSONS_PER_AREA = 50_000.0


def euclidean_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Straight-line distance between two coordinates."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class DemandSpec:
    """Per-period demand draw: normal, truncated at zero when sampled.

    The file may give the spread as ``variance`` or ``std``; both are held
    here as a standard deviation.
    """

    mean: float
    std: float

    def to_json(self) -> dict[str, Any]:
        return {"family": "normal", "mean": self.mean, "variance": self.std**2}


@dataclass(frozen=True)
class SupplyLossSpec:
    """Uniform distribution of the retained shipment fraction."""

    low: float
    high: float

    def to_json(self) -> dict[str, Any]:
        return {"family": "uniform", "low": self.low, "high": self.high}


@dataclass(frozen=True)
class AccessibilityWeights:
    affordability: float = 1.0
    transportation: float = 1.0
    quality: float = 1.0

    def to_json(self) -> dict[str, Any]:
        return {
            "affordability": self.affordability,
            "transportation": self.transportation,
            "quality": self.quality,
        }


@dataclass(frozen=True)
class Warehouse:
    id: str
    location: tuple[float, float]
    capacity: float
    order_unit_cost: Any  # float, or mapping of DC id -> float

    def order_cost(self, dc_id: str) -> float:
        if isinstance(self.order_unit_cost, Mapping):
            try:
                return float(self.order_unit_cost[dc_id])
            except KeyError:
                raise ValidationError(
                    f"warehouse {self.id} has no order cost for DC {dc_id}"
                ) from None
        return float(self.order_unit_cost)


@dataclass(frozen=True)
class DistributionCenter:
    id: str
    region_id: str
    location: tuple[float, float]
    capacity: float
    inventory_unit_cost: float


@dataclass(frozen=True)
class Customer:
    id: str
    region_id: str
    location: tuple[float, float]
    demand: DemandSpec


@dataclass(frozen=True)
class Region:
    id: str
    local_food_cost: float
    average_income: float
    residential_areas: int
    persons_per_area: float
    unfulfilled_unit_cost: float
    weights: AccessibilityWeights
    dcs: tuple[DistributionCenter, ...]
    customers: tuple[Customer, ...]

    @property
    def population(self) -> float:
        return self.residential_areas * self.persons_per_area


@dataclass(frozen=True)
class Nutrient:
    id: str
    weight: float
    min_requirement: float  # per person per period
    per_kg_content: float


@dataclass(frozen=True)
class NormalizationScales:
    affordability: float
    transportation: float
    quality: float


@dataclass(frozen=True)
class NetworkInstance:
    warehouses: tuple[Warehouse, ...]
    regions: tuple[Region, ...]
    nutrients: tuple[Nutrient, ...]
    demand: DemandSpec
    supply_loss: SupplyLossSpec
    safety_stock_fraction: float
    horizon: int
    path_weights: dict[tuple[str, str], float] = field(default_factory=dict)
    normalization_scales: NormalizationScales | None = None

    def dcs(self) -> list[DistributionCenter]:
        return [dc for region in self.regions for dc in region.dcs]

    def customers(self) -> list[Customer]:
        return [c for region in self.regions for c in region.customers]

    def region(self, region_id: str) -> Region:
        for region in self.regions:
            if region.id == region_id:
                return region
        raise KeyError(region_id)

    def warehouse(self, warehouse_id: str) -> Warehouse:
        for w in self.warehouses:
            if w.id == warehouse_id:
                return w
        raise KeyError(warehouse_id)

    def path_weight(self, dc_id: str, customer_id: str) -> float:
        return self.path_weights.get((dc_id, customer_id), 1.0)


@dataclass(frozen=True)
class NetworkDesign:
    """Single-channel network produced by the green field stage.

    dc_warehouse maps each DC to its sole supplying warehouse (the z
    linkage) and customer_dc maps each customer to its sole DC (the y
    linkage), so the exactly-one structure holds by construction.
    distances carries the full DC-by-customer matrix in kilometres and
    mean_local_demand the expected per-period demand routed to each DC.
    """

    dc_locations: dict[str, tuple[float, float]]
    dc_warehouse: dict[str, str]
    customer_dc: dict[str, str]
    distances: dict[str, dict[str, float]]
    mean_local_demand: dict[str, float]

    def linked(self, dc_id: str, customer_id: str) -> bool:
        return self.customer_dc.get(customer_id) == dc_id

    def customers_of(self, dc_id: str) -> list[str]:
        return [c for c, h in self.customer_dc.items() if h == dc_id]


# ---------------------------------------------------------------------------
# parsing helpers

_NUMERIC = (int, float)


def _require_keys(obj: Mapping[str, Any], where: str, required: Iterable[str],
                  optional: Iterable[str] = ()) -> None:
    if not isinstance(obj, Mapping):
        raise ParseError(f"{where}: expected an object")
    required = set(required)
    allowed = required | set(optional)
    missing = required - obj.keys()
    if missing:
        raise ParseError(f"{where}: missing key(s) {sorted(missing)}")
    unknown = obj.keys() - allowed
    if unknown:
        raise ParseError(f"{where}: unknown key(s) {sorted(unknown)}")


def _number(obj: Mapping[str, Any], where: str, key: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, _NUMERIC):
        raise ParseError(f"{where}.{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ParseError(f"{where}.{key}: must be finite")
    return value


def _string(obj: Mapping[str, Any], where: str, key: str) -> str:
    value = obj[key]
    if not isinstance(value, str) or not value:
        raise ParseError(f"{where}.{key}: expected a non-empty string")
    return value


def _location(obj: Mapping[str, Any], where: str) -> tuple[float, float]:
    value = obj["location"]
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, _NUMERIC) for v in value)):
        raise ParseError(f"{where}.location: expected [x, y]")
    x, y = float(value[0]), float(value[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ParseError(f"{where}.location: coordinates must be finite")
    return (x, y)


def _parse_demand(obj: Mapping[str, Any], where: str) -> DemandSpec:
    _require_keys(obj, where, ["family", "mean"], ["variance", "std"])
    if obj["family"] != "normal":
        raise ParseError(f"{where}.family: only 'normal' is supported")
    if ("variance" in obj) == ("std" in obj):
        raise ParseError(f"{where}: give exactly one of 'variance' or 'std'")
    mean = _number(obj, where, "mean")
    if "variance" in obj:
        variance = _number(obj, where, "variance")
        if variance < 0:
            raise ValidationError(f"{where}.variance: must be >= 0")
        std = math.sqrt(variance)
    else:
        std = _number(obj, where, "std")
        if std < 0:
            raise ValidationError(f"{where}.std: must be >= 0")
    if mean <= 0:
        raise ValidationError(f"{where}.mean: must be > 0")
    return DemandSpec(mean=mean, std=std)


def _parse_supply_loss(obj: Mapping[str, Any], where: str) -> SupplyLossSpec:
    _require_keys(obj, where, ["family", "low", "high"])
    if obj["family"] != "uniform":
        raise ParseError(f"{where}.family: only 'uniform' is supported")
    low = _number(obj, where, "low")
    high = _number(obj, where, "high")
    if not (0.0 <= low <= high <= 1.0):
        raise ValidationError(f"{where}: need 0 <= low <= high <= 1, got [{low}, {high}]")
    return SupplyLossSpec(low=low, high=high)


def _parse_weights(obj: Mapping[str, Any] | None, where: str) -> AccessibilityWeights:
    if obj is None:
        return AccessibilityWeights()
    _require_keys(obj, where, [], ["affordability", "transportation", "quality"])
    out = {}
    for key in ("affordability", "transportation", "quality"):
        if key in obj:
            value = _number(obj, where, key)
            if value < 0:
                raise ValidationError(f"{where}.{key}: must be >= 0")
            out[key] = value
    return AccessibilityWeights(**out)


def _parse_warehouse(obj: Mapping[str, Any], where: str) -> Warehouse:
    _require_keys(obj, where, ["id", "location", "capacity", "order_unit_cost"])
    wid = _string(obj, where, "id")
    capacity = _number(obj, where, "capacity")
    if capacity <= 0:
        raise ValidationError(f"{where}.capacity: must be > 0")
    cost = obj["order_unit_cost"]
    if isinstance(cost, Mapping):
        parsed: Any = {}
        for dc_id, value in cost.items():
            if isinstance(value, bool) or not isinstance(value, _NUMERIC) or value < 0:
                raise ValidationError(f"{where}.order_unit_cost[{dc_id}]: must be a number >= 0")
            parsed[str(dc_id)] = float(value)
    else:
        parsed = _number(obj, where, "order_unit_cost")
        if parsed < 0:
            raise ValidationError(f"{where}.order_unit_cost: must be >= 0")
    return Warehouse(id=wid, location=_location(obj, where), capacity=capacity,
                     order_unit_cost=parsed)


def _parse_dc(obj: Mapping[str, Any], region_id: str, where: str) -> DistributionCenter:
    _require_keys(obj, where, ["id", "location", "capacity", "inventory_unit_cost"])
    capacity = _number(obj, where, "capacity")
    if capacity <= 0:
        raise ValidationError(f"{where}.capacity: must be > 0")
    inv_cost = _number(obj, where, "inventory_unit_cost")
    if inv_cost < 0:
        raise ValidationError(f"{where}.inventory_unit_cost: must be >= 0")
    return DistributionCenter(id=_string(obj, where, "id"), region_id=region_id,
                              location=_location(obj, where), capacity=capacity,
                              inventory_unit_cost=inv_cost)


def _parse_customer(obj: Mapping[str, Any], region_id: str, default_demand: DemandSpec,
                    where: str) -> Customer:
    _require_keys(obj, where, ["id", "location"], ["demand"])
    demand = default_demand
    if "demand" in obj:
        demand = _parse_demand(obj["demand"], f"{where}.demand")
    return Customer(id=_string(obj, where, "id"), region_id=region_id,
                    location=_location(obj, where), demand=demand)


def _parse_region(obj: Mapping[str, Any], default_demand: DemandSpec,
                  default_persons: float, where: str) -> Region:
    _require_keys(
        obj, where,
        ["id", "local_food_cost", "average_income", "residential_areas",
         "unfulfilled_unit_cost", "dcs", "customers"],
        ["persons_per_area", "accessibility_weights"],
    )
    region_id = _string(obj, where, "id")
    cost = _number(obj, where, "local_food_cost")
    income = _number(obj, where, "average_income")
    areas = obj["residential_areas"]
    if isinstance(areas, bool) or not isinstance(areas, int) or areas < 1:
        raise ValidationError(f"{where}.residential_areas: must be an integer >= 1")
    if cost < 0:
        raise ValidationError(f"{where}.local_food_cost: must be >= 0")
    if income <= 0:
        raise ValidationError(f"{where}.average_income: must be > 0")
    rho = _number(obj, where, "unfulfilled_unit_cost")
    if rho < 0:
        raise ValidationError(f"{where}.unfulfilled_unit_cost: must be >= 0")
    persons = default_persons
    if "persons_per_area" in obj:
        persons = _number(obj, where, "persons_per_area")
    if persons <= 0:
        raise ValidationError(f"{where}.persons_per_area: must be > 0")
    if not isinstance(obj["dcs"], list) or not obj["dcs"]:
        raise ParseError(f"{where}.dcs: expected a non-empty list")
    if not isinstance(obj["customers"], list) or not obj["customers"]:
        raise ParseError(f"{where}.customers: expected a non-empty list")
    dcs = tuple(_parse_dc(d, region_id, f"{where}.dcs[{i}]")
                for i, d in enumerate(obj["dcs"]))
    customers = tuple(_parse_customer(c, region_id, default_demand, f"{where}.customers[{i}]")
                      for i, c in enumerate(obj["customers"]))
    weights = _parse_weights(obj.get("accessibility_weights"), f"{where}.accessibility_weights")
    return Region(id=region_id, local_food_cost=cost, average_income=income,
                  residential_areas=areas, persons_per_area=persons,
                  unfulfilled_unit_cost=rho, weights=weights, dcs=dcs,
                  customers=customers)


def _parse_nutrient(obj: Mapping[str, Any], where: str) -> Nutrient:
    _require_keys(obj, where, ["id", "weight", "min_requirement", "per_kg_content"])
    weight = _number(obj, where, "weight")
    requirement = _number(obj, where, "min_requirement")
    content = _number(obj, where, "per_kg_content")
    if weight < 0:
        raise ValidationError(f"{where}.weight: must be >= 0")
    if requirement < 0:
        raise ValidationError(f"{where}.min_requirement: must be >= 0")
    if content <= 0:
        raise ValidationError(f"{where}.per_kg_content: must be > 0")
    return Nutrient(id=_string(obj, where, "id"), weight=weight,
                    min_requirement=requirement, per_kg_content=content)


def _parse_scales(obj: Mapping[str, Any], where: str) -> NormalizationScales:
    _require_keys(obj, where, ["affordability", "transportation", "quality"])
    values = {k: _number(obj, where, k) for k in ("affordability", "transportation", "quality")}
    for key, value in values.items():
        if value <= 0:
            raise ValidationError(f"{where}.{key}: must be > 0")
    return NormalizationScales(**values)


def instance_from_dict(data: Mapping[str, Any]) -> NetworkInstance:
    """Build and validate a NetworkInstance from parsed JSON data."""
    _require_keys(
        data, "instance",
        ["warehouses", "regions", "nutrients", "stochastic",
         "safety_stock_fraction", "horizon"],
        ["path_weights", "persons_per_area", "normalization_scales"],
    )
    stochastic = data["stochastic"]
    _require_keys(stochastic, "instance.stochastic", ["demand", "supply_loss"])
    demand = _parse_demand(stochastic["demand"], "instance.stochastic.demand")
    supply_loss = _parse_supply_loss(stochastic["supply_loss"],
                                     "instance.stochastic.supply_loss")

    v = _number(data, "instance", "safety_stock_fraction")
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"instance.safety_stock_fraction: must be in [0, 1], got {v}")
    horizon = data["horizon"]
    if isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 1:
        raise ValidationError("instance.horizon: must be an integer >= 1")

    persons = DEFAULT_PERSONS_PER_AREA
    if "persons_per_area" in data:
        persons = _number(data, "instance", "persons_per_area")
        if persons <= 0:
            raise ValidationError("instance.persons_per_area: must be > 0")

    if not isinstance(data["warehouses"], list) or not data["warehouses"]:
        raise ParseError("instance.warehouses: expected a non-empty list")
    if not isinstance(data["regions"], list) or not data["regions"]:
        raise ParseError("instance.regions: expected a non-empty list")
    if not isinstance(data["nutrients"], list) or not data["nutrients"]:
        raise ParseError("instance.nutrients: expected a non-empty list")

    warehouses = tuple(_parse_warehouse(w, f"instance.warehouses[{i}]")
                       for i, w in enumerate(data["warehouses"]))
    regions = tuple(_parse_region(r, demand, persons, f"instance.regions[{i}]")
                    for i, r in enumerate(data["regions"]))
    nutrients = tuple(_parse_nutrient(n, f"instance.nutrients[{i}]")
                      for i, n in enumerate(data["nutrients"]))

    scales = None
    if "normalization_scales" in data:
        scales = _parse_scales(data["normalization_scales"], "instance.normalization_scales")

    instance = NetworkInstance(
        warehouses=warehouses, regions=regions, nutrients=nutrients,
        demand=demand, supply_loss=supply_loss, safety_stock_fraction=v,
        horizon=horizon, normalization_scales=scales,
    )
    _check_unique_ids(instance)

    if "path_weights" in data:
        if not isinstance(data["path_weights"], list):
            raise ParseError("instance.path_weights: expected a list")
        dc_ids = {dc.id for dc in instance.dcs()}
        customer_ids = {c.id for c in instance.customers()}
        weights: dict[tuple[str, str], float] = {}
        for i, entry in enumerate(data["path_weights"]):
            where = f"instance.path_weights[{i}]"
            _require_keys(entry, where, ["dc", "customer", "factor"])
            dc = _string(entry, where, "dc")
            customer = _string(entry, where, "customer")
            factor = _number(entry, where, "factor")
            if dc not in dc_ids:
                raise ValidationError(f"{where}.dc: unknown DC {dc!r}")
            if customer not in customer_ids:
                raise ValidationError(f"{where}.customer: unknown customer {customer!r}")
            if factor < 0:
                raise ValidationError(f"{where}.factor: must be >= 0")
            if (dc, customer) in weights:
                raise ValidationError(f"{where}: duplicate pair ({dc}, {customer})")
            weights[(dc, customer)] = factor
        instance.path_weights.update(weights)

    for w in warehouses:
        if isinstance(w.order_unit_cost, Mapping):
            known = {dc.id for dc in instance.dcs()}
            for dc_id in w.order_unit_cost:
                if dc_id not in known:
                    raise ValidationError(
                        f"warehouse {w.id}: order_unit_cost names unknown DC {dc_id!r}")
    return instance


def _check_unique_ids(instance: NetworkInstance) -> None:
    for label, ids in (
        ("warehouse", [w.id for w in instance.warehouses]),
        ("region", [r.id for r in instance.regions]),
        ("DC", [dc.id for dc in instance.dcs()]),
        ("customer", [c.id for c in instance.customers()]),
        ("nutrient", [n.id for n in instance.nutrients]),
    ):
        seen: set[str] = set()
        for i in ids:
            if i in seen:
                raise ValidationError(f"duplicate {label} id {i!r}")
            seen.add(i)


def load_instance(path: str) -> NetworkInstance:
    """Load, parse, and validate an instance file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def instance_to_dict(instance: NetworkInstance) -> dict[str, Any]:
    """Serialize back to the file schema, inverse of instance_from_dict."""
    data: dict[str, Any] = {
        "warehouses": [
            {
                "id": w.id,
                "location": list(w.location),
                "capacity": w.capacity,
                "order_unit_cost": (dict(w.order_unit_cost)
                                    if isinstance(w.order_unit_cost, Mapping)
                                    else w.order_unit_cost),
            }
            for w in instance.warehouses
        ],
        "regions": [
            {
                "id": r.id,
                "local_food_cost": r.local_food_cost,
                "average_income": r.average_income,
                "residential_areas": r.residential_areas,
                "persons_per_area": r.persons_per_area,
                "unfulfilled_unit_cost": r.unfulfilled_unit_cost,
                "accessibility_weights": r.weights.to_json(),
                "dcs": [
                    {
                        "id": dc.id,
                        "location": list(dc.location),
                        "capacity": dc.capacity,
                        "inventory_unit_cost": dc.inventory_unit_cost,
                    }
                    for dc in r.dcs
                ],
                "customers": [
                    {
                        "id": c.id,
                        "location": list(c.location),
                        "demand": c.demand.to_json(),
                    }
                    for c in r.customers
                ],
            }
            for r in instance.regions
        ],
        "nutrients": [
            {
                "id": n.id,
                "weight": n.weight,
                "min_requirement": n.min_requirement,
                "per_kg_content": n.per_kg_content,
            }
            for n in instance.nutrients
        ],
        "stochastic": {
            "demand": instance.demand.to_json(),
            "supply_loss": instance.supply_loss.to_json(),
        },
        "safety_stock_fraction": instance.safety_stock_fraction,
        "horizon": instance.horizon,
    }
    if instance.path_weights:
        data["path_weights"] = [
            {"dc": dc, "customer": customer, "factor": factor}
            for (dc, customer), factor in sorted(instance.path_weights.items())
        ]
    if instance.normalization_scales is not None:
        s = instance.normalization_scales
        data["normalization_scales"] = {
            "affordability": s.affordability,
            "transportation": s.transportation,
            "quality": s.quality,
        }
    return data


def derive_mean_local_demand(instance: NetworkInstance,
                             customer_dc: Mapping[str, str]) -> dict[str, float]:
    """Expected per-period demand routed to each DC under a y linkage."""
    means = {c.id: c.demand.mean for c in instance.customers()}
    totals = {dc.id: 0.0 for dc in instance.dcs()}
    for customer_id, dc_id in customer_dc.items():
        totals[dc_id] += means[customer_id]
    return totals
