"""Scenario sampling and the per-period planning model.

One replication draws a full scenario (demand per customer per period,
supply retention per warehouse-DC lane per period), then walks the
horizon solving a small mixed-binary model for every period with the
closing inventory threaded forward.  Averaging many replications gives
Monte Carlo estimates of the two objectives:

* Z1, food accessibility: affordability, transport effort, and nutrition
  surplus indices summed over regions and periods;
* Z2, operating cost: inventory holding, unfulfilled demand, and order
  costs.

The scalarization weight epsilon prices cost against accessibility
inside each period's objective (maximize accessibility - epsilon * cost).

Model assembly notes (this shapes every coefficient below):

* unfulfilled demand g and closing inventory Inv are substituted out:
  g = demand - delivered, Inv = opening + retained orders - deliveries.
  Their costs land on the delivery/order columns and a constant offset,
  and the inventory band [v*S, Cap] becomes two inequality rows per DC;
* the nutrition plus-terms max(0, n - requirement) are linearized with
  one auxiliary and (when needed) one indicator per (region, nutrient).
  Pairs whose threshold exceeds the region's storage capacity are
  dropped; pairs whose threshold sits below the safety-stock floor are
  always active and need no indicator.  Indicators within a region are
  ordered by threshold, which lets branch and bound cut entire threshold
  ranges at once instead of enumerating subsets.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .accessibility import resolve_scales, snapshot
from .errors import DomainError, InfeasibleBoundsError
from .milp import LinearModel, Status, solve_milp
from .model import NetworkDesign, NetworkInstance

DEFAULT_NODE_LIMIT = 100_000
_BALANCE_FORMS = ("delivered", "demand")


def replication_seed(master_seed: int, replication: int,
                     stream: str = "scenario") -> int:
    """Derive an independent 63-bit seed for one replication.

    The seed is the first 8 bytes of sha256("master:replication:stream"),
    so replications are decorrelated and reproducible in any execution
    order.  The stream label separates draws with different purposes
    (scenario sampling vs. simulation event timing) that share the same
    master seed.
    """
    text = f"{master_seed}:{replication}:{stream}"
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class Scenario:
    """One realization of every uncertain quantity over the horizon.

    demands is keyed (customer_id, period) in kg; supply_factors is keyed
    (warehouse_id, dc_id, period) and holds the retained fraction of a
    shipment on that lane.  Factors are drawn for every lane, linked or
    not, so the same seed yields the same scenario under any design.
    """

    seed: int
    demands: dict[tuple[str, int], float]
    supply_factors: dict[tuple[str, str, int], float]


def sample_scenario(instance: NetworkInstance, seed: int) -> Scenario:
    """Draw a scenario. Demands are normal truncated at zero; supply
    factors are uniform on the instance's retention interval.

    Draw order is fixed: customer demands in file order, period-inner,
    then lane factors warehouse-major, DC file order, period-inner.
    """
    rng = np.random.default_rng(seed)
    demands: dict[tuple[str, int], float] = {}
    for region in instance.regions:
        for customer in region.customers:
            spec = customer.demand
            for t in range(instance.horizon):
                value = rng.normal(spec.mean, spec.std) if spec.std > 0 else spec.mean
                demands[(customer.id, t)] = max(0.0, float(value))
    factors: dict[tuple[str, str, int], float] = {}
    loss = instance.supply_loss
    for warehouse in instance.warehouses:
        for dc in instance.dcs():
            for t in range(instance.horizon):
                factors[(warehouse.id, dc.id, t)] = float(
                    rng.uniform(loss.low, loss.high))
    return Scenario(seed=seed, demands=demands, supply_factors=factors)


@dataclass(frozen=True)
class StochasticConfig:
    replications: int = 50
    master_seed: int = 0
    safety_stock: float | None = None
    initial_inventory: Mapping[str, float] | None = None
    balance_form: str = "delivered"
    node_limit: int = DEFAULT_NODE_LIMIT
    jobs: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("replications must be at least 1")
        if self.balance_form not in _BALANCE_FORMS:
            raise DomainError(
                f"balance_form must be one of {_BALANCE_FORMS}, got {self.balance_form!r}")
        if self.safety_stock is not None and self.safety_stock < 0:
            raise DomainError("safety stock fraction cannot be negative")
        if self.jobs < 1:
            raise DomainError("jobs must be at least 1")


@dataclass(frozen=True)
class QualityTerm:
    """One surviving (region, nutrient) plus-term of the quality index."""

    region_id: str
    nutrient_id: str
    requirement: float       # nutrient units the region's population needs
    content: float           # nutrient units per kg of stored product
    big_m: float
    aux_cap: float           # upper bound on the surplus auxiliary
    switched: bool           # True when an indicator variable is needed


def quality_terms(instance: NetworkInstance,
                  safety_fraction: float) -> list[QualityTerm]:
    """Classify every (region, nutrient) pair of the quality index.

    threshold = requirement / content is the region inventory at which
    the surplus turns positive.  Pairs unreachable within regional
    storage capacity are dropped (surplus identically zero); pairs whose
    threshold lies below the guaranteed safety-stock floor are always
    active; the rest need an indicator.
    """
    terms: list[QualityTerm] = []
    for region in instance.regions:
        capacity = sum(dc.capacity for dc in region.dcs)
        floor = safety_fraction * capacity
        population = region.population
        for nutrient in instance.nutrients:
            requirement = nutrient.min_requirement * population
            threshold = requirement / nutrient.per_kg_content
            if threshold >= capacity:
                continue
            terms.append(QualityTerm(
                region_id=region.id,
                nutrient_id=nutrient.id,
                requirement=requirement,
                content=nutrient.per_kg_content,
                big_m=nutrient.per_kg_content * capacity + requirement,
                aux_cap=nutrient.per_kg_content * capacity - requirement,
                switched=threshold > floor,
            ))
    return terms


@dataclass(frozen=True)
class PeriodIndex:
    """Column positions of each decision in a period model."""

    orders: dict[tuple[str, str], int]       # (warehouse, dc) -> column
    deliveries: dict[tuple[str, str], int]   # (dc, customer) -> column
    aux: dict[tuple[str, str], int]          # (region, nutrient) -> column
    flags: dict[tuple[str, str], int]


def build_period_model(instance: NetworkInstance, design: NetworkDesign,
                       opening_inventory: Mapping[str, float],
                       demands: Mapping[str, float],
                       supply_factors: Mapping[tuple[str, str], float],
                       epsilon: float, period: int, *,
                       safety_stock: float | None = None,
                       balance_form: str = "delivered",
                       ) -> tuple[LinearModel, PeriodIndex]:
    """Assemble the single-period model for realized demand and supply.

    opening_inventory maps DC id to the stock carried in; demands maps
    customer id to this period's realized order volume; supply_factors
    maps the active (warehouse, dc) lanes to the retained fraction.
    Returns the model plus the column index for extracting decisions.
    """
    if balance_form not in _BALANCE_FORMS:
        raise DomainError(f"unknown balance form {balance_form!r}")
    v = instance.safety_stock_fraction if safety_stock is None else safety_stock
    scales = resolve_scales(instance, design)
    model = LinearModel(f"period{period}")

    orders: dict[tuple[str, str], int] = {}
    deliveries: dict[tuple[str, str], int] = {}
    aux: dict[tuple[str, str], int] = {}
    flags: dict[tuple[str, str], int] = {}

    # inv_coeffs[dc] holds the variable part of the closing inventory;
    # inv_const[dc] the constant part.  Every inventory-dependent row and
    # cost below is phrased through these two.
    inv_coeffs: dict[str, dict[int, float]] = {}
    inv_const: dict[str, float] = {}

    for region in instance.regions:
        for dc in region.dcs:
            floor = v * dc.capacity
            if floor > dc.capacity + 1e-9:
                raise InfeasibleBoundsError(
                    f"DC {dc.id}: safety stock {floor:.6g} exceeds capacity "
                    f"{dc.capacity:.6g}")
            warehouse_id = design.dc_warehouse[dc.id]
            warehouse = instance.warehouse(warehouse_id)
            factor = supply_factors[(warehouse_id, dc.id)]
            holding = dc.inventory_unit_cost
            col = model.add_variable(
                f"x[{warehouse_id}->{dc.id}]",
                ub=warehouse.capacity,
                objective=-epsilon * (warehouse.order_cost(dc.id) + holding * factor))
            orders[(warehouse_id, dc.id)] = col
            inv_coeffs[dc.id] = {col: factor}
            local_demand = sum(demands.get(c.id, 0.0)
                               for c in region.customers
                               if design.customer_dc[c.id] == dc.id)
            if balance_form == "demand":
                inv_const[dc.id] = opening_inventory[dc.id] - local_demand
            else:
                inv_const[dc.id] = opening_inventory[dc.id]

    for region in instance.regions:
        w = region.weights
        rho = region.unfulfilled_unit_cost
        for customer in region.customers:
            dc_id = design.customer_dc[customer.id]
            dc = next(d for d in region.dcs if d.id == dc_id)
            demand = demands.get(customer.id, 0.0)
            effort = (instance.path_weight(dc_id, customer.id)
                      * design.distances[dc_id][customer.id])
            coeff = epsilon * rho - w.transportation * effort / scales.transportation
            if balance_form == "delivered":
                coeff += epsilon * dc.inventory_unit_cost
            col = model.add_variable(
                f"c[{dc_id}->{customer.id}]", ub=demand, objective=coeff)
            deliveries[(dc_id, customer.id)] = col
            if balance_form == "delivered":
                inv_coeffs[dc_id][col] = -1.0

    terms = quality_terms(instance, v)
    nutrient_weight = {n.id: n.weight for n in instance.nutrients}
    for term in terms:
        if term.switched:
            flags[(term.region_id, term.nutrient_id)] = model.add_variable(
                f"on[{term.region_id}:{term.nutrient_id}]", binary=True)
    for term in terms:
        region = instance.region(term.region_id)
        gain = (region.weights.quality * nutrient_weight[term.nutrient_id]
                / scales.quality)
        aux[(term.region_id, term.nutrient_id)] = model.add_variable(
            f"surplus[{term.region_id}:{term.nutrient_id}]",
            ub=term.aux_cap, objective=gain)

    for warehouse in instance.warehouses:
        supplied = [col for (w_id, _), col in orders.items()
                    if w_id == warehouse.id]
        if supplied:
            model.add_constraint({col: 1.0 for col in supplied}, "<=",
                                 warehouse.capacity, name=f"wcap[{warehouse.id}]")

    for region in instance.regions:
        for dc in region.dcs:
            coeffs = inv_coeffs[dc.id]
            const = inv_const[dc.id]
            floor = v * dc.capacity
            cap_rhs = dc.capacity - const
            floor_rhs = const - floor
            if balance_form == "delivered":
                # Threaded inventories can wobble off the band by float
                # dust; keep the rows consistent with a feasible start.
                if -1e-6 < cap_rhs < 0.0:
                    cap_rhs = 0.0
                if -1e-6 < floor_rhs < 0.0:
                    floor_rhs = 0.0
            model.add_constraint(coeffs, "<=", cap_rhs, name=f"cap[{dc.id}]")
            model.add_constraint({c: -a for c, a in coeffs.items()}, "<=",
                                 floor_rhs, name=f"floor[{dc.id}]")

    region_terms: dict[str, list[QualityTerm]] = {}
    for term in terms:
        region_terms.setdefault(term.region_id, []).append(term)
    for region_id, group in region_terms.items():
        region = instance.region(region_id)
        capacity = sum(dc.capacity for dc in region.dcs)
        base_coeffs: dict[int, float] = {}
        base_const = 0.0
        for dc in region.dcs:
            for col, a in inv_coeffs[dc.id].items():
                base_coeffs[col] = base_coeffs.get(col, 0.0) + a
            base_const += inv_const[dc.id]
        for term in group:
            a_col = aux[(region_id, term.nutrient_id)]
            rhs = term.content * base_const - term.requirement
            row = {a_col: 1.0}
            for col, a in base_coeffs.items():
                row[col] = -term.content * a
            if term.switched:
                b_col = flags[(region_id, term.nutrient_id)]
                model.add_constraint(
                    {a_col: 1.0, b_col: -term.big_m}, "<=", 0.0,
                    name=f"qon[{region_id}:{term.nutrient_id}]")
                row[b_col] = term.big_m
                model.add_constraint(row, "<=", rhs + term.big_m,
                                     name=f"qval[{region_id}:{term.nutrient_id}]")
                # Secant of the surplus over [0, capacity].  Valid because
                # the plus-term is convex, and it pins the relaxation to
                # the hull instead of the loose big-M midpoint, so each
                # indicator resolves after a single branching.
                slope = term.aux_cap / capacity
                cut = {a_col: 1.0}
                for col, a in base_coeffs.items():
                    cut[col] = -slope * a
                model.add_constraint(cut, "<=", slope * base_const,
                                     name=f"qcut[{region_id}:{term.nutrient_id}]")
            else:
                model.add_constraint(row, "<=", rhs,
                                     name=f"qsum[{region_id}:{term.nutrient_id}]")
        # Threshold-ordered indicators: a nutrient reachable only at high
        # inventory implies every lower-threshold nutrient is reachable.
        switched = sorted((t for t in group if t.switched),
                          key=lambda t: t.requirement / t.content)
        for low, high in zip(switched, switched[1:]):
            model.add_constraint(
                {flags[(region_id, high.nutrient_id)]: 1.0,
                 flags[(region_id, low.nutrient_id)]: -1.0}, "<=", 0.0,
                name=f"qord[{region_id}:{high.nutrient_id}]")

    offset = 0.0
    for region in instance.regions:
        for dc in region.dcs:
            offset -= epsilon * dc.inventory_unit_cost * inv_const[dc.id]
        for customer in region.customers:
            offset -= (epsilon * region.unfulfilled_unit_cost
                       * demands.get(customer.id, 0.0))
    model.objective_offset = offset

    return model, PeriodIndex(orders=orders, deliveries=deliveries,
                              aux=aux, flags=flags)


@dataclass
class PeriodDecision:
    """Solved flows and derived state for one period of one replication."""

    period: int
    orders: dict[tuple[str, str], float]
    deliveries: dict[tuple[str, str], float]
    unmet: dict[tuple[str, str], float]
    inventory: dict[str, float]
    aux: dict[tuple[str, str], float]
    objective: float
    accessibility: float
    region_contributions: dict[str, float]
    inventory_cost: float
    unfulfilled_cost: float
    order_cost: float


@dataclass
class ReplicationResult:
    seed: int
    scenario: Scenario
    periods: list[PeriodDecision]
    phi: float
    accessibility: float
    inventory_cost: float
    unfulfilled_cost: float
    order_cost: float
    transport_effort: float
    balance_form: str
    safety_stock: float
    initial_inventory: dict[str, float]
    nodes: int
    limit_hit: bool

    @property
    def total_cost(self) -> float:
        return self.inventory_cost + self.unfulfilled_cost + self.order_cost


def default_initial_inventory(instance: NetworkInstance,
                              safety_fraction: float) -> dict[str, float]:
    """Opening stock when none is configured: every DC at its safety level."""
    return {dc.id: safety_fraction * dc.capacity for dc in instance.dcs()}


def run_replication(instance: NetworkInstance, design: NetworkDesign,
                    epsilon: float, seed: int, *,
                    config: StochasticConfig = StochasticConfig(),
                    ) -> ReplicationResult:
    """Sample one scenario and solve the horizon period by period."""
    scenario = sample_scenario(instance, seed)
    v = (instance.safety_stock_fraction if config.safety_stock is None
         else config.safety_stock)
    if config.initial_inventory is not None:
        opening = {dc.id: float(config.initial_inventory[dc.id])
                   for dc in instance.dcs()}
    else:
        opening = default_initial_inventory(instance, v)
    initial = dict(opening)
    scales = resolve_scales(instance, design)
    terms = quality_terms(instance, v)
    term_lookup = {(t.region_id, t.nutrient_id): t for t in terms}
    nutrient_weight = {n.id: n.weight for n in instance.nutrients}

    periods: list[PeriodDecision] = []
    nodes = 0
    limit_hit = False
    for t in range(instance.horizon):
        demands_t = {c.id: scenario.demands[(c.id, t)]
                     for c in instance.customers()}
        factors_t = {(design.dc_warehouse[dc.id], dc.id):
                     scenario.supply_factors[(design.dc_warehouse[dc.id], dc.id, t)]
                     for dc in instance.dcs()}
        model, index = build_period_model(
            instance, design, opening, demands_t, factors_t, epsilon, t,
            safety_stock=v, balance_form=config.balance_form)
        result = solve_milp(model, node_limit=config.node_limit)
        nodes += result.nodes
        if result.status is Status.NODE_LIMIT:
            limit_hit = True
        if result.values is None:
            raise DomainError(
                f"period {t} model is {result.status.value} "
                f"(seed {seed}, epsilon {epsilon:g})")

        decision = _extract_period(
            instance, design, index, result, opening, demands_t, factors_t,
            t, scales, term_lookup, config.balance_form)
        periods.append(decision)
        opening = {
            dc.id: min(max(decision.inventory[dc.id], v * dc.capacity),
                       dc.capacity)
            for dc in instance.dcs()}

    transport = sum(
        instance.path_weight(h, l) * design.distances[h][l] * qty
        for p in periods for (h, l), qty in p.deliveries.items())
    return ReplicationResult(
        seed=seed,
        scenario=scenario,
        periods=periods,
        phi=sum(p.objective for p in periods),
        accessibility=sum(p.accessibility for p in periods),
        inventory_cost=sum(p.inventory_cost for p in periods),
        unfulfilled_cost=sum(p.unfulfilled_cost for p in periods),
        order_cost=sum(p.order_cost for p in periods),
        transport_effort=transport,
        balance_form=config.balance_form,
        safety_stock=v,
        initial_inventory=initial,
        nodes=nodes,
        limit_hit=limit_hit,
    )


def _extract_period(instance, design, index, result, opening, demands_t,
                    factors_t, t, scales, term_lookup, balance_form):
    orders = {key: max(0.0, result.value(col))
              for key, col in index.orders.items()}
    deliveries = {}
    for (dc_id, cust_id), col in index.deliveries.items():
        qty = min(max(0.0, result.value(col)), demands_t[cust_id])
        deliveries[(dc_id, cust_id)] = qty
    unmet = {(dc_id, cust_id): max(0.0, demands_t[cust_id] - qty)
             for (dc_id, cust_id), qty in deliveries.items()}

    inventory: dict[str, float] = {}
    for region in instance.regions:
        for dc in region.dcs:
            w_id = design.dc_warehouse[dc.id]
            received = factors_t[(w_id, dc.id)] * orders[(w_id, dc.id)]
            if balance_form == "demand":
                outflow = sum(demands_t[c.id] for c in region.customers
                              if design.customer_dc[c.id] == dc.id)
            else:
                outflow = sum(qty for (h, _), qty in deliveries.items()
                              if h == dc.id)
            inventory[dc.id] = opening[dc.id] + received - outflow

    # Auxiliaries: report the canonical surplus whenever the solver's
    # value agrees to within big-M conditioning noise; a material gap is
    # kept raw so the feasibility audit exposes it.
    aux: dict[tuple[str, str], float] = {}
    # Solver arithmetic can leave a DC a hair below zero; physical stock
    # is nonnegative, so clamp the regional sums used downstream.  The
    # per-DC values stay raw for the audit.
    region_stock = {
        region.id: max(0.0, sum(inventory[dc.id] for dc in region.dcs))
        for region in instance.regions}
    for region in instance.regions:
        for nutrient in instance.nutrients:
            key = (region.id, nutrient.id)
            canonical = max(0.0, nutrient.per_kg_content * region_stock[region.id]
                            - nutrient.min_requirement * region.population)
            if key in index.aux:
                solved = result.value(index.aux[key])
                tol = 1e-4 * (1.0 + abs(canonical))
                aux[key] = canonical if abs(solved - canonical) <= tol else solved
            else:
                aux[key] = 0.0 if key not in term_lookup else canonical

    inventory_cost = sum(dc.inventory_unit_cost * inventory[dc.id]
                         for dc in instance.dcs())
    unfulfilled_cost = sum(
        instance.region(_dc_region(instance, h)).unfulfilled_unit_cost * qty
        for (h, _), qty in unmet.items())
    order_cost = sum(instance.warehouse(w_id).order_cost(dc_id) * qty
                     for (w_id, dc_id), qty in orders.items())

    contributions: dict[str, float] = {}
    acc_total = 0.0
    for region in instance.regions:
        shipments = {(h, l): qty for (h, l), qty in deliveries.items()
                     if any(dc.id == h for dc in region.dcs)}
        snap = snapshot(region, t, design, instance,
                        region_stock[region.id], shipments, scales)
        contributions[region.id] = snap.contribution(region)
        acc_total += contributions[region.id]

    return PeriodDecision(
        period=t, orders=orders, deliveries=deliveries, unmet=unmet,
        inventory=inventory, aux=aux, objective=result.objective,
        accessibility=acc_total, region_contributions=contributions,
        inventory_cost=inventory_cost, unfulfilled_cost=unfulfilled_cost,
        order_cost=order_cost)


def _dc_region(instance: NetworkInstance, dc_id: str) -> str:
    for region in instance.regions:
        for dc in region.dcs:
            if dc.id == dc_id:
                return region.id
    raise KeyError(dc_id)


@dataclass(frozen=True)
class EstimateResult:
    epsilon: float
    z1: float
    z1_se: float
    z2: float
    z2_se: float
    replications: int
    inventory_cost: float
    unfulfilled_cost: float
    order_cost: float
    results: tuple[ReplicationResult, ...]


def estimate_objectives(instance: NetworkInstance, design: NetworkDesign,
                        epsilon: float,
                        config: StochasticConfig = StochasticConfig(),
                        ) -> EstimateResult:
    """Monte Carlo estimates of accessibility (Z1) and cost (Z2).

    Replication seeds derive from the master seed alone, so estimates at
    different epsilon values share scenarios (common random numbers) and
    differences between sweeps reflect the scalarization, not sampling.
    """
    n = config.replications
    seeds = [replication_seed(config.master_seed, s) for s in range(n)]

    def one(seed: int) -> ReplicationResult:
        return run_replication(instance, design, epsilon, seed, config=config)

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(seed) for seed in seeds]

    z1_samples = np.array([r.accessibility for r in results])
    z2_samples = np.array([r.total_cost for r in results])

    def se(samples: np.ndarray) -> float:
        if len(samples) < 2:
            return 0.0
        return float(np.std(samples, ddof=1) / math.sqrt(len(samples)))

    return EstimateResult(
        epsilon=epsilon,
        z1=float(z1_samples.mean()),
        z1_se=se(z1_samples),
        z2=float(z2_samples.mean()),
        z2_se=se(z2_samples),
        replications=n,
        inventory_cost=float(np.mean([r.inventory_cost for r in results])),
        unfulfilled_cost=float(np.mean([r.unfulfilled_cost for r in results])),
        order_cost=float(np.mean([r.order_cost for r in results])),
        results=tuple(results),
    )


def audit_replication(instance: NetworkInstance, design: NetworkDesign,
                      result: ReplicationResult,
                      tolerance: float = 1e-6) -> list[str]:
    """Re-check every stored period against the model's constraints.

    Pure arithmetic on the stored flows, independent of the solver:
    inventory balance, the [v*S, Cap] band, warehouse capacity, the
    delivered/unfulfilled split, link activity, and the nutrition
    surplus values.  Returns human-readable violations; empty means the
    replication is consistent.
    """
    issues: list[str] = []
    v = result.safety_stock
    scenario = result.scenario
    previous = result.initial_inventory
    for decision in result.periods:
        t = decision.period
        for region in instance.regions:
            for dc in region.dcs:
                w_id = design.dc_warehouse[dc.id]
                if (w_id, dc.id) not in decision.orders:
                    issues.append(f"period {t}: no order lane for DC {dc.id}")
                    continue
                received = (scenario.supply_factors[(w_id, dc.id, t)]
                            * decision.orders[(w_id, dc.id)])
                if result.balance_form == "demand":
                    outflow = sum(
                        scenario.demands[(c.id, t)] for c in region.customers
                        if design.customer_dc[c.id] == dc.id)
                else:
                    outflow = sum(qty for (h, _), qty
                                  in decision.deliveries.items() if h == dc.id)
                expected = previous[dc.id] + received - outflow
                stored = decision.inventory[dc.id]
                if abs(stored - expected) > tolerance:
                    issues.append(
                        f"period {t} DC {dc.id}: balance off by "
                        f"{stored - expected:.3e}")
                if stored < v * dc.capacity - tolerance:
                    issues.append(
                        f"period {t} DC {dc.id}: inventory {stored:.6g} below "
                        f"safety level {v * dc.capacity:.6g}")
                if stored > dc.capacity + tolerance:
                    issues.append(
                        f"period {t} DC {dc.id}: inventory {stored:.6g} above "
                        f"capacity {dc.capacity:.6g}")
        for warehouse in instance.warehouses:
            shipped = sum(qty for (w_id, _), qty in decision.orders.items()
                          if w_id == warehouse.id)
            if shipped > warehouse.capacity + tolerance:
                issues.append(
                    f"period {t} warehouse {warehouse.id}: shipped "
                    f"{shipped:.6g} above capacity {warehouse.capacity:.6g}")
        for region in instance.regions:
            for customer in region.customers:
                dc_id = design.customer_dc[customer.id]
                delivered = decision.deliveries.get((dc_id, customer.id))
                missing = decision.unmet.get((dc_id, customer.id))
                if delivered is None or missing is None:
                    issues.append(
                        f"period {t} customer {customer.id}: no flow on its link")
                    continue
                if delivered < -tolerance or missing < -tolerance:
                    issues.append(
                        f"period {t} customer {customer.id}: negative flow")
                demand = scenario.demands[(customer.id, t)]
                if abs(delivered + missing - demand) > tolerance:
                    issues.append(
                        f"period {t} customer {customer.id}: served + unmet = "
                        f"{delivered + missing:.6g}, demand {demand:.6g}")
        for (dc_id, cust_id) in decision.deliveries:
            if design.customer_dc[cust_id] != dc_id:
                issues.append(
                    f"period {t}: delivery on inactive link {dc_id}->{cust_id}")
        for region in instance.regions:
            stock = sum(decision.inventory[dc.id] for dc in region.dcs)
            for nutrient in instance.nutrients:
                available = nutrient.per_kg_content * stock
                required = nutrient.min_requirement * region.population
                expected_aux = max(0.0, available - required)
                stored_aux = decision.aux.get((region.id, nutrient.id), 0.0)
                if abs(stored_aux - expected_aux) > tolerance:
                    issues.append(
                        f"period {t} region {region.id} nutrient {nutrient.id}: "
                        f"surplus {stored_aux:.6g}, expected {expected_aux:.6g}")
        previous = decision.inventory
    return issues


@dataclass(frozen=True)
class OperationalPlan:
    """Deployable summary of one sweep solution.

    Carries everything the simulator needs to replay the solution: the
    epsilon it came from, the safety-stock fraction the planner ran
    with, the opening inventories, and the expected objective estimates
    for cross-model comparison.
    """

    epsilon: float
    safety_stock: float
    initial_inventory: dict[str, float]
    z1: float
    z1_se: float
    z2: float
    z2_se: float
    inventory_cost: float
    unfulfilled_cost: float
    order_cost: float
    master_seed: int
    replications: int
    balance_form: str = "delivered"


def plan_from_estimate(estimate: EstimateResult, instance: NetworkInstance,
                       config: StochasticConfig) -> OperationalPlan:
    v = (instance.safety_stock_fraction if config.safety_stock is None
         else config.safety_stock)
    if config.initial_inventory is not None:
        opening = dict(config.initial_inventory)
    else:
        opening = default_initial_inventory(instance, v)
    return OperationalPlan(
        epsilon=estimate.epsilon,
        safety_stock=v,
        initial_inventory=opening,
        z1=estimate.z1, z1_se=estimate.z1_se,
        z2=estimate.z2, z2_se=estimate.z2_se,
        inventory_cost=estimate.inventory_cost,
        unfulfilled_cost=estimate.unfulfilled_cost,
        order_cost=estimate.order_cost,
        master_seed=config.master_seed,
        replications=config.replications,
        balance_form=config.balance_form,
    )


_PLAN_FIELDS = ("epsilon", "safety_stock", "initial_inventory", "z1", "z1_se",
                "z2", "z2_se", "inventory_cost", "unfulfilled_cost",
                "order_cost", "master_seed", "replications", "balance_form")


def save_plan(plan: OperationalPlan, path: str) -> None:
    import json

    payload = {name: getattr(plan, name) for name in _PLAN_FIELDS}
    payload["initial_inventory"] = {
        dc: plan.initial_inventory[dc] for dc in sorted(plan.initial_inventory)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_plan(path: str) -> OperationalPlan:
    import json

    from .errors import ParseError

    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a JSON object")
    missing = [name for name in _PLAN_FIELDS if name not in data]
    if missing:
        raise ParseError(f"{path}: missing keys {', '.join(missing)}")
    extra = [key for key in data if key not in _PLAN_FIELDS]
    if extra:
        raise ParseError(f"{path}: unknown keys {', '.join(sorted(extra))}")
    inventory = data["initial_inventory"]
    if (not isinstance(inventory, dict)
            or not all(isinstance(k, str) and isinstance(u, (int, float))
                       and not isinstance(u, bool)
                       for k, u in inventory.items())):
        raise ParseError(f"{path}: initial_inventory must map DC ids to numbers")
    try:
        return OperationalPlan(
            epsilon=float(data["epsilon"]),
            safety_stock=float(data["safety_stock"]),
            initial_inventory={k: float(u) for k, u in inventory.items()},
            z1=float(data["z1"]), z1_se=float(data["z1_se"]),
            z2=float(data["z2"]), z2_se=float(data["z2_se"]),
            inventory_cost=float(data["inventory_cost"]),
            unfulfilled_cost=float(data["unfulfilled_cost"]),
            order_cost=float(data["order_cost"]),
            master_seed=int(data["master_seed"]),
            replications=int(data["replications"]),
            balance_form=str(data["balance_form"]),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
