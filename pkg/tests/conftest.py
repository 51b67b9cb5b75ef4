"""Shared fixtures: a small hand-checkable network and the packaged one."""

import copy
import os

import pytest

import chainforge
from chainforge.gfa import assign_linkages
from chainforge.model import instance_from_dict, load_instance

QATAR_PATH = os.path.join(os.path.dirname(chainforge.__file__),
                          "data", "qatar_beef.json")

# Two regions on a flat grid.  R1 has two DCs and three customers, R2 is
# a single-DC satellite served by the second warehouse.  The numbers are
# small enough to check balance and index arithmetic by hand: D1 serves
# C1 and C2 (mean demand 80), D2 serves C3 (40), D3 serves C4 and C5 (65).
TINY = {
    "horizon": 3,
    "safety_stock_fraction": 0.2,
    "persons_per_area": 100,
    "stochastic": {
        "demand": {"family": "normal", "mean": 40.0, "variance": 25.0},
        "supply_loss": {"family": "uniform", "low": 0.8, "high": 0.9},
    },
    "warehouses": [
        {"id": "W1", "location": [0.0, 0.0], "capacity": 500.0,
         "order_unit_cost": 3.0},
        {"id": "W2", "location": [30.0, 0.0], "capacity": 400.0,
         "order_unit_cost": 3.0},
    ],
    "regions": [
        {
            "id": "R1", "local_food_cost": 20.0, "average_income": 2000.0,
            "residential_areas": 4, "unfulfilled_unit_cost": 5.0,
            "accessibility_weights": {"affordability": 1.0,
                                      "transportation": 1.0,
                                      "quality": 1.0},
            "dcs": [
                {"id": "D1", "location": [2.0, 1.0], "capacity": 150.0,
                 "inventory_unit_cost": 10.0},
                {"id": "D2", "location": [8.0, 1.0], "capacity": 120.0,
                 "inventory_unit_cost": 10.0},
            ],
            "customers": [
                {"id": "C1", "location": [1.0, 2.0]},
                {"id": "C2", "location": [3.0, 0.0]},
                {"id": "C3", "location": [9.0, 2.0]},
            ],
        },
        {
            "id": "R2", "local_food_cost": 25.0, "average_income": 1800.0,
            "residential_areas": 2, "unfulfilled_unit_cost": 6.0,
            "dcs": [
                {"id": "D3", "location": [31.0, 2.0], "capacity": 100.0,
                 "inventory_unit_cost": 8.0},
            ],
            "customers": [
                {"id": "C4", "location": [32.0, 1.0]},
                {"id": "C5", "location": [30.0, 3.0],
                 "demand": {"family": "normal", "mean": 25.0, "std": 4.0}},
            ],
        },
    ],
    "nutrients": [
        {"id": "protein", "weight": 2.0, "min_requirement": 0.5,
         "per_kg_content": 0.2},
        {"id": "iron", "weight": 1.0, "min_requirement": 0.001,
         "per_kg_content": 0.004},
    ],
}


def tiny_dict():
    return copy.deepcopy(TINY)


@pytest.fixture
def tiny():
    return instance_from_dict(tiny_dict())


@pytest.fixture
def tiny_design(tiny):
    return assign_linkages(tiny, {dc.id: dc.location for dc in tiny.dcs()})


@pytest.fixture(scope="session")
def qatar():
    return load_instance(QATAR_PATH)


@pytest.fixture(scope="session")
def qatar_design():
    instance = load_instance(QATAR_PATH)
    return assign_linkages(instance,
                           {dc.id: dc.location for dc in instance.dcs()})
