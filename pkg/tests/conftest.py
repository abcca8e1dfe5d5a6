import sys

import numpy as np
import pytest

from imdpp.graph_model import ITEM, KnowledgeGraph, MetaGraph
from imdpp.harness import KG_SCHEMA, standard_metagraphs


@pytest.fixture
def product_kg():
    """Phone, earbuds, wireless charger and cable with shared features and one brand."""
    types = {"iPhone": ITEM, "AirPods": ITEM, "Charger": ITEM, "Cable": ITEM,
             "Bluetooth": "FEATURE", "Qi": "FEATURE", "Lightning": "FEATURE",
             "Apple": "BRAND", "Phones": "CATEGORY", "Audio": "CATEGORY"}
    edges = [("iPhone", "Bluetooth", "SUPPORT"), ("iPhone", "Qi", "SUPPORT"),
             ("iPhone", "Lightning", "SUPPORT"), ("AirPods", "Bluetooth", "SUPPORT"),
             ("Charger", "Qi", "SUPPORT"), ("Cable", "Lightning", "SUPPORT"),
             ("iPhone", "Apple", "BELONG"), ("AirPods", "Apple", "BELONG"),
             ("iPhone", "Phones", "IN"), ("AirPods", "Audio", "IN")]
    return KnowledgeGraph(types, edges, KG_SCHEMA)


@pytest.fixture
def metas():
    return {m.id: m for m in standard_metagraphs()}


def feature_meta():
    return MetaGraph.from_dict({
        "id": "m1", "relationship": "COMPLEMENTARY",
        "nodes": [{"role": "a", "type": ITEM}, {"role": "b", "type": ITEM},
                  {"role": "f", "type": "FEATURE"}],
        "edges": [{"from": "a", "to": "f", "edge_type": "SUPPORT"},
                  {"from": "b", "to": "f", "edge_type": "SUPPORT"}],
        "endpoints": ["a", "b"]})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in mod.REPORT:
            terminalreporter.write_line(line)
