import os

import pytest

from src.cat_core import FinCategory, graph_category, poset_category, terminal_category
from src.corpus import bit_model, graph_edge_model, set_model, single_edge_graph
from src.file_handlers.workspace_handler import load_workspace

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture
def point():
    return terminal_category()


@pytest.fixture
def graph_base():
    return graph_category()


@pytest.fixture
def chain3() -> FinCategory:
    """The poset 0 ≤ 1 ≤ 2"""
    return poset_category(["0", "1", "2"], [("0", "1"), ("1", "2")], name="chain3")


@pytest.fixture
def edge_graph():
    return single_edge_graph()


@pytest.fixture
def bits():
    """Three bit models differing in the constant and the relation"""
    return {1: bit_model(r=(0,), c=0, name="b0"),
            2: bit_model(r=(1,), c=1, name="b1"),
            3: bit_model(r=(), c=0, name="b2")}


@pytest.fixture
def two_points():
    return set_model([0, 1], r=(0,), name="two")


@pytest.fixture
def edge_model():
    return graph_edge_model()


@pytest.fixture
def bits_workspace():
    return load_workspace(fixture_path("bits.demo.json"))


@pytest.fixture
def graphs_workspace():
    return load_workspace(fixture_path("graphs.demo.json"))
