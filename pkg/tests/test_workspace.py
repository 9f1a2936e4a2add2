import copy
import json

import pytest

from src.errors import ParseError, UnknownIdentifier, WorkspaceError
from src.file_handlers.workspace_handler import freeze, load_workspace, parse_workspace
from src.formula_sem import validates
from src.sub_heyting import validate_generator_set

from .conftest import fixture_path


@pytest.fixture
def bits_doc():
    with open(fixture_path("bits.demo.json"), encoding="utf-8") as f:
        return json.load(f)


def test_bits_workspace_summary(bits_workspace):
    summary = bits_workspace.summary()
    assert summary["base"] == {"name": "1", "objects": 1, "morphisms": 1}
    assert summary["models"] == {"b0": {"s": 2}, "b1": {"s": 2}, "b2": {"s": 2}}
    assert summary["coalgebras"] == {"fork": 3}
    assert summary["instances"] == ["exists-at-1", "mid-rx", "sentence-at-2", "ultra-at-1"]
    assert {"box", "diamond", "nabla", "exists", "forall"} <= set(summary["quantifiers"])


def test_graphs_workspace(graphs_workspace):
    summary = graphs_workspace.summary()
    assert summary["base"]["name"] == "graph"
    assert summary["models"] == {"edge": {"s": 3}, "loop": {"s": 2}, "point": {"s": 2}}
    inst = graphs_workspace.instance("exists-at-2")
    assert sorted(inst.family) == [1, 2, 3]
    assert inst.family[2].name == "loop"


def test_named_objects_resolve(bits_workspace):
    ws = bits_workspace
    assert validates(ws.model("b0"), ws.formula("ex_r"), ws.registry)
    assert ws.filter("gen") == ws.filter("at2")
    assert ws.morphism("flip").src is ws.model("b0")
    assert ws.structure("fork").name == "fork"
    with pytest.raises(UnknownIdentifier):
        ws.model("b9")


def test_formula_text_on_the_fly(bits_workspace):
    phi = bits_workspace.formula_or_text("[x:s] r(x) or r(f(x))")
    assert validates(bits_workspace.model("b0"), phi)


def test_generator_sets_bind_to_models(bits_workspace):
    gens = bits_workspace.generator_set("singletons_b0", bits_workspace.model("b0"))
    assert len(gens) == 2
    assert validate_generator_set(gens).ok


def test_list_families_are_indexed_from_one(bits_workspace):
    inst = bits_workspace.instance("ultra-at-1")
    assert [m.name for m in inst.models] == ["b0", "b1", "b2"]


def test_non_associative_base_names_the_triple(bits_doc):
    doc = copy.deepcopy(bits_doc)
    doc["base"] = {"objects": ["a"], "morphisms": [["x", "a", "a"], ["y", "a", "a"]],
                   "compose": [["x", "x", "y"], ["y", "x", "x"], ["x", "y", "id_a"], ["y", "y", "y"]]}
    with pytest.raises(WorkspaceError) as info:
        parse_workspace(doc)
    assert info.value.path == "base"
    assert info.value.payload["cause"] == "associativity"
    assert len(info.value.payload["triple"]) == 3


def test_version_is_required(bits_doc):
    doc = dict(bits_doc, version=2)
    with pytest.raises(WorkspaceError) as info:
        parse_workspace(doc)
    assert info.value.path == "version"


def test_unknown_references_are_located(bits_doc):
    doc = copy.deepcopy(bits_doc)
    doc["instances"]["broken"] = {"family": ["b0", "b1", "nope"], "filter": "at1", "formula": "rx"}
    with pytest.raises(WorkspaceError) as info:
        parse_workspace(doc)
    assert info.value.path == "instances.broken"
    assert info.value.payload["cause"] == "unknown-identifier"


def test_invalid_model_is_rejected(bits_doc):
    doc = copy.deepcopy(bits_doc)
    doc["models"]["b0"]["functions"]["f"] = [[0, 1]]
    with pytest.raises(WorkspaceError) as info:
        parse_workspace(doc)
    assert info.value.path == "models.b0"


def test_formula_syntax_errors_carry_their_source(bits_doc):
    doc = copy.deepcopy(bits_doc)
    doc["formulas"]["bad"] = "[x:s] r(x) and"
    with pytest.raises(ParseError) as info:
        parse_workspace(doc)
    assert info.value.source == "formulas.bad"


def test_frechet_filters_are_improper(bits_doc):
    doc = copy.deepcopy(bits_doc)
    doc["filters"]["cofinite"] = {"index_set": [1, 2, 3], "frechet": True}
    with pytest.raises(WorkspaceError) as info:
        parse_workspace(doc)
    assert info.value.payload["cause"] == "improper-filter"


def test_bad_json_is_a_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"version": 1,\n  "base": }', encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_workspace(str(path))
    assert info.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(WorkspaceError):
        load_workspace(str(tmp_path / "absent.json"))


def test_freeze_makes_elements_hashable():
    assert freeze([1, [2, [3]]]) == (1, (2, (3,)))
    assert freeze("a") == "a"
