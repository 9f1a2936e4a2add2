import pytest
from hypothesis import given, strategies as st

from src.cat_core import (FinCategory, NatTrans, check_category, check_nat_trans, check_presheaf, compose_nat,
                          enumerate_nat_trans, global_elements, graph_presheaf, hom_set, identity_nat, is_epi,
                          is_iso, is_mono, make_presheaf, poset_category, product_presheaf, set_presheaf,
                          terminal_presheaf)
from src.errors import BaseMismatch, MalformedInput, SearchSpaceTooLarge
from src.oracles import representable
from src.settings_manager import bounded


def test_builtin_categories_are_valid(point, graph_base, chain3):
    for cat in (point, graph_base, chain3):
        assert check_category(cat).ok


def test_poset_closes_transitively(chain3):
    assert [m.name for m in hom_set(chain3, "0", "2")] == ["0<=2"]
    assert chain3.comp("1<=2", "0<=1") == "0<=2"


def test_poset_rejects_cycles():
    with pytest.raises(MalformedInput):
        poset_category(["a", "b"], [("a", "b"), ("b", "a")])


def test_non_associative_table_names_the_triple():
    cat = FinCategory.build(["a"], [("x", "a", "a"), ("y", "a", "a")],
                            [("x", "x", "y"), ("y", "x", "x"), ("x", "y", "id_a"), ("y", "y", "y")])
    report = check_category(cat)
    assert not report.ok
    assert "associativity" in report.codes()
    triples = [v.payload["triple"] for v in report.violations if v.code == "associativity"]
    assert ["x", "x", "x"] in triples


def test_missing_composite_is_reported():
    cat = FinCategory.build(["a", "b", "c"], [("f", "a", "b"), ("g", "b", "c")])
    report = check_category(cat)
    assert report.codes() == ["missing-composite"]
    assert report.violations[0].payload["pair"] == ["g", "f"]


def test_broken_identity_is_reported():
    cat = FinCategory.build(["V", "E"], [("s", "V", "E"), ("t", "V", "E")], [("s", "id_V", "t")])
    report = check_category(cat)
    assert "right-identity" in report.codes()
    assert [v.payload["morphism"] for v in report.violations if v.code == "right-identity"] == ["s"]


def test_duplicate_morphisms_are_malformed():
    with pytest.raises(MalformedInput):
        check_category(FinCategory.build(["a"], [("f", "a", "a"), ("f", "a", "a")]))


def test_graph_presheaf_laws(edge_graph):
    assert check_presheaf(edge_graph).ok
    assert edge_graph.elements("V") == ("v0", "v1")
    assert edge_graph.restrict("t", "e") == "v1"


def test_presheaf_missing_map(graph_base):
    F = make_presheaf(graph_base, {"V": ["v"], "E": ["e"]}, {"s": {"e": "v"}})
    assert check_presheaf(F).codes() == ["missing-map"]


def test_presheaf_map_outside_codomain(graph_base):
    F = make_presheaf(graph_base, {"V": ["v"], "E": ["e"]}, {"s": {"e": "v"}, "t": {"e": "w"}})
    assert "map-codomain" in check_presheaf(F).codes()


def test_set_presheaf_needs_one_object(graph_base):
    with pytest.raises(BaseMismatch):
        set_presheaf([1, 2], graph_base)


def test_representable_on_graph_base(graph_base):
    yE = representable(graph_base, "E")
    assert set(yE.on_obj["V"]) == {"s", "t"}
    assert set(yE.on_obj["E"]) == {"id_E"}
    assert check_presheaf(yE).ok


def test_product_of_graphs(edge_graph):
    P, (p0, p1) = product_presheaf([edge_graph, edge_graph])
    assert len(P.on_obj["V"]) == 4
    assert len(P.on_obj["E"]) == 1
    assert check_presheaf(P).ok
    assert check_nat_trans(p0).ok and check_nat_trans(p1).ok
    assert is_epi(p0)


def test_terminal_presheaf(graph_base):
    one = terminal_presheaf(graph_base)
    assert one.size() == 2


def test_homomorphisms_between_graphs(edge_graph):
    loop = graph_presheaf(["v"], {"l": ("v", "v")})
    assert len(enumerate_nat_trans(edge_graph, edge_graph)) == 1
    assert len(enumerate_nat_trans(edge_graph, loop)) == 1
    assert enumerate_nat_trans(loop, edge_graph) == []


def test_vertex_without_loop_is_not_a_global_element(edge_graph):
    assert global_elements(edge_graph) == []
    loop = graph_presheaf(["v"], {"l": ("v", "v")})
    assert len(global_elements(loop)) == 1


def test_identity_and_composition(edge_graph):
    ident = identity_nat(edge_graph)
    assert is_iso(ident) and is_mono(ident)
    (t,) = enumerate_nat_trans(edge_graph, edge_graph)
    assert compose_nat(ident, t).components == t.components


def test_swapping_endpoints_breaks_naturality(edge_graph):
    swap = NatTrans(edge_graph, edge_graph, {"V": {"v0": "v1", "v1": "v0"}, "E": {"e": "e"}})
    report = check_nat_trans(swap)
    assert report.codes() == ["naturality", "naturality"]
    assert sorted(v.payload["morphism"] for v in report.violations) == ["s", "t"]
    assert all(v.payload["element"] == "e" for v in report.violations)


def test_enumeration_respects_the_bound():
    F = set_presheaf([0, 1])
    with bounded(3):
        with pytest.raises(SearchSpaceTooLarge):
            enumerate_nat_trans(F, F)


@given(st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=3))
def test_product_size_is_multiplicative(sizes):
    factors = [set_presheaf(range(n)) for n in sizes]
    P, projections = product_presheaf(factors)
    expected = 1
    for n in sizes:
        expected *= n
    assert P.size() == expected
    assert all(is_epi(p) for p in projections)


@given(st.integers(min_value=1, max_value=3), st.integers(min_value=1, max_value=3))
def test_maps_between_sets_are_counted(n, m):
    assert len(enumerate_nat_trans(set_presheaf(range(n)), set_presheaf(range(m)))) == m ** n
