import pytest

from src.cat_core import NatTrans, is_epi, make_presheaf, set_presheaf, terminal_category
from src.corpus import bit_model, bit_signature, graph_edge_model, non_epi_inclusion, set_model, unary_signature
from src.errors import ArityMismatch, MalformedInput, UnboundVariable, UnknownSort, UnsupportedCarrier
from src.fol_model import (App, Context, CtxMorphism, ModelMorphism, Signature, Var, app, check_model_morphism,
                           check_structure, check_term, compose_ctx_morphisms, context_map, enumerate_model_morphisms,
                           enumerate_structures, identity_ctx_morphism, identity_model_morphism, interpret_context,
                           interpret_ctx_morphism, interpret_term, make_structure, prefix_projection,
                           product_models, submodel_generated, terminal_model)

X = Var("x", "s")
Y = Var("y", "s")


def test_signature_rejects_undeclared_sorts():
    with pytest.raises(UnknownSort):
        Signature(("s",), {"g": (("t",), "s")})
    with pytest.raises(MalformedInput):
        Signature(("s",), {"r": ((), "s")}, {"r": ("s",)})


def test_contexts_compare_by_sorts():
    assert Context([("x", "s")]) == Context([("y", "s")])
    with pytest.raises(MalformedInput):
        Context([("x", "s"), ("x", "s")])
    with pytest.raises(UnboundVariable):
        Context([("x", "s")]).index("z")


def test_terms_are_well_sorted():
    sig = bit_signature()
    t = app(sig, "f", app(sig, "c"))
    assert isinstance(t, App) and t.sort == "s"
    assert str(t) == "f(c)"
    with pytest.raises(ArityMismatch):
        app(sig, "f")
    with pytest.raises(UnboundVariable):
        check_term(sig, Context([("y", "s")]), app(sig, "f", X))


def test_bit_model_is_valid():
    m = bit_model()
    assert check_structure(m).ok
    assert m.functions["f"].components["*"][(0,)] == 1


def test_interpreting_terms():
    m = bit_model(c=1)
    ctx = Context([("x", "s")])
    t = interpret_term(m, ctx, app(m.sig, "f", X))
    assert t.components["*"] == {(0,): 1, (1,): 0}
    c = interpret_term(m, Context(), app(m.sig, "c"))
    assert c.components["*"] == {(): 1}


def test_context_interpretation_is_a_product():
    m = bit_model(size=3)
    F = interpret_context(m, Context([("x", "s"), ("y", "s")]))
    assert F.size() == 9
    assert interpret_context(m, Context()).size() == 1


def test_ctx_morphisms():
    src = Context([("x", "s"), ("y", "s")])
    pi = prefix_projection(src, 1)
    assert pi.is_prefix_projection() and not pi.is_identity()
    assert identity_ctx_morphism(src).is_identity()
    swap = CtxMorphism(src, src, (Y, X))
    assert compose_ctx_morphisms(swap, swap).terms == (X, Y)
    m = set_model([0, 1])
    t = interpret_ctx_morphism(m, swap)
    assert t.components["*"][(0, 1)] == (1, 0)


def test_ctx_morphism_checks_sorts():
    with pytest.raises(ArityMismatch):
        CtxMorphism(Context([("x", "s")]), Context([("y", "s"), ("z", "s")]), (X,))


def test_missing_function_interpretation():
    with pytest.raises(MalformedInput):
        make_structure(bit_signature(), terminal_category(), {"s": set_presheaf([0])})


def test_partial_function_is_reported():
    base = terminal_category()
    m = make_structure(bit_signature(), base, {"s": set_presheaf([0, 1])},
                       {"c": {"*": {(): 0}}, "f": {"*": {(0,): 1}}})
    assert "function-not-total" in check_structure(m).codes()


def test_relation_on_graph_must_be_a_subgraph():
    m = graph_edge_model(r_vertices=(), r_edges=("e",))
    assert not check_structure(m).ok


def test_product_models():
    a, b = bit_model(r=(0,)), bit_model(r=(0, 1), c=1)
    P, (pa, pb) = product_models([a, b])
    assert check_structure(P).ok
    assert P.carrier("s").size() == 4
    assert P.relations["r"].parts["*"] == {((0, 0),), ((0, 1),)}
    assert check_model_morphism(pa).ok and check_model_morphism(pb).ok


def test_empty_product_is_terminal():
    m = terminal_model(unary_signature(), terminal_category())
    assert m.carrier("s").size() == 1
    assert m.notes


def test_model_morphisms_between_bits():
    a, b = bit_model(r=(0,), c=0), bit_model(r=(1,), c=1)
    found = enumerate_model_morphisms(a, b)
    assert len(found) == 1
    assert found[0]("s", "*", 0) == 1
    assert check_model_morphism(identity_model_morphism(a)).ok


def test_non_epi_inclusion():
    mu = non_epi_inclusion()
    assert check_model_morphism(mu).ok
    assert not is_epi(mu.components["s"])
    at = context_map(mu, Context([("x", "s"), ("y", "s")]))
    assert len(at.components["*"]) == 1


def test_relation_square_is_checked():
    a, b = set_model([0], r=(0,)), set_model([0], r=())
    broken = ModelMorphism(a, b, {"s": NatTrans(a.carrier("s"), b.carrier("s"), {"*": {0: 0}})})
    assert check_model_morphism(broken).codes() == ["relation-containment"]


def test_enumerate_structures_counts():
    models = enumerate_structures(unary_signature(), {"s": set_presheaf([0, 1])})
    assert len(models) == 4
    with pytest.raises(UnsupportedCarrier):
        enumerate_structures(unary_signature(), {"s": make_presheaf(
            graph_edge_model().base, {"V": ["v"], "E": []})})


def test_submodel_generated_closes_under_functions():
    m = bit_model(size=3)
    sub, incl = submodel_generated(m, {"s": {"*": [0]}})
    assert sub.carrier("s").size() == 3
    only_c, _ = submodel_generated(bit_model(size=2), {})
    assert set(only_c.carrier("s").on_obj["*"]) == {0, 1}
    assert check_model_morphism(incl).ok


def test_power_sorts_have_powerset_carriers():
    sig = Signature(("s",), {}, {"e": ("s", "ps")}, {"ps": "s"})
    base = terminal_category()
    m = make_structure(sig, base, {"s": set_presheaf([0, 1])},
                       relations={"e": {"*": [(0, frozenset({0})), (1, frozenset({1}))]}})
    assert m.carrier("ps").size() == 4
    assert check_structure(m).ok
