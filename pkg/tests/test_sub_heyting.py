import itertools

import pytest
from hypothesis import given, settings, strategies as st

from src.cat_core import (NatTrans, check_presheaf, graph_category, graph_presheaf, identity_nat, poset_category,
                          set_presheaf, terminal_category)
from src.corpus import random_nat_trans, random_presheaf, random_sub, rng_for
from src.errors import AmbientMismatch, MalformedInput, PreconditionFailed
from src.oracles import count_subobjects, exists_by_meet, forall_by_join, implies_by_join
from src.sub_heyting import (GeneratorSet, SubPresheaf, char_morphism, check_covered, check_sub, check_supgen_condition,
                             check_supgeneration, cover_split, down_set, enumerate_sub, exists_along, forall_along,
                             generators, make_generator_set, make_sub, omega_presheaf, principal_sub, pullback_sub,
                             sieves, sub_bottom, sub_from_char, sub_implies, sub_join, sub_leq, sub_meet, sub_negate,
                             sub_top, validate_generator_set)


def test_single_edge_has_five_subgraphs(edge_graph):
    subs = enumerate_sub(edge_graph)
    assert len(subs) == 5
    assert count_subobjects(edge_graph) == 5
    assert subs[0] == sub_bottom(edge_graph)


def test_principal_sub_of_an_edge(edge_graph):
    e = principal_sub(edge_graph, "E", "e")
    assert e == sub_top(edge_graph)
    v = principal_sub(edge_graph, "V", "v0")
    assert v.parts == {"V": frozenset({"v0"}), "E": frozenset()}


def test_make_sub_rejects_unclosed_families(edge_graph):
    with pytest.raises(MalformedInput):
        make_sub(edge_graph, {"E": ["e"]})


def test_edge_without_endpoints_is_not_a_subobject(edge_graph):
    assert not check_sub(SubPresheaf(edge_graph, {"E": ["e"], "V": ["v0"]})).ok


def test_negation_is_intuitionistic(edge_graph):
    v0 = principal_sub(edge_graph, "V", "v0")
    neg = sub_negate(v0)
    assert neg.parts == {"V": frozenset({"v1"}), "E": frozenset()}
    assert sub_join(v0, neg) != sub_top(edge_graph)
    assert sub_negate(neg) == v0


def test_omega_over_the_graph_base(graph_base):
    assert len(sieves(graph_base, "V")) == 2
    assert len(sieves(graph_base, "E")) == 5
    omega = omega_presheaf(graph_base)
    assert check_presheaf(omega).ok


def test_characteristic_roundtrip(edge_graph):
    omega = omega_presheaf(edge_graph.base)
    for a in enumerate_sub(edge_graph):
        assert sub_from_char(char_morphism(a, omega)) == a


def test_pullback_needs_matching_ambient(edge_graph):
    other = graph_presheaf(["v"], {"l": ("v", "v")})
    with pytest.raises(AmbientMismatch):
        pullback_sub(identity_nat(edge_graph), sub_top(other))


def test_cover_split_precondition(edge_graph):
    v0 = principal_sub(edge_graph, "V", "v0")
    v1 = principal_sub(edge_graph, "V", "v1")
    with pytest.raises(PreconditionFailed):
        cover_split(sub_top(edge_graph), v0, v1)
    assert cover_split(sub_join(v0, v1), v0, v1) == (v0, v1)


def test_generators_of_an_edge(edge_graph):
    gens = generators(edge_graph)
    # ⟨e⟩, ⟨v0⟩, ⟨v1⟩ and the two-vertex subgraph below ⟨e⟩
    assert len(gens) == 4
    assert validate_generator_set(gens).ok


def test_degenerate_generator_set_fails(edge_graph):
    degenerate = GeneratorSet(edge_graph, (sub_top(edge_graph),))
    report = validate_generator_set(degenerate)
    assert not report.ok
    assert "not-downward-closed" in report.codes()


def test_down_set(edge_graph):
    gens = generators(edge_graph)
    v0 = principal_sub(edge_graph, "V", "v0")
    assert down_set(gens, v0) == [v0]


def test_covering_and_supgeneration(edge_graph, chain3):
    assert check_covered(edge_graph).ok
    assert check_supgeneration(generators(edge_graph)).ok
    F = random_presheaf(rng_for(3), chain3, 2)
    assert check_covered(F).ok


def test_supgen_condition_along_identity(edge_graph):
    gens = generators(edge_graph)
    assert check_supgen_condition(identity_nat(edge_graph), gens, gens).ok


def test_supgen_condition_names_the_missing_generator():
    X, Y = set_presheaf([1, 2, 3]), set_presheaf(["x", "y"])
    f = NatTrans(X, Y, {"*": {1: "x", 2: "x", 3: "y"}})
    assert check_supgen_condition(f, generators(X), generators(Y)).ok
    truncated = make_generator_set(Y, [principal_sub(Y, "*", "y")])
    report = check_supgen_condition(f, generators(X), truncated)
    assert not report.ok
    pairs = {(v.payload["delta"], v.payload["iota"]) for v in report.violations}
    assert (principal_sub(X, "*", 1), principal_sub(Y, "*", "x")) in pairs
    assert {d for d, _ in pairs} == {principal_sub(X, "*", 1), principal_sub(X, "*", 2)}


BASES = ["point", "graph", "chain"]


def _presheaf(kind, seed):
    base = {"point": terminal_category(), "graph": graph_category(),
            "chain": poset_category(["0", "1", "2"], [("0", "1"), ("1", "2")])}[kind]
    return random_presheaf(rng_for(seed), base, 2)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(BASES), st.integers(min_value=0, max_value=10_000))
def test_heyting_laws(kind, seed):
    F = _presheaf(kind, seed)
    subs = enumerate_sub(F)
    for a, b in itertools.product(subs, repeat=2):
        imp = sub_implies(a, b)
        assert imp == implies_by_join(a, b)
        for c in subs:
            assert sub_leq(sub_meet(a, c), b) == sub_leq(c, imp)
        assert sub_meet(a, sub_join(a, b)) == a
        assert sub_join(a, sub_meet(a, b)) == a


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(BASES), st.integers(min_value=0, max_value=10_000))
def test_adjoint_chain(kind, seed):
    rng = rng_for(seed)
    F = _presheaf(kind, seed)
    G = random_presheaf(rng, F.base, 2)
    t = random_nat_trans(rng, F, G)
    if t is None:
        return
    xs, ys = enumerate_sub(F), enumerate_sub(G)
    for a in xs:
        assert exists_along(t, a) == exists_by_meet(t, a)
        assert forall_along(t, a) == forall_by_join(t, a)
        for b in ys:
            assert sub_leq(exists_along(t, a), b) == sub_leq(a, pullback_sub(t, b))
            assert sub_leq(pullback_sub(t, b), a) == sub_leq(b, forall_along(t, a))


@given(st.integers(min_value=0, max_value=10_000))
def test_random_sub_is_restriction_closed(seed):
    F = _presheaf("graph", seed)
    assert check_sub(random_sub(rng_for(seed), F)).ok


def test_set_subobjects_are_subsets():
    assert len(enumerate_sub(set_presheaf(range(3)))) == 8
