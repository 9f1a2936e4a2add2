import pytest
from hypothesis import given, settings, strategies as st

from src.cat_core import graph_category, terminal_category
from src.corpus import bit_model, bit_signature, graph_edge_model, random_formula, rng_for, substitution_corpus
from src.errors import ArityMismatch, MalformedInput, UnknownQuantifier
from src.fol_model import Context, CtxMorphism, Var, prefix_projection
from src.formula_sem import (Basic, Formula, Quant, RelationAtom, Top, check_formula, check_isotone,
                             check_substitution_lemma, default_registry, free_variables, interpret_formula, is_sentence,
                             make_exists, make_forall, subformulas, substitute, validates, validates_at,
                             validates_via_generators)
from src.parser_formula import parse_formula
from src.sub_heyting import principal_sub, sub_top

X = Var("x", "s")


def _parse(text, m):
    return parse_formula(text, m.sig)


def test_relation_atom_is_its_relation():
    m = bit_model(r=(0,))
    value = interpret_formula(m, _parse("[x:s] r(x)", m))
    assert value.parts["*"] == {(0,)}
    assert not validates(m, _parse("[x:s] r(x)", m))


def test_connectives_on_bits():
    m = bit_model(r=(0,), c=0)
    assert interpret_formula(m, _parse("[x:s] not r(x)", m)).parts["*"] == {(1,)}
    assert interpret_formula(m, _parse("[x:s] x = c", m)).parts["*"] == {(0,)}
    assert interpret_formula(m, _parse("[x:s] r(f(x))", m)).parts["*"] == {(1,)}
    assert validates(m, _parse("[x:s] r(x) implies x = c", m))
    assert validates(m, _parse("[x:s] r(x) or r(f(x))", m))


def test_quantifiers_in_the_empty_context():
    m = bit_model(r=(0,))
    assert validates(m, _parse("exists x:s. r(x)", m))
    assert not validates(m, _parse("forall x:s. r(x)", m))
    assert validates(m, _parse("forall x:s. (r(x) or r(f(x)))", m))


def test_validity_at_a_subobject():
    m = bit_model(r=(0,))
    phi = _parse("[x:s] r(x)", m)
    F = interpret_formula(m, phi).ambient
    at0 = principal_sub(F, "*", (0,))
    assert validates_at(m, at0, phi)
    assert not validates_at(m, sub_top(F), phi)
    assert validates_via_generators(m, at0, phi)


def test_sentencehood_depends_on_the_base():
    bits = [bit_model(r=(0,)), bit_model(r=())]
    phi = _parse("exists x:s. r(x)", bits[0])
    assert is_sentence(bits, phi)
    edge = graph_edge_model(r_vertices=("v0",))
    psi = parse_formula("exists x:s. r(x)", edge.sig)
    value = interpret_formula(edge, psi)
    assert value.parts == {"V": frozenset({()}), "E": frozenset()}
    assert not is_sentence([edge], psi)


def test_subformulas_carry_their_contexts():
    m = bit_model()
    phi = _parse("exists x:s. r(x)", m)
    subs = subformulas(phi)
    assert subs[0] == phi
    assert len(subs[1].context) == 1


def test_quantifier_must_target_its_context():
    inner = Context([("x", "s")])
    g = prefix_projection(inner, 0)
    bad = Formula(inner, Quant("exists", g, (Basic(RelationAtom("r", (X,))),)))
    with pytest.raises(MalformedInput):
        check_formula(bad, bit_signature())


def test_registry_is_immutable_and_knows_duals():
    reg = default_registry()
    assert reg.names() == ["conj", "disj", "exists", "forall"]
    assert reg.dual_of("forall") == ("exists", frozenset({1}))
    bigger = reg.register("exists2", lambda g, n: make_exists(g))
    assert "exists2" in bigger and "exists2" not in reg
    with pytest.raises(UnknownQuantifier):
        reg.resolve("nabla", prefix_projection(Context([("x", "s")]), 0), 1)
    with pytest.raises(ArityMismatch):
        reg.resolve("forall", prefix_projection(Context([("x", "s")]), 0), 2)


def test_quantifier_arity_is_enforced():
    q = make_forall(prefix_projection(Context([("x", "s")]), 0))
    with pytest.raises(ArityMismatch):
        q(bit_model(), [])


def test_default_quantifiers_are_isotone():
    m = bit_model()
    g = prefix_projection(Context([("x", "s"), ("y", "s")]), 1)
    assert check_isotone(make_exists(g), m).ok
    assert check_isotone(make_forall(g), m).ok


def test_free_variables():
    m = bit_model()
    assert free_variables(_parse("[x:s, y:s] r(x)", m)) == ["x"]
    assert free_variables(_parse("[x:s] exists y:s. r(y)", m)) == []
    assert free_variables(_parse("[x:s, y:s] pull[w := f(y)](r(w))", m)) == ["y"]


def test_substitution_renames_bound_variables():
    m = bit_model()
    phi = _parse("[x:s] exists y:s. x = y", m)
    src = Context([("y", "s")])
    g = CtxMorphism(src, phi.context, (Var("y", "s"),))
    out = substitute(phi, g)
    assert out.context == src
    bound = out.body.morphism.src.names
    assert list(bound) == ["y", "y'"]
    assert check_substitution_lemma(m, g, phi)


@pytest.mark.parametrize("base", [terminal_category(), graph_category()], ids=["point", "graph"])
def test_substitution_lemma_over_the_corpus(base):
    triples = list(substitution_corpus(seed=11, count=250, base=base))
    assert len(triples) == 250
    for m, g, phi in triples:
        assert check_substitution_lemma(m, g, phi), (m.name, g, phi)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_generator_validity_matches_direct_validity(seed):
    rng = rng_for(seed)
    sig = bit_signature()
    m = bit_model(r=tuple(x for x in range(2) if rng.random() < 0.5), c=int(rng.integers(0, 2)))
    phi = random_formula(rng, sig, Context([("x", "s")]), max_depth=2)
    top = sub_top(interpret_formula(m, phi).ambient)
    assert validates_via_generators(m, top, phi) == validates(m, phi)


def test_top_is_valid_everywhere():
    m = graph_edge_model()
    assert validates(m, Formula(Context([("x", "s")]), Top()))
