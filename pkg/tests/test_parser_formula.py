import pytest

from src.corpus import bit_signature
from src.errors import ParseError
from src.fol_model import Context
from src.formula_sem import Basic, Conj, Equation, Imp, Neg, PropVar, Pull, Quant, RelationAtom
from src.parser_formula import format_context, format_formula, parse_context, parse_formula

SIG = bit_signature()


def test_context_and_relation():
    phi = parse_formula("[x:s] r(x)", SIG)
    assert phi.context == Context([("x", "s")])
    assert isinstance(phi.body, Basic) and isinstance(phi.body.atom, RelationAtom)


def test_precedence():
    phi = parse_formula("[x:s] not r(x) and r(c) implies x = c", SIG)
    assert isinstance(phi.body, Imp)
    assert isinstance(phi.body.left, Conj)
    assert isinstance(phi.body.left.left, Neg)
    assert isinstance(phi.body.right.atom, Equation)


def test_unicode_spellings():
    ascii_ = parse_formula("forall x:s. (r(x) or not r(x))", SIG)
    fancy = parse_formula("∀ x:s. (r(x) ∨ ¬ r(x))", SIG)
    assert ascii_ == fancy


def test_binder_body_binds_tightly():
    phi = parse_formula("exists x:s. r(x) and r(c)", SIG)
    assert isinstance(phi.body, Conj)
    assert isinstance(phi.body.left, Quant)


def test_pullback_syntax():
    phi = parse_formula("[y:s] pull[w := f(y)](r(w))", SIG)
    assert isinstance(phi.body, Pull)
    assert phi.body.morphism.dst == Context([("w", "s")])


def test_named_quantifier_along_a_projection():
    phi = parse_formula("nabla[y:s](r(y), top)", SIG, quantifiers=["nabla"])
    assert isinstance(phi.body, Quant)
    assert phi.body.name == "nabla" and len(phi.body.children) == 2


def test_bare_names_are_propositions():
    phi = parse_formula("p and box(q)", quantifiers=["box"], props=["p", "q"])
    assert phi.body.left == Basic(PropVar("p"))
    with pytest.raises(ParseError):
        parse_formula("p and z", props=["p"])


def test_syntax_error_is_located():
    with pytest.raises(ParseError) as info:
        parse_formula("[x:s] r(x) and\n  ) r(x)", SIG, source="inline")
    assert info.value.line == 2
    assert info.value.column == 3
    assert info.value.location() == "inline:2:3"


def test_unexpected_end():
    with pytest.raises(ParseError) as info:
        parse_formula("r(c) and", SIG)
    assert info.value.line == 1


def test_unknown_sort_and_symbols():
    with pytest.raises(ParseError):
        parse_formula("[x:t] r(x)", SIG)
    with pytest.raises(ParseError):
        parse_formula("[x:s] g(x) = x", SIG)
    with pytest.raises(ParseError):
        parse_formula("[x:s] x", SIG)


def test_parse_context():
    assert parse_context("x:s, y:s", SIG) == Context([("x", "s"), ("y", "s")])
    assert format_context(parse_context("[x:s]")) == "[x:s]"


def test_format_then_parse_is_stable():
    for text in ["[x:s] (r(x) and not (x = c))", "exists x:s. r(f(x))", "[y:s] pull[w := f(y)](r(w))"]:
        phi = parse_formula(text, SIG)
        assert parse_formula(format_formula(phi), SIG) == phi
