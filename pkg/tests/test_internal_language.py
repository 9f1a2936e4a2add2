import pytest

from src.cat_core import set_presheaf
from src.errors import MalformedInput, UnboundVariable, UnknownIdentifier, UnsupportedCarrier
from src.internal_language import (OMEGA, BaseType, IAnd, IComprehension, IConst, IEq, IExists, IForall, IFun, IIn,
                                   ILeq, INot, IProj, ITrue, ITuple, IVar, InternalEnv, InternalFunction, PowerType,
                                   ProductType, eval_internal_term, interpret_internal_formula, type_of)

X = BaseType("X")
x, y = IVar("x", X), IVar("y", X)


@pytest.fixture
def env():
    flip = InternalFunction(X, X, {0: 1, 1: 0})
    return InternalEnv.from_presheaves({"X": set_presheaf([0, 1])}, {"flip": flip})


def test_power_type_values(env):
    values = env.values(PowerType(X))
    assert len(values) == 4
    assert values[0] == frozenset()
    assert len(env.values(ProductType((X, X)))) == 4


def test_diagonal_is_the_equality_subset(env):
    assert interpret_internal_formula(env, [("x", X), ("y", X)], IEq(x, y)) == {(0, 0), (1, 1)}


def test_function_symbols(env):
    assert interpret_internal_formula(env, [("x", X)], IEq(IFun("flip", x), IConst(0, X))) == {(1,)}
    assert eval_internal_term(env, IForall("x", X, INot(IEq(IFun("flip", x), x))))


def test_comprehension_and_membership(env):
    zero = IComprehension("x", X, IEq(x, IConst(0, X)))
    assert eval_internal_term(env, zero) == frozenset({0})
    assert type_of(env, zero, {}) == PowerType(X)
    assert eval_internal_term(env, IIn(IConst(0, X), zero))
    every = IComprehension("x", X, ITrue())
    assert eval_internal_term(env, ILeq(zero, every))
    assert not eval_internal_term(env, ILeq(every, zero))


def test_every_subset_has_a_point_or_is_empty(env):
    A = IVar("A", PowerType(X))
    empty = IForall("x", X, INot(IIn(x, A)))
    inhabited = IExists("x", X, IIn(x, A))
    phi = IForall("A", PowerType(X), INot(IAnd(empty, inhabited)))
    assert type_of(env, phi, {}) == OMEGA
    assert eval_internal_term(env, phi)


def test_tuples_and_projections(env):
    pair = ITuple((IConst(0, X), IConst(1, X)))
    assert eval_internal_term(env, IProj(2, pair)) == 1
    assert type_of(env, IProj(1, pair), {}) == X
    with pytest.raises(MalformedInput):
        type_of(env, IProj(3, pair), {})


def test_errors(env):
    with pytest.raises(UnboundVariable):
        eval_internal_term(env, x)
    with pytest.raises(UnknownIdentifier):
        eval_internal_term(env, IFun("nope", IConst(0, X)))
    with pytest.raises(MalformedInput):
        eval_internal_term(env, IFun("flip", IConst(7, X)))
    with pytest.raises(MalformedInput):
        eval_internal_term(env, ILeq(IConst(0, X), IConst(1, X)))
    with pytest.raises(MalformedInput):
        interpret_internal_formula(env, [("x", X)], x)
    with pytest.raises(UnknownIdentifier):
        env.values(BaseType("Y"))


def test_graphs_are_not_set_like(edge_graph):
    with pytest.raises(UnsupportedCarrier):
        InternalEnv.from_presheaves({"G": edge_graph})
