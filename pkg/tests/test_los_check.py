import pytest

from src.corpus import bit_model, los_corpus, non_epi_inclusion, set_model, two_point_fiber
from src.errors import HypothesesNotMet, MalformedInput, NotASentence
from src.fol_model import (Context, Var, enumerate_model_morphisms, interpret_context, prefix_projection,
                           product_models)
from src.formula_sem import RelationAtom, interp_basic, make_exists, make_forall
from src.los_check import (FAIL, PASS, SKIPPED, ConditionReport, LosInstance, check_conditions, check_distributing,
                           check_dual, check_filterable, check_finiteness, check_globally_filterable,
                           check_instance_hypotheses, check_projection_condition, check_pullback_filterable,
                           finiteness_candidates, los_sentence_corollary, los_verify, proof_steps)
from src.parser_formula import parse_formula
from src.sub_heyting import principal_sub
from src.ultra_filt import make_principal

I = [1, 2, 3]
X_ONLY = Context([("x", "s")])
R_X = RelationAtom("r", (Var("x", "s"),))
DROP_X = prefix_projection(X_ONLY, 0)


def _instance(bits, text, at, name=""):
    return LosInstance(bits, make_principal(I, at), parse_formula(text, bits[1].sig), name=name)


def test_condition_report_aggregates_children():
    parent = ConditionReport("parent")
    parent.skip("nothing yet")
    assert parent.verdict == SKIPPED
    parent.add(ConditionReport("a"))
    assert parent.verdict == PASS
    parent.add(ConditionReport("b").fail("broken", where=1))
    assert parent.verdict == FAIL
    assert parent.counterexample == {"failed": "b"}
    assert parent.find("b").counterexample == {"where": 1}


def test_exists_is_filterable():
    assert check_filterable(make_exists(DROP_X), bit_model()).ok


def test_forall_along_a_two_point_fibre_is_only_globally_filterable():
    m, g = two_point_fiber()
    report = check_filterable(make_forall(g), m)
    assert report.verdict == FAIL
    assert "delta" in report.counterexample
    assert check_globally_filterable(make_forall(g), m).ok


def test_distributing_along_epis_but_not_inclusions():
    _, (p, _) = product_models([bit_model(), bit_model(r=(1,), c=1)])
    assert check_distributing(make_exists(DROP_X), p).ok
    assert check_distributing(make_forall(DROP_X), p).ok
    report = check_distributing(make_exists(DROP_X), non_epi_inclusion())
    assert report.verdict == FAIL
    assert report.counterexample["lhs"] != report.counterexample["rhs"]


def test_forall_and_exists_are_dual_on_sets():
    ms = [bit_model(), set_model([0, 1, 2], r=(1,))]
    assert check_dual(make_forall(DROP_X), make_exists(DROP_X), {1}, ms).ok
    wrong = check_dual(make_forall(DROP_X), make_exists(DROP_X), set(), ms)
    assert wrong.verdict == FAIL
    assert [1] in wrong.details["working_signs"][0]


def test_pullback_filterability():
    m = bit_model()
    assert check_pullback_filterable(DROP_X, m).ok
    assert not check_pullback_filterable(DROP_X, m, strict=True).ok


def test_projection_condition(bits):
    inst = _instance(bits, "[x:s] r(x)", [1])
    assert check_projection_condition(inst).ok


def test_los_at_an_ultrafilter(bits):
    inst = _instance(bits, "[x:s] r(x)", [1], name="ultra-at-1")
    assert check_instance_hypotheses(inst).ok
    report = los_verify(inst)
    assert report.ok
    assert len(report.details["table"]) == 8


def test_los_with_quantifiers(bits):
    inst = _instance(bits, "exists x:s. r(x)", [1])
    assert los_verify(inst).ok
    assert proof_steps(inst).ok


def test_non_ultra_filters_fail_the_hypotheses(bits):
    inst = _instance(bits, "[x:s] r(x)", [1, 2])
    with pytest.raises(HypothesesNotMet):
        los_verify(inst)
    forced = los_verify(inst, force=True)
    assert forced.details["forced"]


def test_sentence_corollary(bits):
    inst = _instance(bits, "exists x:s. (x = c and r(x))", [2])
    report = los_sentence_corollary(inst)
    assert report.ok
    assert report.details["lhs"] and report.details["rhs"]
    with pytest.raises(NotASentence):
        los_sentence_corollary(_instance(bits, "[x:s] r(x)", [2]))


def test_instance_validation(bits):
    with pytest.raises(MalformedInput):
        LosInstance({1: bits[1]}, make_principal(I, [1]), parse_formula("top"))


def test_standalone_conditions(bits):
    inst = _instance(bits, "exists x:s. r(x)", [1])
    report = check_conditions(inst, only=["projection", "filterable", "distributing", "dual"])
    assert report.ok
    assert [c.condition for c in report.children] == ["projection", "filterable-all", "distributing-all", "dual-all"]
    only_dual = check_conditions(_instance(bits, "[x:s] r(x)", [1]), only=["dual"])
    assert only_dual.children[0].verdict == SKIPPED
    with pytest.raises(MalformedInput):
        check_conditions(inst, only=["modularity"])


def test_finiteness_finds_the_generated_witness():
    m = set_model([0, 1], r=(0,))
    delta = principal_sub(interpret_context(m, X_ONLY), "*", (0,))
    report = check_finiteness(m, X_ONLY, R_X, delta)
    assert report.ok
    assert report.details["witness"] == "generated"


def test_finiteness_against_a_model_with_empty_relation():
    m = set_model([0, 1], r=(0,))
    empty = set_model([0], name="empty")
    delta = principal_sub(interpret_context(m, X_ONLY), "*", (0,))
    name, witness = finiteness_candidates(m, X_ONLY, R_X, delta)[0]
    assert name == "generated"
    assert witness.relations["r"].parts["*"] == {(0,)}
    # both sides of the incoming half are false at the empty model
    assert enumerate_model_morphisms(witness, empty) == []
    assert interp_basic(empty, X_ONLY, R_X).is_bottom()
    report = check_finiteness(m, X_ONLY, R_X, delta, targets=[m, empty])
    assert report.ok
    assert report.details["witness"] == "generated"


@pytest.mark.parametrize("base_fixture, max_size, count", [
    ("point", 3, 60),
    ("graph_base", 2, 25),
    ("chain3", 2, 25),
])
def test_los_over_a_random_corpus(request, base_fixture, max_size, count):
    base = request.getfixturevalue(base_fixture)
    for family, F, phi in los_corpus(seed=5, count=count, base=base, max_size=max_size):
        inst = LosInstance(family, F, phi)
        assert los_verify(inst).ok
        assert proof_steps(inst).ok


def test_proof_steps_over_non_ultra_filters():
    seen = 0
    for family, F, phi in los_corpus(seed=7, count=40, ultra_only=False):
        inst = LosInstance(family, F, phi)
        steps = proof_steps(inst)
        assert steps.ok
        if not F.ultra:
            seen += 1
            assert steps.find("implication-step").verdict == SKIPPED
    assert seen > 0
