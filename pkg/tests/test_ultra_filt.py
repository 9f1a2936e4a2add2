import pytest
from hypothesis import given, settings, strategies as st

from src.cat_core import check_presheaf, graph_presheaf, set_presheaf
from src.corpus import random_filter, rng_for, ultrafilters
from src.errors import EmptyCarrier, ImproperFilter, MalformedInput
from src.fol_model import check_model_morphism, check_structure
from src.oracles import class_counts
from src.ultra_filt import (Filter, check_cocone, check_coprojection_epi, check_filter,
                            check_representative_independence, check_universal_property, equivalent,
                            extend_to_ultrafilter, filtered_product_models, filtered_product_presheaf,
                            frechet_description, generate_filter, is_isomorphism, make_filter, make_principal,
                            materialize, reduce_filter, reduction_isomorphism, trivial_filter)

I = [1, 2, 3]


def test_principal_filters():
    at1 = make_principal(I, [1])
    assert at1.proper and at1.ultra
    assert at1.core == frozenset({1})
    mid = make_principal(I, [1, 2])
    assert mid.proper and not mid.ultra
    assert len(mid.members) == 2
    assert check_filter(mid).ok


def test_trivial_and_improper_filters():
    assert trivial_filter(I).members == frozenset({frozenset(I)})
    improper = make_principal(I, [])
    assert not improper.proper
    with pytest.raises(ImproperFilter):
        extend_to_ultrafilter(improper)


def test_generated_filter_is_principal_at_the_intersection():
    assert generate_filter(I, [[1, 2], [2, 3]]) == make_principal(I, [2])
    with pytest.raises(MalformedInput):
        generate_filter(I, [[4]])


def test_explicit_members_are_checked():
    with pytest.raises(MalformedInput):
        make_filter(I, [[1, 2], [2, 3], [1, 2, 3]])
    unclosed = Filter((1, 2, 3), frozenset({frozenset({1}), frozenset({1, 2, 3})}))
    assert "not-upward-closed" in check_filter(unclosed).codes()


def test_frechet_is_only_a_description():
    d = frechet_description(I)
    assert d.kind == "frechet"
    with pytest.raises(ImproperFilter):
        materialize(d)


def test_extend_to_ultrafilter_picks_the_least_core_index():
    assert extend_to_ultrafilter(make_principal(I, [2, 3])) == make_principal(I, [2])


def test_equivalence_of_tuples():
    at1 = make_principal(I, [1])
    assert equivalent(at1, (0, 1, 0), (0, 0, 1))
    assert not equivalent(make_principal(I, [1, 2]), (0, 1, 0), (0, 0, 0))
    with pytest.raises(MalformedInput):
        equivalent(at1, (0,), (0,))


def test_reduce_filter():
    reduced = reduce_filter(make_principal(I, [1, 2]), [1, 2])
    assert reduced.index_set == (1, 2)
    assert reduced == trivial_filter([1, 2])


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_random_principal_filters_are_filters(seed):
    F = random_filter(rng_for(seed), I)
    assert check_filter(F).ok
    assert F.ultra == (len(F.core) == 1)


def test_ultrafilters_on_a_finite_set_are_principal():
    us = ultrafilters(I)
    assert len(us) == 3
    assert all(u.ultra for u in us)


def test_bits_at_two_indices_have_four_classes(bits):
    result = filtered_product_models(bits, make_principal(I, [1, 2]))
    P = result.product
    assert check_structure(P).ok
    assert len(P.carrier("s").on_obj["*"]) == 4
    assert P.relations["r"].parts["*"] == {((0, 1, 0),)}
    assert P.functions["c"].components["*"][()] == (0, 1, 0)
    assert check_representative_independence(result).ok


def test_ultraproduct_is_the_chosen_factor(bits):
    F = make_principal(I, [2])
    iso, left, right = reduction_isomorphism(bits, F, [2])
    assert is_isomorphism(iso)
    assert len(left.product.carrier("s").on_obj["*"]) == 2
    assert left.product.relations["r"].parts["*"] == {((0, 1, 0),)}


def test_coprojections_form_an_epi_cocone(bits):
    result = filtered_product_models(bits, make_principal(I, [1, 2]))
    assert check_cocone(result).ok
    assert check_coprojection_epi(result).ok
    for J in result.filter.sorted_members():
        assert check_model_morphism(result.coprojection(J)).ok
    with pytest.raises(MalformedInput):
        result.coprojection([3])


def test_universal_property_for_graphs(edge_graph):
    loop = graph_presheaf(["v"], {"l": ("v", "v")}, name="loop")
    result = filtered_product_presheaf({1: edge_graph, 2: loop}, make_principal([1, 2], [1]))
    assert check_presheaf(result.product).ok
    assert result.product.size() == edge_graph.size()
    assert check_universal_property(result).ok


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=3), min_size=3, max_size=3), st.integers(0, 10_000))
def test_class_counts_match_the_pairwise_oracle(sizes, seed):
    family = {i: set_presheaf(range(n)) for i, n in zip(I, sizes)}
    F = random_filter(rng_for(seed), I)
    result = filtered_product_presheaf(family, F)
    counts = class_counts(F, [family[i] for i in F.index_set])
    assert counts == {b: len(result.product.on_obj[b]) for b in result.product.base.objects}


def test_empty_factors_and_improper_filters_are_rejected():
    family = {1: set_presheaf([0]), 2: set_presheaf([])}
    with pytest.raises(EmptyCarrier):
        filtered_product_presheaf(family, make_principal([1, 2], [1]))
    with pytest.raises(ImproperFilter):
        filtered_product_presheaf({1: set_presheaf([0])}, make_principal([1], []))
    with pytest.raises(MalformedInput):
        filtered_product_presheaf({1: set_presheaf([0])}, make_principal([1, 2], [1]))
