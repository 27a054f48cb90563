import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.config.budget_config import get_budget_config, with_overrides
from src.teamlog.core_model import Signature, Structure, Team
from src.teamlog.errors import BudgetExceededError, NonPrincipalUltrafilterError, PreconditionError, SignatureError
from src.teamlog.formula_parser import parse
from src.teamlog.random_instances import family_instance, random_formula
from src.teamlog.ultraproduct import (
    LEMMA_KINDS,
    NONE,
    STRONG,
    WEAK,
    StructureFamily,
    Ultrafilter,
    check_los,
    check_principal_isomorphism,
    check_team_lemma,
    los_guarantee,
    ultrafilter_from_fip,
    ultrapower,
    ultraproduct,
)


@pytest.mark.parametrize("index_size", [1, 2, 3, 4])
def test_principal_ultrafilters_satisfy_the_axioms(index_size):
    for generator in range(index_size):
        assert Ultrafilter.principal(index_size, generator).verify_axioms()


def test_membership_by_indices_or_mask():
    ultrafilter = Ultrafilter.principal(3, 2)
    assert ultrafilter.contains([0, 2])
    assert ultrafilter.contains(0b100)
    assert not ultrafilter.contains([0, 1])


def test_generator_must_lie_in_the_index_set():
    with pytest.raises(PreconditionError):
        Ultrafilter.principal(2, 2)


def test_fip_family_extends_to_principal_ultrafilter():
    assert ultrafilter_from_fip(3, [[0, 1], [1, 2]]).generator == 1


def test_family_without_common_point_needs_infinite_index_set():
    with pytest.raises(NonPrincipalUltrafilterError) as info:
        ultrafilter_from_fip(2, [[0], [1]])
    assert "non-principal" in info.value.detail


def test_ultraproduct_is_the_generator_factor(two_element, three_element):
    family = StructureFamily(
        (two_element, three_element),
        (Team(("x",), ((0,),)), Team(("x",), ((1,), (2,)))),
    )
    ultrafilter = Ultrafilter.principal(2, 1)
    result = ultraproduct(family, ultrafilter)
    assert result.structure.size == 3
    assert len(result.team) == 2
    assert check_principal_isomorphism(family, ultrafilter).holds


def test_ultrapower_keeps_the_domain_size(two_element):
    result = ultrapower(two_element, Ultrafilter.principal(3, 0), [Team(("x",), ((1,),))] * 3)
    assert result.structure.size == 2
    assert len(result.team) == 1


def test_family_needs_one_signature(two_element):
    other = Structure.build(Signature.of({"Q": 1}), 2)
    with pytest.raises(SignatureError):
        StructureFamily((two_element, other))


def test_index_sizes_must_match(two_element):
    family = StructureFamily((two_element, two_element, two_element))
    with pytest.raises(PreconditionError):
        ultraproduct(family, Ultrafilter.principal(2, 0))


def test_product_size_budget(two_element):
    budget = with_overrides(get_budget_config("quick"), max_product_size=3)
    with pytest.raises(BudgetExceededError):
        ultraproduct(StructureFamily((two_element, two_element)), Ultrafilter.principal(2, 0), budget)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=100_000), st.sampled_from(LEMMA_KINDS))
def test_team_operation_identities(seed, kind):
    instance = family_instance(random.Random(seed))
    family = StructureFamily(instance.structures, instance.teams)
    ultrafilter = Ultrafilter.principal(family.index_size, instance.generator)
    check = check_team_lemma(
        family,
        ultrafilter,
        kind,
        others=instance.others,
        elements=instance.elements,
        functions=instance.functions,
        var="x",
    )
    assert check.holds, check.to_dict()


def test_lemma_check_needs_its_inputs(two_element):
    family = StructureFamily((two_element,), (Team(("x",), ((0,),)),))
    with pytest.raises(PreconditionError):
        check_team_lemma(family, Ultrafilter.principal(1, 0), "union")
    with pytest.raises(ValueError):
        check_team_lemma(family, Ultrafilter.principal(1, 0), "intersection")


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=100_000), st.sampled_from(["lax", "full"]))
def test_los_agrees_on_finite_index_sets(seed, profile):
    rng = random.Random(seed)
    instance = family_instance(rng, max_rows=2)
    family = StructureFamily(instance.structures, instance.teams)
    formula = random_formula(rng, ("x", "y"), depth=3, profile=profile, max_quantifiers=1, max_splits=1)
    check = check_los(family, Ultrafilter.principal(family.index_size, instance.generator), formula)
    assert check.agrees


@pytest.mark.parametrize(
    "text, grade",
    [
        ("P(x) & dep(x ; y)", STRONG),
        ("A y dep(x ; y)", STRONG),
        ("P(x) v P(y)", WEAK),
        ("E y (R(x, y))", WEAK),
        ("~ (P(x) v P(y))", NONE),
        ("P(x) -> P(y)", NONE),
    ],
)
def test_los_guarantee_grades(text, grade):
    assert los_guarantee(parse(text)) == grade
