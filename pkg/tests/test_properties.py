from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellcause.implications import FAMILIES, independent_coins, random_hv_model
from bellcause.polytope import membership
from bellcause.prob import HVModel, Phenomenon, Scenario, pr_box, predicted_phenomenon
from bellcause.properties import (
    Property,
    PropertyVerdict,
    is_factorizable,
    is_local,
    is_locally_causal,
    is_locally_causal_conditional,
    is_predetermined,
    is_predictable,
    is_signal_local,
    model_verdicts,
    recheck_witness,
)

seeds = st.integers(0, 2**32 - 1)
families = st.sampled_from(FAMILIES)


def _model(seed, family=None, exact=True):
    return random_hv_model(np.random.default_rng(seed), family=family, exact=exact)


def _signaling_model():
    # Bob's outcome copies Alice's setting.
    resp = np.zeros((1, 2, 2, 2, 2), dtype=object)
    resp[...] = Fraction(0)
    for a in range(2):
        for b in range(2):
            resp[0, a, b, 0, a] = Fraction(1)
    return HVModel(Scenario(), [Fraction(1)], resp)


def test_verdict_carries_witness_exactly_when_failing():
    with pytest.raises(ValueError):
        PropertyVerdict(Property.LOCALITY, True, {"lam": 0})
    with pytest.raises(ValueError):
        PropertyVerdict(Property.LOCALITY, False)


def test_independent_coins_is_locally_causal_but_not_predetermined():
    m = independent_coins()
    assert is_locally_causal(m).holds
    assert is_local(m).holds
    v = is_predetermined(m)
    assert not v.holds and v.witness["value"] == Fraction(1, 4)


def test_pr_box_as_single_lambda_is_local_not_locally_causal():
    m = HVModel.single(pr_box())
    assert is_local(m).holds
    v = is_locally_causal(m)
    assert not v.holds
    assert v.witness["joint"] in (0, Fraction(1, 2)) and v.witness["product"] == Fraction(1, 4)


def test_signaling_model_fails_locality_with_bob_witness():
    m = _signaling_model()
    v = is_local(m)
    assert not v.holds
    assert v.witness["party"] == "bob" and v.witness["remote_settings"] == [0, 1]
    assert not is_signal_local(predicted_phenomenon(m)).holds
    assert is_predetermined(m).holds


def test_predictability_of_deterministic_phenomenon():
    m = _signaling_model()
    assert is_predictable(predicted_phenomenon(m)).holds
    assert not is_predictable(Phenomenon.uniform()).holds


def test_float_tolerance_controls_verdicts():
    m = independent_coins().to_float()
    resp = np.array(m.response)
    resp[0, 0, 0] = [[0.25 + 1e-7, 0.25 - 1e-7], [0.25, 0.25]]
    m2 = HVModel(m.scenario, [1.0], resp)
    assert not is_locally_causal(m2, 1e-9).holds
    assert is_locally_causal(m2, 1e-6).holds


def test_model_verdicts_order():
    names = [v.property_name for v in model_verdicts(independent_coins())]
    assert names == [Property.PREDETERMINATION, Property.LOCALITY, Property.LOCAL_CAUSALITY,
                     Property.PREDICTABILITY, Property.SIGNAL_LOCALITY]


@given(seeds, families)
def test_predetermined_and_local_implies_locally_causal(seed, family):
    m = _model(seed, family)
    if is_predetermined(m).holds and is_local(m).holds:
        assert is_locally_causal(m).holds


@given(seeds, families)
def test_local_models_are_signal_local(seed, family):
    m = _model(seed, family)
    if is_local(m).holds:
        assert is_signal_local(predicted_phenomenon(m)).holds


@given(seeds, st.sampled_from(("factorized", "deterministic_local")))
def test_locally_causal_models_predict_members(seed, family):
    m = _model(seed, family)
    assert is_locally_causal(m).holds
    assert membership(predicted_phenomenon(m)).member


@given(seeds, families)
def test_locally_causal_implies_local(seed, family):
    m = _model(seed, family)
    if is_locally_causal(m).holds:
        assert is_local(m).holds


@given(seeds, families)
def test_factorizability_matches_conditional_form_on_full_support(seed, family):
    m = _model(seed, family)
    if all(v > 0 for v in m.response.flat):
        assert is_factorizable(m).holds == is_locally_causal_conditional(m)


@given(seeds, families)
def test_factorizability_and_local_causality_agree(seed, family):
    m = _model(seed, family)
    assert is_factorizable(m).holds == is_locally_causal(m).holds


@given(seeds, families, st.booleans())
def test_failure_witnesses_recheck(seed, family, exact):
    m = _model(seed, family, exact)
    for check in (is_predetermined, is_local, is_locally_causal):
        v = check(m)
        assert v.holds or recheck_witness(m, v)
    f = predicted_phenomenon(m)
    for check in (is_predictable, is_signal_local):
        v = check(f)
        assert v.holds or recheck_witness(f, v)


def test_verdict_serializes_fractions():
    d = is_predetermined(independent_coins()).to_dict()
    assert d == {"property": "predetermination", "holds": False,
                 "witness": {"lam": 0, "a": 0, "b": 0, "A": 0, "B": 0, "value": "1/4"}}
