from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellcause.errors import InsufficientSamples
from bellcause.implications import (
    FAMILIES,
    MODEL_PROPERTIES,
    check_implication,
    independent_coins,
    quantize,
    random_hv_model,
)
from bellcause.prob import Scenario
from bellcause.properties import is_local, is_locally_causal, is_predetermined


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8).filter(lambda v: sum(v) > 0))
def test_quantize_is_a_distribution_close_to_input(values):
    p = np.array(values) / sum(values)
    q = quantize(p)
    assert sum(q) == 1
    assert all(x >= 0 and x.denominator <= 64 for x in q)
    assert max(abs(float(x) - y) for x, y in zip(q, p)) <= 1 / 64


@pytest.mark.parametrize("family", FAMILIES)
def test_every_family_builds_valid_models(family):
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = random_hv_model(rng, family=family)
        assert m.exact and 1 <= len(m.labels) <= 4


def test_family_structure():
    rng = np.random.default_rng(8)
    for _ in range(20):
        assert is_locally_causal(random_hv_model(rng, family="factorized")).holds
        m = random_hv_model(rng, family="deterministic_local")
        assert is_predetermined(m).holds and is_local(m).holds
        assert is_predetermined(random_hv_model(rng, family="deterministic")).holds


def test_unknown_family():
    with pytest.raises(ValueError):
        random_hv_model(np.random.default_rng(0), family="quantum")


def test_larger_scenarios_supported():
    m = random_hv_model(np.random.default_rng(1), Scenario(3, 2, 3, 2), family="generic")
    assert m.response.shape[1:] == (3, 2, 3, 2)


def test_independent_coins_is_the_standard_counterexample():
    report = check_implication(["local_causality"], "predetermination", trials=1,
                               extra_models=[independent_coins()])
    assert any(i == -1 for i, _ in report.counterexamples)


def test_implication_reports_are_seed_deterministic():
    a = check_implication(["locality"], "signal_locality", trials=200, seed=3)
    b = check_implication(["locality"], "signal_locality", trials=200, seed=3)
    assert a.to_dict() == b.to_dict()
    assert a.holds and a.tested > 0


def test_trials_are_independent_of_batch_size():
    # trial i draws from its own spawned stream, so prefixes agree
    short = check_implication([], "predetermination", trials=50, seed=11)
    long = check_implication([], "predetermination", trials=100, seed=11)
    assert [i for i, _ in short.counterexamples] == [i for i, _ in long.counterexamples if i < 50]


def test_false_implication_is_caught():
    report = check_implication(["local_causality"], "predetermination", trials=300, seed=0)
    assert not report.holds
    assert "counterexamples" in report.summary()


def test_bad_arguments():
    with pytest.raises(ValueError):
        check_implication(["telepathy"], "locality")
    with pytest.raises(ValueError):
        check_implication([], "locality", trials=0)


def test_empty_filter_raises():
    first = random_hv_model(np.random.default_rng(np.random.SeedSequence(0).spawn(1)[0]))
    assert not MODEL_PROPERTIES["predetermination"](first, 1e-9)
    with pytest.raises(InsufficientSamples):
        check_implication(["predetermination"], "locality", trials=1, seed=0)


def test_model_property_registry():
    assert set(MODEL_PROPERTIES) == {"predetermination", "locality", "local_causality", "factorizability",
                                     "predictability", "signal_locality", "bell_local"}
    assert MODEL_PROPERTIES["bell_local"](independent_coins(), 1e-9)
    assert Fraction(1, 4) in set(independent_coins().response.flat)
