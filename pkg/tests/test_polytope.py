import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellcause.errors import CapExceeded, NotLocallyCausal, NotMember
from bellcause.implications import quantize, random_hv_model
from bellcause.polytope import (
    DeterministicStrategy,
    certificate_is_sound,
    chsh_family,
    chsh_functional,
    determinize,
    enumerate_strategies,
    evaluate,
    local_bound,
    local_bound_by_enumeration,
    membership,
    model_from_weights,
    strategy_count,
    strategy_phenomenon,
    strategy_table,
    weights_reproduce,
)
from bellcause.prob import HVModel, Phenomenon, Scenario, pr_box, predicted_phenomenon, reproduces
from bellcause.properties import is_local, is_locally_causal, is_predetermined, is_signal_local
from bellcause.quantum import chsh_table, chsh_value, tsirelson_phenomenon
from bellcause.theorems import _predict, tv_lower_bound

seeds = st.integers(0, 2**32 - 1)
SC = Scenario()


def _generalized_pr_boxes():
    """The eight nonlocal vertices of the two-setting binary no-signaling polytope."""
    half = Fraction(1, 2)
    boxes = []
    for alpha, beta, gamma in itertools.product(range(2), repeat=3):
        boxes.append(Phenomenon.from_function(
            SC, lambda A, B, a, b, al=alpha, be=beta, ga=gamma:
            half if (A ^ B) == (a * b + al * a + be * b + ga) % 2 else Fraction(0)))
    return boxes


PR_BOXES = _generalized_pr_boxes()
VERTICES = [strategy_phenomenon(s, SC) for s in enumerate_strategies(SC)]


def _random_no_signaling(rng):
    """Random exact mixture of no-signaling vertices (local and PR-type)."""
    pool = VERTICES + PR_BOXES
    k = int(rng.integers(1, 5))
    picks = rng.choice(len(pool), size=k, replace=False)
    w = quantize(rng.dirichlet(np.ones(k)))
    table = sum(wi * pool[i].table for wi, i in zip(w, picks))
    return Phenomenon(SC, table)


def _random_exact_table(rng):
    """Uniform-random normalized table (signaling in general), exact at 1/64."""
    table = np.empty(SC.shape, dtype=object)
    for a, b in SC.setting_pairs():
        table[a, b] = np.array(quantize(rng.dirichlet(np.ones(4))), dtype=object).reshape(2, 2)
    return Phenomenon(SC, table)


def _vertex_values(coeff, scenario):
    coeff = np.asarray(coeff, dtype=object)
    return [sum(coeff[c] for c in zip(*np.nonzero(strategy_table(s, scenario))))
            for s in enumerate_strategies(scenario)]


def test_sixteen_strategies_in_lexicographic_order():
    strategies = enumerate_strategies(SC)
    assert len(strategies) == 16 == strategy_count(SC)
    assert strategies[0] == DeterministicStrategy((0, 0), (0, 0))
    assert strategies[1] == DeterministicStrategy((0, 0), (0, 1))
    assert strategies[-1] == DeterministicStrategy((1, 1), (1, 1))
    assert len({tuple(strategy_phenomenon(s, SC).table.flat) for s in strategies}) == 16


def test_strategy_count_for_larger_scenarios():
    assert strategy_count(Scenario(3, 2, 2, 3)) == 2**3 * 3**2
    with pytest.raises(CapExceeded):
        enumerate_strategies(Scenario(3, 3, 3, 3), cap=100)


def test_chsh_facets_have_local_bound_two():
    for coeff in chsh_family():
        assert local_bound(coeff) == 2
        assert local_bound_by_enumeration(coeff) == 2


@given(st.lists(st.integers(-5, 5), min_size=16, max_size=16))
def test_local_bound_routes_agree(values):
    coeff = np.array([Fraction(v) for v in values], dtype=object).reshape(2, 2, 2, 2)
    assert local_bound(coeff) == local_bound_by_enumeration(coeff) == max(_vertex_values(coeff, SC))


def test_pr_boxes_are_not_members_and_certificates_are_sound():
    for box in PR_BOXES:
        result = membership(box)
        assert not result.member
        cert = result.certificate
        assert certificate_is_sound(cert, box)
        assert max(_vertex_values(cert.coefficients, SC)) <= cert.bound < evaluate(cert.coefficients, box)
        # raw Farkas functional separates as well
        assert certificate_is_sound(result.farkas, box)


def test_pr_box_reaches_algebraic_maximum_of_chsh():
    assert max(abs(v) for _, v in chsh_table(pr_box())) == 4


def test_every_vertex_is_a_member_with_unit_weight():
    for i, v in enumerate(VERTICES):
        result = membership(v)
        assert result.member and result.weights == {i: 1}


def test_tsirelson_certificate_is_normalized_chsh():
    result = membership(tsirelson_phenomenon())
    assert result.rationalized and not result.member
    assert result.certificate.bound == 2
    assert certificate_is_sound(result.certificate, result.phenomenon)
    assert float(result.certificate.value) == pytest.approx(2 * np.sqrt(2), abs=1e-5)


def test_uniform_table_is_a_member():
    result = membership(Phenomenon.uniform())
    assert result.member and weights_reproduce(result)
    assert not result.rationalized


def test_three_setting_scenario():
    sc = Scenario(3, 2, 2, 2)
    f = Phenomenon.uniform(sc)
    assert membership(f).member
    box = pr_box(sc)
    r = membership(box)
    assert not r.member and certificate_is_sound(r.certificate, box)


@settings(max_examples=150)
@given(seeds)
def test_chsh_facets_decide_membership_on_no_signaling_tables(seed):
    f = _random_no_signaling(np.random.default_rng(seed))
    assert is_signal_local(f).holds
    all_within = all(evaluate(c, f) <= 2 for c in chsh_family())
    assert membership(f).member == all_within
    if any(abs(v) > 2 for _, v in chsh_table(f)):
        assert not membership(f).member


@given(seeds)
def test_signaling_tables_are_never_members(seed):
    # CHSH facets alone cannot see signaling; the LP must.
    f = _random_exact_table(np.random.default_rng(seed))
    if not is_signal_local(f).holds:
        result = membership(f)
        assert not result.member
        assert certificate_is_sound(result.certificate, f)


@given(seeds)
def test_member_weights_are_valid(seed):
    f = predicted_phenomenon(random_hv_model(np.random.default_rng(seed), family="factorized"))
    result = membership(f)
    assert result.member
    assert all(isinstance(w, Fraction) and w > 0 for w in result.weights.values())
    assert sum(result.weights.values()) == 1
    assert weights_reproduce(result)
    model = model_from_weights(result)
    assert is_predetermined(model).holds and is_local(model).holds
    assert reproduces(model, f, 0)


@given(seeds, st.sampled_from(("factorized", "deterministic_local")), st.booleans())
def test_determinize_preserves_the_phenomenon(seed, family, exact):
    m = random_hv_model(np.random.default_rng(seed), family=family, exact=exact)
    d = determinize(m)
    assert is_predetermined(d).holds and is_local(d).holds and is_locally_causal(d).holds
    target = predicted_phenomenon(m)
    assert reproduces(d, target, 0 if exact else 1e-12)
    assert len(d.labels) <= len(m.labels) * 16


def test_determinize_refuses_non_locally_causal_models():
    with pytest.raises(NotLocallyCausal):
        determinize(HVModel.single(pr_box()))


def test_model_from_weights_refuses_non_members():
    with pytest.raises(NotMember):
        model_from_weights(membership(pr_box()))


def test_chsh_functional_matches_correlator_form():
    f = tsirelson_phenomenon().to_exact()
    coeff = chsh_functional(minus=(1, 1))
    assert evaluate(coeff, f) == chsh_value(f, 0, 1, 0, 1)


def test_non_member_random_tables_resist_local_fits():
    """Sampling evidence next to the LP proof: random local-causal tables
    never come closer than the certificate-derived distance bound."""
    rng = np.random.default_rng(99)
    checked = 0
    while checked < 200:
        f = _random_exact_table(rng)
        result = membership(f)
        if result.member:
            continue
        checked += 1
        assert certificate_is_sound(result.certificate, f)
        bound = tv_lower_bound(result.certificate, f)
        assert bound > 0
        N = 10**4
        prior = rng.dirichlet(np.ones(4), size=N)
        alice = rng.dirichlet(np.ones(2), size=(N, 4, 2))
        bob = rng.dirichlet(np.ones(2), size=(N, 4, 2))
        target = np.asarray(f.to_float().table, dtype=float)
        dist = 0.5 * np.abs(_predict(prior, alice, bob) - target).sum(axis=(3, 4)).max(axis=(1, 2))
        assert dist.min() >= bound - 1e-12
