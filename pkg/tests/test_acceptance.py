"""Acceptance criteria, each at its stated tolerance and runtime budget.

A summary line per criterion is printed at the end of the pytest run.
"""
import itertools
import math
from fractions import Fraction

import numpy as np

from bellcause.causal import (
    CausalModel,
    EventKind,
    SpacetimeEvent,
    bell_dag,
    check,
    check_no_fine_tuning,
    ci_gap,
    classical_bell_model,
    d_separated,
    joint_distribution,
    tuned_pr_box_model,
)
from bellcause.implications import check_implication, independent_coins, random_hv_model
from bellcause.polytope import (
    certificate_is_sound,
    determinize,
    enumerate_strategies,
    membership,
    strategy_phenomenon,
    weights_reproduce,
)
from bellcause.prob import Scenario, predicted_phenomenon, reproduces
from bellcause.properties import is_local, is_predetermined, is_signal_local
from bellcause.quantum import (
    TSIRELSON_ALICE,
    TSIRELSON_BOB,
    born_phenomenon,
    chsh_value,
    max_abs_chsh,
    random_direction,
    random_state,
    singlet,
    tsirelson_phenomenon,
    werner,
)
from bellcause.theorems import LEMMAS, verify_lemma


def test_criterion_1_singlet_violates_chsh(criterion):
    with criterion(1, "singlet at Tsirelson angles: |CHSH| = 2 sqrt 2, certificate bound 2", 1.0):
        f = born_phenomenon(singlet(), TSIRELSON_ALICE, TSIRELSON_BOB)
        # with these angles the maximal ordering is a1=1, a2=0, b1=0, b2=1
        assert abs(abs(chsh_value(f, 1, 0, 0, 1)) - 2 * math.sqrt(2)) <= 1e-9
        assert abs(max_abs_chsh(f) - 2 * math.sqrt(2)) <= 1e-9
        result = membership(f)
        assert not result.member
        assert result.certificate.bound == 2
        assert result.certificate.value > 2
        assert certificate_is_sound(result.certificate, result.phenomenon)


def test_criterion_2_deterministic_chsh_bound(criterion):
    with criterion(2, "max |CHSH| over the 16 deterministic strategies is exactly 2", 0.1):
        sc = Scenario()
        strategies = enumerate_strategies(sc)
        assert len(strategies) == 16
        values = [max_abs_chsh(strategy_phenomenon(s, sc)) for s in strategies]
        assert all(isinstance(v, Fraction) for v in values)
        assert max(values) == 2


def test_criterion_3_fine_constructive(criterion):
    with criterion(3, "200 locally causal rational models: determinize and membership exact", 30.0):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            model = random_hv_model(rng, family="factorized", exact=True)
            f = predicted_phenomenon(model)
            det = determinize(model)
            assert is_predetermined(det, tol=0).holds and is_local(det, tol=0).holds
            assert reproduces(det, f, tol=0)
            result = membership(f)
            assert result.member and not result.rationalized
            assert weights_reproduce(result)


def test_criterion_4_implications(criterion):
    with criterion(4, "implication search over 1000 models per implication", 60.0):
        lp = check_implication(["locality", "predetermination"], "local_causality", trials=1000, seed=1)
        assert lp.tested > 0 and lp.holds, lp.summary()
        lc = check_implication(["local_causality"], "bell_local", trials=1000, seed=2)
        assert lc.tested > 0 and lc.holds, lc.summary()
        coins = independent_coins()
        converse = check_implication(["local_causality"], "predetermination", trials=1000, seed=3,
                                     extra_models=[coins])
        assert any(m is coins for _, m in converse.counterexamples)


def _werner_is_local(v):
    return membership(tsirelson_phenomenon(werner(v)))


def test_criterion_5_werner_threshold(criterion):
    with criterion(5, "Werner LP threshold within 0.01 of 1/sqrt 2, agreeing with CHSH", 30.0):
        lo, hi = 0.0, 1.0
        assert _werner_is_local(lo).member and not _werner_is_local(hi).member
        while hi - lo > 1e-6:
            mid = (lo + hi) / 2
            if _werner_is_local(mid).member:
                lo = mid
            else:
                hi = mid
        v_star = (lo + hi) / 2
        assert abs(v_star - 1 / math.sqrt(2)) <= 0.01
        # the LP verdict coincides with the exact CHSH value of the same table
        for v in list(np.linspace(0, 1, 41)) + [lo, hi]:
            result = _werner_is_local(float(v))
            assert result.member == (max_abs_chsh(result.phenomenon) <= 2), v
            assert abs(float(max_abs_chsh(tsirelson_phenomenon(werner(float(v))))) - 2 * math.sqrt(2) * v) < 1e-9


def test_criterion_6_quantum_no_signaling(criterion):
    with criterion(6, "1000 random quantum configurations are signal-local at 1e-12", 10.0):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            state = random_state(rng)
            alice = [random_direction(rng) for _ in range(2)]
            bob = [random_direction(rng) for _ in range(2)]
            assert is_signal_local(born_phenomenon(state, alice, bob), tol=1e-12).holds


def test_criterion_7_causal_suite(criterion):
    with criterion(7, "causal principles on the Bell DAG variants and the tuned PR box", 10.0):
        base = classical_bell_model("local_causal")
        assert base.edges == bell_dag("local_causal").edges
        for p in ("free_choice", "relativistic_causality", "local_causality", "local_agency",
                  "no_superdeterminism"):
            assert check(base, p).holds, p
        assert not check(classical_bell_model("superluminal"), "relativistic_causality").holds
        sd = classical_bell_model("superdeterministic")
        assert not check(sd, "free_choice").holds
        assert not check(sd, "no_superdeterminism").holds
        verdict = check_no_fine_tuning(tuned_pr_box_model())
        assert not verdict.holds
        assert ["a", "B", []] in verdict.witness["violations"]


def _unlabeled_dags(n):
    """One representative per isomorphism class of DAGs on n nodes."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    perms = list(itertools.permutations(range(n)))
    seen, out = set(), []
    for mask in range(1 << len(pairs)):
        edges = [p for k, p in enumerate(pairs) if mask >> k & 1]
        key = min(tuple(sorted((pi[u], pi[v]) for u, v in edges)) for pi in perms)
        if key not in seen:
            seen.add(key)
            out.append(edges)
    return out


def _dirichlet_model(labels, edges, rng):
    events = [SpacetimeEvent(lab, i, 0, EventKind.LATENT) for i, lab in enumerate(labels)]
    model = CausalModel(events, edges)
    cpt = {}
    for lab in labels:
        k = len(model.parents(lab))
        cpt[lab] = rng.dirichlet(np.ones(2), size=(2,) * k) if k else rng.dirichlet(np.ones(2))
    return model.with_tables(cpt)


def _disjoint_triples(labels):
    """Every (X, Y, Z) of disjoint node sets with X, Y nonempty, up to swapping X and Y."""
    for roles in itertools.product(range(4), repeat=len(labels)):  # 0 unused, 1 X, 2 Y, 3 Z
        X = [v for v, r in zip(labels, roles) if r == 1]
        Y = [v for v, r in zip(labels, roles) if r == 2]
        if X and Y and labels.index(X[0]) < labels.index(Y[0]):
            yield X, Y, [v for v, r in zip(labels, roles) if r == 3]


def test_criterion_8_d_separation_soundness(criterion):
    with criterion(8, "d-separation implies numeric CI on all DAGs up to 5 nodes x 50 draws", 300.0):
        rng = np.random.default_rng(8)
        counts, checked, violations = [], 0, []
        for n in range(1, 6):
            dags = _unlabeled_dags(n)
            counts.append(len(dags))
            labels = [f"v{i}" for i in range(n)]
            for edges in dags:
                named = [(labels[u], labels[v]) for u, v in edges]
                skeleton = CausalModel([SpacetimeEvent(lab, i, 0) for i, lab in enumerate(labels)], named)
                queries = [q for q in _disjoint_triples(labels) if d_separated(skeleton, *q)]
                for _ in range(50):
                    joint = joint_distribution(_dirichlet_model(labels, named, rng))
                    for X, Y, Z in queries:
                        checked += 1
                        gap = ci_gap(joint, X, Y, Z)[0]
                        if gap > 1e-9:
                            violations.append((edges, X, Y, Z, gap))
        assert counts == [1, 2, 6, 31, 302]
        assert checked > 0
        assert violations == []


def test_criterion_9_lemma_harness(criterion):
    with criterion(9, "500 seeded trials per lemma, zero counterexamples", 300.0):
        for lemma_id in sorted(LEMMAS):
            report = verify_lemma(lemma_id, trials=500, seed=lemma_id)
            assert report.tested > 0 and report.holds, report.summary()
