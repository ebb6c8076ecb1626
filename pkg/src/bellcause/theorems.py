"""Instance-level verification of the lemmata linking postulates and principles,
the calibration search behind the no-go theorems, and the reconciliation report.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .causal import (
    DEFAULT_TOL,
    CausalModel,
    EventKind,
    Principle,
    PrincipleVerdict,
    SpacetimeEvent,
    bell_dag,
    check_agent_causation,
    check_common_causes,
    check_decorrelating_explanation,
    check_free_choice,
    check_local_agency,
    check_local_causality,
    check_locality_principle,
    check_no_superdeterminism,
    check_reichenbach,
    check_relativistic_embedding,
    hv_causal_model,
    common_cause_model,
    in_past_lightcone,
    superluminal_model,
)
from .errors import InsufficientSamples
from .polytope import Certificate, evaluate, membership, model_from_weights
from .prob import HVModel, Phenomenon
from .properties import is_signal_local

# -- random embedded models ------------------------------------------------------------


def random_causal_model(rng: np.random.Generator, relativistic: bool = True,
                        n_nodes: Optional[int] = None) -> CausalModel:
    """Random binary model on 4-6 events with Dirichlet(1) tables.

    Edges are drawn inside past light cones when ``relativistic`` is set and
    merely forward in time otherwise.  Free choices are made parentless in
    about half the draws; a choice that keeps parents ignores them in about
    half of those.  Occasionally two non-choice nodes with identical parents
    share one joint table, which makes the model non-Markov.
    """
    n = n_nodes or int(rng.integers(4, 7))
    cells = [(t, x) for t in range(6) for x in range(-3, 4)]
    picks = rng.choice(len(cells), size=n, replace=False)
    coords = sorted((cells[i] for i in picks), key=lambda c: (c[0], c[1]))
    n_choices = int(rng.integers(1, 3))
    choice_idx = set(rng.choice(n, size=n_choices, replace=False).tolist())
    events = []
    for i, (t, x) in enumerate(coords):
        if i in choice_idx:
            kind = EventKind.FREE_CHOICE
        else:
            kind = EventKind.OUTCOME if rng.random() < 0.5 else EventKind.LATENT
        events.append(SpacetimeEvent(f"v{i}", t, x, kind))

    p_edge = rng.uniform(0.3, 0.7)
    free = rng.random() < 0.5
    edges = set()
    for u, v in itertools.permutations(events, 2):
        allowed = in_past_lightcone(u, v) if relativistic else u.t < v.t
        if not allowed or (free and v.kind == EventKind.FREE_CHOICE):
            continue
        if rng.random() < p_edge:
            edges.add((u.label, v.label))
    model = CausalModel(events, edges)

    cpt = {}
    for e in events:
        ps = model.parents(e.label)
        shape = (2,) * len(ps)
        if e.kind == EventKind.FREE_CHOICE and ps and rng.random() < 0.5:
            row = rng.dirichlet(np.ones(2))
            cpt[e.label] = np.broadcast_to(row, shape + (2,)).copy()
        else:
            cpt[e.label] = rng.dirichlet(np.ones(2), size=shape) if ps else rng.dirichlet(np.ones(2))

    joint = {}
    if rng.random() < 0.2:
        candidates = [
            (u.label, v.label) for u, v in itertools.combinations(events, 2)
            if u.kind != EventKind.FREE_CHOICE and v.kind != EventKind.FREE_CHOICE
            and model.parents(u.label) == model.parents(v.label)
        ]
        if candidates:
            pair = candidates[int(rng.integers(len(candidates)))]
            ps = model.joint_parents(pair)
            table = rng.dirichlet(np.ones(4), size=(2,) * len(ps)).reshape((2,) * len(ps) + (2, 2))
            joint[pair] = table
            for lab in pair:
                del cpt[lab]
    return model.with_tables(cpt, joint=joint)


# -- lemma harness ---------------------------------------------------------------------

Check = Callable[..., PrincipleVerdict]


@dataclass(frozen=True)
class Lemma:
    number: int
    antecedents: tuple[Check, ...]
    consequent: Check

    @property
    def statement(self) -> str:
        lhs = " + ".join(_name(c) for c in self.antecedents)
        return f"{lhs} => {_name(self.consequent)}"


def _name(check: Check) -> str:
    return check.__name__.removeprefix("check_").removesuffix("_embedding")


LEMMAS = {
    1: Lemma(1, (check_common_causes, check_decorrelating_explanation), check_reichenbach),
    2: Lemma(2, (check_reichenbach, check_relativistic_embedding), check_local_causality),
    3: Lemma(3, (check_relativistic_embedding, check_common_causes, check_free_choice), check_local_agency),
    4: Lemma(4, (check_agent_causation, check_relativistic_embedding), check_locality_principle),
    5: Lemma(5, (check_agent_causation, check_relativistic_embedding), check_local_agency),
    6: Lemma(6, (check_agent_causation, check_relativistic_embedding), check_no_superdeterminism),
    7: Lemma(7, (check_free_choice, check_common_causes), check_agent_causation),
}


def _run(check: Check, model: CausalModel, tol: float) -> PrincipleVerdict:
    if check in (check_relativistic_embedding, check_free_choice):
        return check(model)
    return check(model, tol)


@dataclass
class LemmaReport:
    lemma: int
    statement: str
    trials: int
    seed: int
    tested: int = 0
    counterexamples: list = field(default_factory=list)  # (trial, model, verdict)

    @property
    def holds(self) -> bool:
        return not self.counterexamples

    def summary(self) -> str:
        return (f"lemma {self.lemma} ({self.statement}): "
                f"{len(self.counterexamples)} counterexamples / {self.tested} tested")

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "statement": self.statement,
            "trials": self.trials,
            "seed": self.seed,
            "tested": self.tested,
            "counterexamples": [{"trial": i, "witness": v.witness} for i, _, v in self.counterexamples],
        }


def verify_lemma(lemma_id: int, trials: int = 500, seed: int = 0, tol: float = DEFAULT_TOL) -> LemmaReport:
    """Sample models, keep those meeting every antecedent, and test the consequent."""
    if lemma_id not in LEMMAS:
        raise ValueError(f"lemma id must be one of {sorted(LEMMAS)}")
    lemma = LEMMAS[lemma_id]
    assumes_rc = check_relativistic_embedding in lemma.antecedents
    report = LemmaReport(lemma_id, lemma.statement, trials, seed)
    for i, child in enumerate(np.random.SeedSequence([seed, lemma_id]).spawn(trials)):
        rng = np.random.default_rng(child)
        relativistic = assumes_rc or rng.random() < 0.5
        model = random_causal_model(rng, relativistic=relativistic)
        if not all(_run(c, model, tol).holds for c in lemma.antecedents):
            continue
        report.tested += 1
        verdict = _run(lemma.consequent, model, tol)
        if not verdict.holds:
            report.counterexamples.append((i, model, verdict))
    if report.tested == 0:
        raise InsufficientSamples(f"no sampled model satisfied the antecedents of lemma {lemma_id}")
    return report


# -- calibration search ----------------------------------------------------------------


def max_tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Largest total-variation distance over setting blocks ``[a, b]``."""
    return float(np.max(0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum(axis=(-2, -1))))


def tv_lower_bound(certificate: Certificate, target: Phenomenon) -> float:
    """Distance below which no local table can come to ``target``.

    For any local ``p``: ``g.f - bound <= g.(f - p) <= sum_ab range_ab(g) * TV_ab``.
    """
    g = np.asarray(certificate.coefficients, dtype=float)
    spread = (g.max(axis=(2, 3)) - g.min(axis=(2, 3))).sum()
    value = float(evaluate(certificate.coefficients, target.to_float()))
    return max(0.0, (value - float(certificate.bound)) / spread)


@dataclass(frozen=True)
class CalibrationResult:
    distance: float
    lower_bound: float
    prior: np.ndarray
    alice: np.ndarray  # [lam, a, A]
    bob: np.ndarray  # [lam, b, B]

    def model(self) -> CausalModel:
        L = len(self.prior)
        na, oa = self.alice.shape[1:]
        nb, ob = self.bob.shape[1:]
        arity = {"lambda": L, "a": na, "b": nb, "A": oa, "B": ob}
        cpt = {"c": np.array([1.0]), "lambda": self.prior[None, :], "a": np.full(na, 1 / na),
               "b": np.full(nb, 1 / nb), "A": self.alice, "B": self.bob}
        return bell_dag("local_causal", arity).with_tables(cpt)


def _predict(prior, alice, bob):
    return np.einsum("nl,nlaA,nlbB->nabAB", prior, alice, bob)


def calibrate_local_model(target: Phenomenon, n_lambda: int = 4, random_attempts: int = 10**4,
                          refinements: int = 10**3, seed: int = 0,
                          lower_bound: Optional[float] = None) -> CalibrationResult:
    """Best local-causal table fit (max-TV) from random draws plus hill-climbing refinement."""
    rng = np.random.default_rng(seed)
    f = np.asarray(target.to_float().table, dtype=float)
    na, nb, oa, ob = f.shape
    N = random_attempts
    prior = rng.dirichlet(np.ones(n_lambda), size=N)
    alice = rng.dirichlet(np.ones(oa), size=(N, n_lambda, na))
    bob = rng.dirichlet(np.ones(ob), size=(N, n_lambda, nb))
    dist = 0.5 * np.abs(_predict(prior, alice, bob) - f).sum(axis=(3, 4)).max(axis=(1, 2))
    k = int(np.argmin(dist))
    best = (float(dist[k]), np.log(prior[k]), np.log(alice[k]), np.log(bob[k]))

    def softmax(z):
        e = np.exp(z - z.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)

    # (1+1) evolution strategy on one parameter block at a time, success-driven step
    step = 0.3
    for i in range(refinements):
        z = [best[1].copy(), best[2].copy(), best[3].copy()]
        which = i % 3
        z[which] = z[which] + step * rng.normal(size=z[which].shape)
        p, a, b = softmax(z[0]), softmax(z[1]), softmax(z[2])
        d = max_tv_distance(_predict(p[None], a[None], b[None])[0], f)
        if d < best[0]:
            best = (d, *z)
            step = min(step * 1.3, 2.0)
        else:
            step = max(step * 0.97, 1e-2)
    d, zp, za, zb = best
    if lower_bound is None:
        result = membership(target)
        lower_bound = 0.0 if result.member else tv_lower_bound(result.certificate, target)
    return CalibrationResult(d, lower_bound, softmax(zp), softmax(za), softmax(zb))


# -- reconciliation ---------------------------------------------------------------------

POSTULATES = (
    Principle.FREE_CHOICE,
    Principle.RELATIVISTIC_CAUSALITY,
    Principle.COMMON_CAUSES,
    Principle.DECORRELATING_EXPLANATION,
)
# Which postulate each camp gives up when the conjunction fails.
REJECTED_BY = {"realist": Principle.RELATIVISTIC_CAUSALITY, "operationalist": Principle.DECORRELATING_EXPLANATION}

_POSTULATE_CHECKS = {
    Principle.FREE_CHOICE: check_free_choice,
    Principle.RELATIVISTIC_CAUSALITY: check_relativistic_embedding,
    Principle.COMMON_CAUSES: check_common_causes,
    Principle.DECORRELATING_EXPLANATION: check_decorrelating_explanation,
}


@dataclass
class ReconcileReport:
    """Postulate verdicts for one or more causal accounts of the input.

    A Bell-local phenomenon gets one account (the deterministic local model
    built from its membership weights).  Otherwise it gets a realist account
    (superluminal influence) and an operationalist account (a common cause
    that fails to decorrelate), when those can be built.
    """

    source: str  # "phenomenon", "hv_model" or "causal"
    accounts: dict[str, tuple[CausalModel, list[PrincipleVerdict]]]
    bell_local: Optional[bool] = None

    @property
    def all_hold(self) -> bool:
        """Whether some account satisfies all four postulates."""
        return any(all(v.holds for v in verdicts) for _, verdicts in self.accounts.values())

    def failing(self) -> dict[str, list[str]]:
        return {name: [v.principle.value for v in verdicts if not v.holds]
                for name, (_, verdicts) in self.accounts.items()}

    def rows(self) -> list[tuple[str, ...]]:
        out = []
        for i, p in enumerate(POSTULATES):
            stances = tuple("reject" if REJECTED_BY[camp] is p else "keep" for camp in ("realist", "operationalist"))
            statuses = tuple("holds" if verdicts[i].holds else "fails" for _, verdicts in self.accounts.values())
            out.append((p.value,) + stances + statuses)
        return out

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "bell_local": self.bell_local,
            "all_postulates_satisfiable": self.all_hold,
            "stances": {camp: p.value for camp, p in REJECTED_BY.items()},
            "accounts": {
                name: [v.to_dict() for v in verdicts] for name, (_, verdicts) in self.accounts.items()
            },
        }


def postulate_verdicts(model: CausalModel, tol: float = DEFAULT_TOL) -> list[PrincipleVerdict]:
    return [_run(_POSTULATE_CHECKS[p], model, tol) for p in POSTULATES]


def _accounts(models: dict, tol):
    return {name: (m, postulate_verdicts(m, tol)) for name, m in models.items()}


def reconcile(obj, tol: float = DEFAULT_TOL) -> ReconcileReport:
    """Which of the four postulates fail for the given input."""
    if isinstance(obj, CausalModel):
        return ReconcileReport("causal", _accounts({"given": obj}, tol))
    if isinstance(obj, HVModel):
        from .prob import predicted_phenomenon

        local = membership(predicted_phenomenon(obj)).member
        return ReconcileReport("hv_model", _accounts({"given": hv_causal_model(obj)}, tol), local)
    if isinstance(obj, Phenomenon):
        result = membership(obj)
        if result.member:
            models = {"local": hv_causal_model(model_from_weights(result))}
        else:
            models = {}
            if is_signal_local(obj, tol).holds:
                models["realist"] = superluminal_model(obj, tol)
            models["operationalist"] = common_cause_model(obj)
        return ReconcileReport("phenomenon", _accounts(models, tol), result.member)
    raise TypeError(f"cannot reconcile a {type(obj).__name__}")
