"""Random hidden-variable models and counterexample search over property implications."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .errors import InsufficientSamples
from .polytope import enumerate_strategies, membership, strategy_table
from .prob import DEFAULT_TOL, HVModel, Scenario, as_exact_array, pr_box, predicted_phenomenon
from .properties import (
    is_factorizable,
    is_local,
    is_locally_causal,
    is_predetermined,
    is_predictable,
    is_signal_local,
)

QUANTUM = 64

# Family mixture: generic tables rarely satisfy any property, so structured
# families keep every antecedent filter populated.
FAMILIES = ("generic", "factorized", "deterministic_local", "deterministic", "no_signaling_local")
FAMILY_WEIGHTS = (0.3, 0.25, 0.15, 0.15, 0.15)


def quantize(p: np.ndarray, denominator: int = QUANTUM) -> list[Fraction]:
    """Round a probability vector to multiples of ``1/denominator`` by largest remainder."""
    scaled = np.asarray(p, dtype=float) * denominator
    base = np.floor(scaled).astype(int)
    short = denominator - int(base.sum())
    order = np.argsort(-(scaled - base), kind="stable")
    base[order[:short]] += 1
    return [Fraction(int(k), denominator) for k in base]


def _dirichlet(rng, n, exact):
    p = rng.dirichlet(np.ones(n))
    return np.array(quantize(p), dtype=object) if exact else p


def random_hv_model(rng: np.random.Generator, scenario: Scenario | None = None,
                    family: Optional[str] = None, exact: bool = True) -> HVModel:
    """One random model; ``family`` is drawn from the default mixture when omitted."""
    sc = scenario or Scenario()
    if family is None:
        family = FAMILIES[rng.choice(len(FAMILIES), p=FAMILY_WEIGHTS)]
    L = int(rng.integers(1, 5))
    na, nb, oa, ob = sc.shape
    prior = _dirichlet(rng, L, exact)
    zero = Fraction(0) if exact else 0.0
    resp = np.full((L, na, nb, oa, ob), zero, dtype=object if exact else float)

    if family == "generic":
        for lam in range(L):
            for a in range(na):
                for b in range(nb):
                    resp[lam, a, b] = _dirichlet(rng, oa * ob, exact).reshape(oa, ob)
    elif family == "factorized":
        for lam in range(L):
            pa = [_dirichlet(rng, oa, exact) for _ in range(na)]
            pb = [_dirichlet(rng, ob, exact) for _ in range(nb)]
            for a in range(na):
                for b in range(nb):
                    resp[lam, a, b] = np.outer(pa[a], pb[b])
    elif family == "deterministic_local":
        strategies = enumerate_strategies(sc)
        for lam in range(L):
            s = strategies[int(rng.integers(len(strategies)))]
            resp[lam] = strategy_table(s, sc)
    elif family == "deterministic":
        for lam in range(L):
            for a in range(na):
                for b in range(nb):
                    resp[lam, a, b, int(rng.integers(oa)), int(rng.integers(ob))] = 1
    elif family == "no_signaling_local":
        # per lambda: a mixture of a PR box with one deterministic vertex
        strategies = enumerate_strategies(sc)
        box = pr_box(sc).table
        for lam in range(L):
            q = _dirichlet(rng, 2, exact)
            s = strategies[int(rng.integers(len(strategies)))]
            resp[lam] = q[0] * box + q[1] * strategy_table(s, sc)
    else:
        raise ValueError(f"unknown family {family!r}")
    if exact:
        return HVModel(sc, list(prior), as_exact_array(resp))
    return HVModel(sc, prior, resp.astype(float))


def independent_coins(scenario: Scenario | None = None) -> HVModel:
    """Single lambda, every response cell uniform."""
    sc = scenario or Scenario()
    cell = Fraction(1, sc.cells_per_block)
    resp = np.full((1,) + sc.shape, cell, dtype=object)
    return HVModel(sc, [Fraction(1)], resp)


def _bell_local(model: HVModel, tol: float) -> bool:
    return membership(predicted_phenomenon(model)).member


MODEL_PROPERTIES = {
    "predetermination": lambda m, tol: is_predetermined(m, tol).holds,
    "locality": lambda m, tol: is_local(m, tol).holds,
    "local_causality": lambda m, tol: is_locally_causal(m, tol).holds,
    "factorizability": lambda m, tol: is_factorizable(m, tol).holds,
    "predictability": lambda m, tol: is_predictable(predicted_phenomenon(m), tol).holds,
    "signal_locality": lambda m, tol: is_signal_local(predicted_phenomenon(m), tol).holds,
    "bell_local": _bell_local,
}


@dataclass
class ImplicationReport:
    antecedents: tuple[str, ...]
    consequent: str
    trials: int
    seed: int
    tested: int = 0
    counterexamples: list = field(default_factory=list)  # (trial index, model)

    @property
    def holds(self) -> bool:
        return not self.counterexamples

    def summary(self) -> str:
        lhs = " & ".join(self.antecedents) or "true"
        return (f"{lhs} => {self.consequent}: {len(self.counterexamples)} counterexamples / "
                f"{self.tested} tested ({self.trials} sampled)")

    def to_dict(self) -> dict:
        return {
            "antecedents": list(self.antecedents),
            "consequent": self.consequent,
            "trials": self.trials,
            "seed": self.seed,
            "tested": self.tested,
            "counterexample_trials": [i for i, _ in self.counterexamples],
        }


def check_implication(antecedents: Iterable[str], consequent: str, trials: int = 1000, seed: int = 0,
                      scenario: Scenario | None = None, tol: float = DEFAULT_TOL,
                      extra_models: Iterable[HVModel] = ()) -> ImplicationReport:
    """Search random models satisfying every antecedent for one violating the consequent.

    Each trial draws from its own generator spawned from ``seed``, so results
    do not depend on evaluation order.  ``extra_models`` are tested after the
    random ones (trial index -1).
    """
    antecedents = tuple(antecedents)
    for name in antecedents + (consequent,):
        if name not in MODEL_PROPERTIES:
            raise ValueError(f"unknown model-level property {name!r}")
    if trials < 1:
        raise ValueError("trials must be positive")
    report = ImplicationReport(antecedents, consequent, trials, seed)
    children = np.random.SeedSequence(seed).spawn(trials)

    def visit(idx, model):
        if all(MODEL_PROPERTIES[p](model, tol) for p in antecedents):
            report.tested += 1
            if not MODEL_PROPERTIES[consequent](model, tol):
                report.counterexamples.append((idx, model))

    for i, child in enumerate(children):
        visit(i, random_hv_model(np.random.default_rng(child), scenario))
    for model in extra_models:
        visit(-1, model)
    if report.tested == 0:
        raise InsufficientSamples(f"no sampled model satisfied {antecedents}")
    return report
