"""Local (Bell) polytope: deterministic strategies, exact membership, and the
two constructive directions of Fine's theorem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import CapExceeded, NotLocallyCausal, NotMember, ScenarioMismatch
from .prob import DEFAULT_MAX_DENOMINATOR, HVModel, Phenomenon, Scenario, as_exact_array
from .properties import is_locally_causal
from .simplex import phase_one

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class DeterministicStrategy:
    alice_map: tuple[int, ...]
    bob_map: tuple[int, ...]

    def check(self, scenario: Scenario):
        if len(self.alice_map) != scenario.n_settings_alice or len(self.bob_map) != scenario.n_settings_bob:
            raise ScenarioMismatch("strategy is not total over the scenario's settings")
        if any(not 0 <= x < scenario.n_outcomes_alice for x in self.alice_map) or any(
            not 0 <= x < scenario.n_outcomes_bob for x in self.bob_map
        ):
            raise ScenarioMismatch("strategy outcome out of range")


def strategy_count(scenario: Scenario) -> int:
    return scenario.n_outcomes_alice**scenario.n_settings_alice * scenario.n_outcomes_bob**scenario.n_settings_bob


def enumerate_strategies(scenario: Scenario, cap: int = DEFAULT_CAP) -> list[DeterministicStrategy]:
    """All deterministic strategies, Alice's map varying slowest, each map lexicographic."""
    count = strategy_count(scenario)
    if count > cap:
        raise CapExceeded(f"{count} strategies exceed the cap of {cap}")
    alice_maps = itertools.product(range(scenario.n_outcomes_alice), repeat=scenario.n_settings_alice)
    bob_maps = list(itertools.product(range(scenario.n_outcomes_bob), repeat=scenario.n_settings_bob))
    return [DeterministicStrategy(am, bm) for am in alice_maps for bm in bob_maps]


def strategy_table(s: DeterministicStrategy, scenario: Scenario) -> np.ndarray:
    t = np.zeros(scenario.shape, dtype=np.int64)
    for a, b in scenario.setting_pairs():
        t[a, b, s.alice_map[a], s.bob_map[b]] = 1
    return t


def strategy_phenomenon(s: DeterministicStrategy, scenario: Scenario) -> Phenomenon:
    s.check(scenario)
    return Phenomenon(scenario, as_exact_array(strategy_table(s, scenario)))


def _vertex_matrix(scenario: Scenario, cap: int) -> np.ndarray:
    """Row per strategy, column per cell (canonical order), 0/1 entries."""
    strategies = enumerate_strategies(scenario, cap)
    return np.stack([strategy_table(s, scenario).ravel() for s in strategies])


# -- functionals ------------------------------------------------------------------


def local_bound(coefficients, cap: int = DEFAULT_CAP) -> Fraction:
    """Maximum of ``sum coeff * f`` over all deterministic strategies."""
    coeff = as_exact_array(coefficients)
    scenario = Scenario.from_shape(coeff.shape)
    count = strategy_count(scenario)
    if count > cap:
        raise CapExceeded(f"{count} strategies exceed the cap of {cap}")
    # Separable maximization per Alice map: Bob's best response is chosen per b.
    best = None
    for am in itertools.product(range(scenario.n_outcomes_alice), repeat=scenario.n_settings_alice):
        total = Fraction(0)
        for b in range(scenario.n_settings_bob):
            total += max(
                sum(coeff[a, b, am[a], B] for a in range(scenario.n_settings_alice))
                for B in range(scenario.n_outcomes_bob)
            )
        if best is None or total > best:
            best = total
    return best


def local_bound_by_enumeration(coefficients, cap: int = DEFAULT_CAP) -> Fraction:
    """Reference route: evaluate the functional on every vertex table."""
    coeff = as_exact_array(coefficients)
    scenario = Scenario.from_shape(coeff.shape)
    return max(
        sum(coeff[c] for c in zip(*np.nonzero(strategy_table(s, scenario))))
        for s in enumerate_strategies(scenario, cap)
    )


def evaluate(coefficients, phenomenon: Phenomenon):
    return sum(c * f for c, f in zip(np.asarray(coefficients, dtype=object).flat, phenomenon.table.flat))


def chsh_functional(scenario: Scenario | None = None, minus=(1, 1), sign: int = 1,
                    settings=(0, 1, 0, 1)) -> np.ndarray:
    """CHSH as cell coefficients: ``sign * (E11 + E12 + E21 + E22 - 2 E_minus)``."""
    scenario = scenario or Scenario()
    a1, a2, b1, b2 = settings
    coeff = np.full(scenario.shape, Fraction(0), dtype=object)
    pairs = {(0, 0): (a1, b1), (0, 1): (a1, b2), (1, 0): (a2, b1), (1, 1): (a2, b2)}
    for key, (a, b) in pairs.items():
        s = -1 if key == tuple(minus) else 1
        for A, B in itertools.product(range(2), range(2)):
            parity = 1 if A == B else -1
            coeff[a, b, A, B] = Fraction(sign * s * parity)
    return coeff


def chsh_family(scenario: Scenario | None = None) -> list[np.ndarray]:
    """The eight CHSH facets of the two-setting binary scenario."""
    return [chsh_functional(scenario, minus, sign)
            for minus in itertools.product(range(2), range(2)) for sign in (1, -1)]


# -- membership -----------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Linear functional over cells with ``value > bound >= functional(vertex)`` for every vertex."""

    coefficients: np.ndarray
    bound: Fraction
    value: Fraction

    @property
    def violation(self) -> Fraction:
        return self.value - self.bound


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    phenomenon: Phenomenon
    weights: Optional[dict[int, Fraction]] = None
    certificate: Optional[Certificate] = None
    farkas: Optional[Certificate] = None
    rationalized: bool = False

    def __bool__(self):
        return self.member

    def to_dict(self) -> dict:
        def q(x):
            return f"{x.numerator}/{x.denominator}"

        out = {"member": self.member, "rationalized": self.rationalized}
        if self.weights is not None:
            out["weights"] = {str(k): q(v) for k, v in sorted(self.weights.items())}
        if self.certificate is not None:
            c = self.certificate
            out["certificate"] = {
                "coefficients": [q(Fraction(v)) for v in c.coefficients.flat],
                "bound": q(c.bound),
                "value": q(c.value),
            }
        return out


def _normalize_functional(coeff: np.ndarray) -> np.ndarray:
    """Subtract each block's mean and scale to unit max-abs coefficient."""
    coeff = coeff.copy()
    for a, b in itertools.product(range(coeff.shape[0]), range(coeff.shape[1])):
        block = coeff[a, b]
        mean = sum(block.flat) / block.size
        coeff[a, b] = block - mean
    scale = max(abs(v) for v in coeff.flat)
    if scale:
        coeff = coeff / scale
    return np.vectorize(Fraction, otypes=[object])(coeff)


def _certificate(coeff: np.ndarray, phenomenon: Phenomenon, cap: int) -> Certificate:
    bound = local_bound(coeff, cap)
    return Certificate(coeff, bound, evaluate(coeff, phenomenon))


def membership(phenomenon: Phenomenon, cap: int = DEFAULT_CAP,
               max_denominator: int = DEFAULT_MAX_DENOMINATOR) -> MembershipResult:
    """Exact convex-hull membership of the table among deterministic-strategy vertices.

    Floating tables are rationalized first (``rationalized`` is set on the
    result).  Non-members get a separating functional derived from the final
    phase-1 duals.
    """
    rationalized = not phenomenon.exact
    f = phenomenon.to_exact(max_denominator)
    scenario = f.scenario
    vertices = _vertex_matrix(scenario, cap)
    n_strats, n_cells = vertices.shape
    A = [list(vertices[:, c]) for c in range(n_cells)] + [[1] * n_strats]
    b = list(f.table.flat) + [Fraction(1)]
    result = phase_one(A, b)
    if result.feasible:
        weights = {s: w for s, w in enumerate(result.x) if w != 0}
        return MembershipResult(True, f, weights=weights, rationalized=rationalized)

    y = result.farkas
    raw = np.array(y[:n_cells], dtype=object).reshape(scenario.shape)
    farkas = Certificate(raw, -y[-1], evaluate(raw, f))
    certificate = _certificate(_normalize_functional(raw), f, cap)
    if certificate.value <= certificate.bound:  # pragma: no cover - normalization is affine
        certificate = farkas
    return MembershipResult(False, f, certificate=certificate, farkas=farkas, rationalized=rationalized)


def weights_reproduce(result: MembershipResult, cap: int = DEFAULT_CAP) -> bool:
    if not result.member:
        return False
    f = result.phenomenon
    strategies = enumerate_strategies(f.scenario, cap)
    total = np.full(f.scenario.shape, Fraction(0), dtype=object)
    for s, w in result.weights.items():
        total = total + w * strategy_table(strategies[s], f.scenario)
    return (
        all(w > 0 for w in result.weights.values())
        and sum(result.weights.values()) == 1
        and bool(np.all(total == f.table))
    )


def certificate_is_sound(cert: Certificate, phenomenon: Phenomenon, cap: int = DEFAULT_CAP) -> bool:
    """Check a separating functional by direct arithmetic over every vertex."""
    scenario = phenomenon.scenario
    coeff = np.asarray(cert.coefficients, dtype=object)
    flat = list(coeff.flat)
    for row in _vertex_matrix(scenario, cap):
        if sum(c for c, v in zip(flat, row) if v) > cert.bound:
            return False
    return evaluate(coeff, phenomenon.to_exact()) > cert.bound


# -- Fine's theorem, constructively ---------------------------------------------------


def model_from_weights(result: MembershipResult, scenario: Scenario | None = None,
                       cap: int = DEFAULT_CAP) -> HVModel:
    """Deterministic local model with lambda ranging over strategies of nonzero weight."""
    if not result.member:
        raise NotMember("phenomenon is outside the local polytope")
    scenario = scenario or result.phenomenon.scenario
    strategies = enumerate_strategies(scenario, cap)
    labels = sorted(result.weights)
    response = np.stack([as_exact_array(strategy_table(strategies[s], scenario)) for s in labels])
    prior = [result.weights[s] for s in labels]
    return HVModel(scenario, prior, response, labels=[f"s{s}" for s in labels])


def determinize(model: HVModel, tol: float = 1e-9) -> HVModel:
    """Replace each lambda by ``(lambda, r_A, r_B)`` with deterministic response functions.

    The new prior is ``P(lam) * prod_a P(r_A(a)|a,lam) * prod_b P(r_B(b)|b,lam)``;
    zero-weight points are dropped.
    """
    verdict = is_locally_causal(model, tol)
    if not verdict.holds:
        raise NotLocallyCausal(f"model is not locally causal: {verdict.witness}")
    sc = model.scenario
    resp = model.response
    alice_marg = resp.sum(axis=-1)[:, :, 0, :]  # [lam, a, A]
    bob_marg = resp.sum(axis=-2)[:, 0, :, :]  # [lam, b, B]
    one = Fraction(1) if model.exact else 1.0
    strategies = enumerate_strategies(sc)
    prior, response, labels = [], [], []
    for lam, label in enumerate(model.labels):
        for idx, s in enumerate(strategies):
            w = model.prior[lam]
            for a, A in enumerate(s.alice_map):
                w = w * alice_marg[lam, a, A]
            for b, B in enumerate(s.bob_map):
                w = w * bob_marg[lam, b, B]
            if w == 0:
                continue
            prior.append(w * one)
            table = strategy_table(s, sc)
            response.append(as_exact_array(table) if model.exact else table.astype(np.float64))
            labels.append((label, s.alice_map, s.bob_map))
    return HVModel(sc, prior, np.stack(response), labels=labels)
