"""Scenarios, phenomena and finite hidden-variable models.

Tables are numpy arrays indexed ``[a, b, A, B]`` (settings first, then
outcomes), which makes C-order flattening the canonical lexicographic cell
order.  Hidden-variable responses carry a leading lambda axis.

Two representations exist side by side: *exact* tables hold
:class:`fractions.Fraction` objects in an ``object`` array, *floating* tables
are ``float64``.  They are never combined implicitly; use ``to_exact`` /
``to_float`` to promote.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    NonNormalized,
    NonNormalizedModel,
    RepresentationError,
    ScenarioMismatch,
)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_DENOMINATOR = 10**6

ALICE = "alice"
BOB = "bob"


@dataclass(frozen=True)
class Scenario:
    n_settings_alice: int = 2
    n_settings_bob: int = 2
    n_outcomes_alice: int = 2
    n_outcomes_bob: int = 2
    preparation_label: str = "c"

    def __post_init__(self):
        for name in ("n_settings_alice", "n_settings_bob", "n_outcomes_alice", "n_outcomes_bob"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.n_settings_alice, self.n_settings_bob, self.n_outcomes_alice, self.n_outcomes_bob)

    @property
    def cells_per_block(self) -> int:
        return self.n_outcomes_alice * self.n_outcomes_bob

    def setting_pairs(self) -> Iterator[tuple[int, int]]:
        return itertools.product(range(self.n_settings_alice), range(self.n_settings_bob))

    def cells(self) -> Iterator[tuple[int, int, int, int]]:
        """All ``(a, b, A, B)`` in canonical lexicographic order."""
        return itertools.product(*(range(n) for n in self.shape))

    @classmethod
    def from_shape(cls, shape: Sequence[int], preparation_label: str = "c") -> "Scenario":
        na, nb, oa, ob = (int(n) for n in shape)
        return cls(na, nb, oa, ob, preparation_label)


# -- representation helpers -------------------------------------------------


def _is_exact_value(v) -> bool:
    return isinstance(v, (Fraction, int, np.integer)) and not isinstance(v, bool)


def to_fraction(v) -> Fraction:
    """Exact value as a Fraction over Python ints.

    ``Fraction(np.int64(3))`` keeps numpy integers inside and overflows
    silently later, so numerators and denominators are converted explicitly.
    """
    if isinstance(v, str):
        v = Fraction(v)
    if not _is_exact_value(v):
        raise RepresentationError(f"non-exact value {v!r} in exact table; promote explicitly")
    if isinstance(v, Fraction):
        return Fraction(int(v.numerator), int(v.denominator))
    return Fraction(int(v))


def as_exact_array(values) -> np.ndarray:
    """Coerce to an object array of Fractions; floats are rejected."""
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_fraction(v)
    return out


def as_float_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == object:
        if any(isinstance(v, Fraction) for v in arr.flat):
            raise RepresentationError("exact value in floating table; promote explicitly")
    return np.array(arr, dtype=np.float64)


def is_exact_array(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _coerce(values) -> np.ndarray:
    arr = np.asarray(values, dtype=object) if not isinstance(values, np.ndarray) else values
    if arr.dtype == object:
        kinds = {_is_exact_value(v) or isinstance(v, str) for v in arr.flat}
        if kinds == {True}:
            return as_exact_array(arr)
        if True in kinds:
            raise RepresentationError("table mixes exact and floating values")
        return as_float_array(arr.astype(np.float64))
    if np.issubdtype(arr.dtype, np.integer):
        return as_exact_array(arr)
    return as_float_array(arr)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def rationalize(x: float, max_denominator: int = DEFAULT_MAX_DENOMINATOR) -> Fraction:
    """Continued-fraction approximation of a float, clamped at zero."""
    return max(Fraction(float(x)).limit_denominator(max_denominator), Fraction(0))


def _check_distributions(arr: np.ndarray, n_lead: int, exact: bool, tol: float, err, what: str):
    """Rows are the trailing two axes; ``n_lead`` leading axes index the rows."""
    lead_shape = arr.shape[:n_lead]
    for idx in itertools.product(*(range(n) for n in lead_shape)):
        block = arr[idx]
        total = block.sum()
        if exact:
            bad_entry = any(v < 0 or v > 1 for v in block.flat)
            bad_sum = total != 1
        else:
            bad_entry = bool(np.any(block < -tol) or np.any(block > 1 + tol))
            bad_sum = abs(total - 1.0) > tol
        if bad_entry or bad_sum:
            raise err(f"{what} block {idx} is not a probability distribution (sum={total})")


# -- phenomenon -------------------------------------------------------------


class Phenomenon:
    """Conditional frequency table ``f(A,B|a,b,c)`` for a fixed preparation."""

    __slots__ = ("scenario", "table")

    def __init__(self, scenario: Scenario, table, tol: float = DEFAULT_TOL):
        arr = _coerce(table)
        if arr.shape != scenario.shape:
            raise ScenarioMismatch(f"table shape {arr.shape} does not match scenario {scenario.shape}")
        _check_distributions(arr, 2, is_exact_array(arr), tol, NonNormalized, "setting pair (a,b)")
        object.__setattr__(self, "scenario", scenario)
        object.__setattr__(self, "table", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("Phenomenon is immutable")

    def __eq__(self, other):
        if not isinstance(other, Phenomenon):
            return NotImplemented
        return (
            self.scenario == other.scenario
            and self.exact == other.exact
            and bool(np.all(self.table == other.table))
        )

    __hash__ = None

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"Phenomenon({self.scenario.shape}, {kind})"

    @property
    def exact(self) -> bool:
        return is_exact_array(self.table)

    def __getitem__(self, cell):
        return self.table[cell]

    def to_float(self) -> "Phenomenon":
        if not self.exact:
            return self
        return Phenomenon(self.scenario, self.table.astype(np.float64))

    def to_exact(self, max_denominator: int = DEFAULT_MAX_DENOMINATOR) -> "Phenomenon":
        """Rationalize each cell, then renormalize every ``(a, b)`` block exactly."""
        if self.exact:
            return self
        out = np.empty(self.scenario.shape, dtype=object)
        for a, b in self.scenario.setting_pairs():
            block = [rationalize(v, max_denominator) for v in self.table[a, b].flat]
            total = sum(block)
            if total == 0:
                raise NonNormalized(f"setting pair {(a, b)} rationalizes to all zeros")
            out[a, b] = np.array([v / total for v in block], dtype=object).reshape(
                self.scenario.n_outcomes_alice, self.scenario.n_outcomes_bob
            )
        return Phenomenon(self.scenario, out)

    @classmethod
    def from_function(cls, scenario: Scenario, fn) -> "Phenomenon":
        """Build a table from ``fn(A, B, a, b)``."""
        values = [fn(A, B, a, b) for a, b, A, B in scenario.cells()]
        arr = np.empty(len(values), dtype=object)
        arr[:] = values
        return cls(scenario, arr.reshape(scenario.shape))

    @classmethod
    def uniform(cls, scenario: Scenario | None = None) -> "Phenomenon":
        scenario = scenario or Scenario()
        p = Fraction(1, scenario.cells_per_block)
        return cls.from_function(scenario, lambda A, B, a, b: p)


def pr_box(scenario: Scenario | None = None) -> Phenomenon:
    """Popescu-Rohrlich box: ``A xor B = a*b`` with uniform marginals."""
    scenario = scenario or Scenario()
    if scenario.n_outcomes_alice != 2 or scenario.n_outcomes_bob != 2:
        raise ValueError("PR box needs binary outcomes")
    half = Fraction(1, 2)
    return Phenomenon.from_function(
        scenario, lambda A, B, a, b: half if (A ^ B) == (a * b) % 2 else Fraction(0)
    )


def marginal(phenomenon: Phenomenon, side: str) -> np.ndarray:
    """Single-party marginal indexed ``[outcome, local setting, remote setting]``."""
    t = phenomenon.table
    if side == ALICE:
        return np.transpose(t.sum(axis=3), (2, 0, 1))
    if side == BOB:
        return np.transpose(t.sum(axis=2), (2, 1, 0))
    raise ValueError(f"side must be {ALICE!r} or {BOB!r}")


# -- hidden-variable model ---------------------------------------------------


class HVModel:
    """Finite hidden-variable model: prior ``P(lambda|c)`` and responses ``P(A,B|a,b,c,lambda)``.

    ``response`` is indexed ``[lam, a, b, A, B]``; ``prior`` by the position of
    the label in ``labels``.
    """

    __slots__ = ("scenario", "labels", "prior", "response")

    def __init__(self, scenario: Scenario, prior, response, labels=None, tol: float = DEFAULT_TOL):
        prior = _coerce(prior)
        response = _coerce(response)
        if is_exact_array(prior) != is_exact_array(response):
            raise RepresentationError("prior and response use different representations")
        if prior.ndim != 1 or len(prior) == 0:
            raise NonNormalizedModel("prior must be a non-empty vector")
        if response.shape != (len(prior),) + scenario.shape:
            raise ScenarioMismatch(
                f"response shape {response.shape} != {(len(prior),) + scenario.shape}"
            )
        labels = tuple(range(len(prior))) if labels is None else tuple(labels)
        if len(labels) != len(prior) or len(set(labels)) != len(labels):
            raise ValueError("lambda labels must be unique and match the prior length")
        exact = is_exact_array(prior)
        _check_distributions(prior.reshape(1, 1, -1), 2, exact, tol, NonNormalizedModel, "prior")
        _check_distributions(response, 3, exact, tol, NonNormalizedModel, "response (lam,a,b)")
        object.__setattr__(self, "scenario", scenario)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "prior", _frozen(prior))
        object.__setattr__(self, "response", _frozen(response))

    def __setattr__(self, name, value):
        raise AttributeError("HVModel is immutable")

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"HVModel({self.scenario.shape}, |lambda|={len(self.labels)}, {kind})"

    @property
    def exact(self) -> bool:
        return is_exact_array(self.prior)

    def to_float(self) -> "HVModel":
        if not self.exact:
            return self
        return HVModel(
            self.scenario, self.prior.astype(np.float64), self.response.astype(np.float64), self.labels
        )

    @classmethod
    def single(cls, phenomenon: Phenomenon, label="lambda") -> "HVModel":
        """One-point lambda support whose response is the phenomenon itself."""
        one = Fraction(1) if phenomenon.exact else 1.0
        return cls(phenomenon.scenario, [one], phenomenon.table[None, ...], labels=[label])

    @classmethod
    def mixture(cls, weights, phenomena: Sequence[Phenomenon], labels=None) -> "HVModel":
        scenario = phenomena[0].scenario
        response = np.stack([p.table for p in phenomena])
        return cls(scenario, list(weights), response, labels)


def predicted_phenomenon(model: HVModel) -> Phenomenon:
    """Sum over lambda of response times prior; exact in, exact out."""
    weights = model.prior.reshape((-1,) + (1,) * 4)
    table = (model.response * weights).sum(axis=0)
    try:
        return Phenomenon(model.scenario, table)
    except NonNormalized as exc:
        raise NonNormalizedModel(str(exc)) from exc


def max_abs_difference(p: Phenomenon, q: Phenomenon):
    if p.scenario != q.scenario:
        raise ScenarioMismatch(f"{p.scenario} vs {q.scenario}")
    if p.exact != q.exact:
        raise RepresentationError("compare exact with exact and float with float")
    return max(abs(x - y) for x, y in zip(p.table.flat, q.table.flat))


def reproduces(model: HVModel, phenomenon: Phenomenon, tol=None) -> bool:
    """Whether the model's predicted table matches ``phenomenon`` cellwise within ``tol``.

    Exact comparisons require ``tol == 0``.
    """
    if model.scenario != phenomenon.scenario:
        raise ScenarioMismatch(f"{model.scenario} vs {phenomenon.scenario}")
    predicted = predicted_phenomenon(model)
    if predicted.exact and phenomenon.exact:
        if tol not in (None, 0):
            raise ValueError("exact comparison takes tol=0")
        return max_abs_difference(predicted, phenomenon) == 0
    tol = DEFAULT_TOL if tol is None else tol
    return max_abs_difference(predicted, phenomenon) <= tol
