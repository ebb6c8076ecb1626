"""Deciders for predetermination, predictability, locality, signal-locality
and local causality.

Exact tables are compared exactly; floating tables within ``tol``.  A failed
verdict always carries a witness naming the offending cell and the two
values that should have been equal, so it can be re-checked with
:func:`recheck_witness`.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np

from .prob import DEFAULT_TOL, HVModel, Phenomenon, predicted_phenomenon


class Property(str, enum.Enum):
    PREDETERMINATION = "predetermination"
    PREDICTABILITY = "predictability"
    LOCALITY = "locality"
    SIGNAL_LOCALITY = "signal_locality"
    LOCAL_CAUSALITY = "local_causality"
    FACTORIZABILITY = "factorizability"


@dataclass(frozen=True)
class PropertyVerdict:
    property_name: Property
    holds: bool
    witness: Optional[dict[str, Any]] = field(default=None)

    def __post_init__(self):
        if self.holds == (self.witness is not None):
            raise ValueError("a verdict carries a witness exactly when it fails")

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {
            "property": self.property_name.value,
            "holds": self.holds,
            "witness": None if self.witness is None else _jsonable(self.witness),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _close(x, y, exact: bool, tol: float) -> bool:
    return x == y if exact else abs(x - y) <= tol


def _is_bit(x, exact: bool, tol: float) -> bool:
    return _close(x, 0, exact, tol) or _close(x, 1, exact, tol)


def _value(x):
    return x if isinstance(x, Fraction) else float(x)


# -- Definitions 1 and 2 ------------------------------------------------------


def is_predetermined(model: HVModel, tol: float = DEFAULT_TOL) -> PropertyVerdict:
    for idx, v in np.ndenumerate(model.response):
        if not _is_bit(v, model.exact, tol):
            lam, a, b, A, B = (int(i) for i in idx)
            witness = {"lam": lam, "a": a, "b": b, "A": A, "B": B, "value": _value(v)}
            return PropertyVerdict(Property.PREDETERMINATION, False, witness)
    return PropertyVerdict(Property.PREDETERMINATION, True)


def is_predictable(phenomenon: Phenomenon, tol: float = DEFAULT_TOL) -> PropertyVerdict:
    for idx, v in np.ndenumerate(phenomenon.table):
        if not _is_bit(v, phenomenon.exact, tol):
            a, b, A, B = (int(i) for i in idx)
            witness = {"a": a, "b": b, "A": A, "B": B, "value": _value(v)}
            return PropertyVerdict(Property.PREDICTABILITY, False, witness)
    return PropertyVerdict(Property.PREDICTABILITY, True)


# -- remote-setting independence of marginals ---------------------------------


def _alice_marginal(joint: np.ndarray) -> np.ndarray:
    # [..., a, b, A, B] -> [..., a, b, A]
    return joint.sum(axis=-1)


def _bob_marginal(joint: np.ndarray) -> np.ndarray:
    return joint.sum(axis=-2)


def _remote_independence_witness(joint: np.ndarray, exact: bool, tol: float, lead: tuple):
    """First cell where a party's marginal depends on the remote setting.

    ``joint`` has shape ``lead + (Na, Nb, oA, oB)``.  Returns a witness dict or None.
    """
    ma = _alice_marginal(joint)
    mb = _bob_marginal(joint)
    na, nb = joint.shape[-4], joint.shape[-3]
    for lidx in itertools.product(*(range(n) for n in lead)):
        prefix = {"lam": int(lidx[0])} if lidx else {}
        # Bob's outcome must not depend on Alice's setting.
        for b in range(nb):
            for B in range(joint.shape[-1]):
                ref = mb[lidx + (0, b, B)]
                for a in range(1, na):
                    v = mb[lidx + (a, b, B)]
                    if not _close(v, ref, exact, tol):
                        return {**prefix, "party": "bob", "b": b, "B": B,
                                "remote_settings": [0, a], "values": [_value(ref), _value(v)]}
        for a in range(na):
            for A in range(joint.shape[-2]):
                ref = ma[lidx + (a, 0, A)]
                for b in range(1, nb):
                    v = ma[lidx + (a, b, A)]
                    if not _close(v, ref, exact, tol):
                        return {**prefix, "party": "alice", "a": a, "A": A,
                                "remote_settings": [0, b], "values": [_value(ref), _value(v)]}
    return None


def is_local(model: HVModel, tol: float = DEFAULT_TOL) -> PropertyVerdict:
    """Per-lambda marginals of both parties are independent of the remote setting."""
    w = _remote_independence_witness(model.response, model.exact, tol, (len(model.labels),))
    return PropertyVerdict(Property.LOCALITY, w is None, w)


def is_signal_local(phenomenon: Phenomenon, tol: float = DEFAULT_TOL) -> PropertyVerdict:
    w = _remote_independence_witness(phenomenon.table, phenomenon.exact, tol, ())
    return PropertyVerdict(Property.SIGNAL_LOCALITY, w is None, w)


# -- Definition 5 ---------------------------------------------------------------


def _factorization_witness(model: HVModel, tol: float):
    """Locality plus ``P(A,B|a,b,lam) == P(A|a,lam) P(B|b,lam)`` at every cell."""
    w = _remote_independence_witness(model.response, model.exact, tol, (len(model.labels),))
    if w is not None:
        return w
    ma = _alice_marginal(model.response)
    mb = _bob_marginal(model.response)
    for idx, v in np.ndenumerate(model.response):
        lam, a, b, A, B = idx
        product = ma[lam, a, 0, A] * mb[lam, 0, b, B]
        if not _close(v, product, model.exact, tol):
            return {"lam": int(lam), "a": int(a), "b": int(b), "A": int(A), "B": int(B),
                    "joint": _value(v), "product": _value(product)}
    return None


def is_locally_causal(model: HVModel, tol: float = DEFAULT_TOL) -> PropertyVerdict:
    """Per-lambda factorization of the joint response into local marginals."""
    w = _factorization_witness(model, tol)
    return PropertyVerdict(Property.LOCAL_CAUSALITY, w is None, w)


def is_factorizable(model: HVModel, tol: float = DEFAULT_TOL) -> PropertyVerdict:
    w = _factorization_witness(model, tol)
    return PropertyVerdict(Property.FACTORIZABILITY, w is None, w)


def is_locally_causal_conditional(model: HVModel, tol: float = DEFAULT_TOL) -> bool:
    """Literal conditional form: ``P(B|A,a,b,lam)`` equals a function of ``(B,b,lam)``,
    and symmetrically for Alice.  Conditioning events of probability zero are skipped.

    Kept separate from the factorization route so the two can be compared.
    """
    exact = model.exact
    resp = model.response
    ma = _alice_marginal(resp)
    mb = _bob_marginal(resp)
    L, na, nb, oa, ob = resp.shape

    def positive(x):
        return x > 0 if exact else x > tol

    for lam in range(L):
        # Bob: every defined P(B|A,a,b) must agree across (a, A) for fixed b.
        for b in range(nb):
            ref = None
            for a in range(na):
                for A in range(oa):
                    pa = ma[lam, a, b, A]
                    if not positive(pa):
                        continue
                    cond = [resp[lam, a, b, A, B] / pa for B in range(ob)]
                    if ref is None:
                        ref = cond
                    elif not all(_close(x, y, exact, tol) for x, y in zip(cond, ref)):
                        return False
        for a in range(na):
            ref = None
            for b in range(nb):
                for B in range(ob):
                    pb = mb[lam, a, b, B]
                    if not positive(pb):
                        continue
                    cond = [resp[lam, a, b, A, B] / pb for A in range(oa)]
                    if ref is None:
                        ref = cond
                    elif not all(_close(x, y, exact, tol) for x, y in zip(cond, ref)):
                        return False
    return True


CHECKERS = {
    Property.PREDETERMINATION: is_predetermined,
    Property.LOCALITY: is_local,
    Property.LOCAL_CAUSALITY: is_locally_causal,
    Property.FACTORIZABILITY: is_factorizable,
}


def model_verdicts(model: HVModel, tol: float = DEFAULT_TOL) -> list[PropertyVerdict]:
    f = predicted_phenomenon(model)
    return [
        is_predetermined(model, tol),
        is_local(model, tol),
        is_locally_causal(model, tol),
        is_predictable(f, tol),
        is_signal_local(f, tol),
    ]


def phenomenon_verdicts(phenomenon: Phenomenon, tol: float = DEFAULT_TOL) -> list[PropertyVerdict]:
    return [is_predictable(phenomenon, tol), is_signal_local(phenomenon, tol)]


def recheck_witness(obj, verdict: PropertyVerdict, tol: float = DEFAULT_TOL) -> bool:
    """Re-evaluate a failure witness directly from the table; True if it still falsifies."""
    w = verdict.witness
    if w is None:
        return False
    exact = obj.exact
    table = obj.response if isinstance(obj, HVModel) else obj.table
    name = verdict.property_name
    if name in (Property.PREDETERMINATION, Property.PREDICTABILITY):
        key = tuple(w[k] for k in (("lam",) if "lam" in w else ()) + ("a", "b", "A", "B"))
        return not _is_bit(table[key], exact, tol)
    lead = (w["lam"],) if "lam" in w else ()
    if "party" in w:
        r0, r1 = w["remote_settings"]
        if w["party"] == "bob":
            m = _bob_marginal(table)
            x, y = m[lead + (r0, w["b"], w["B"])], m[lead + (r1, w["b"], w["B"])]
        else:
            m = _alice_marginal(table)
            x, y = m[lead + (w["a"], r0, w["A"])], m[lead + (w["a"], r1, w["A"])]
        return not _close(x, y, exact, tol)
    lam, a, b, A, B = w["lam"], w["a"], w["b"], w["A"], w["B"]
    product = _alice_marginal(table)[lam, a, 0, A] * _bob_marginal(table)[lam, 0, b, B]
    return not _close(table[lam, a, b, A, B], product, exact, tol)
