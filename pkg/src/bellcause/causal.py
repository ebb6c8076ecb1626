"""Finite causal models embedded in 1+1 Minkowski space, and checks of the
causal postulates and principles on them.

A model is a DAG over labelled events with coordinates ``(t, x)`` (light
speed 1) plus conditional probability tables.  A node's table has shape
``parent arities + (own arity,)`` with parents in event order.  Optional
*joint factors* give a single table for a group of mutually unlinked nodes
conditioned on the union of their parents; such models are not Markov with
respect to their DAG and are used to represent purely operational accounts
(correlations with no causal explanation).

Correlation and conditional independence are judged numerically: two sets
are correlated when some cell of ``P(x,y|z) - P(x|z)P(y|z)`` exceeds ``tol``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .errors import CapExceeded, CyclicGraph, MissingCpt, NonNormalized

DEFAULT_TOL = 1e-9
JOINT_CAP = 10**7
MAX_SCREEN_SIZE = 4
FINE_TUNING_NODE_CAP = 8


class EventKind(str, enum.Enum):
    FREE_CHOICE = "free_choice"
    OUTCOME = "outcome"
    LATENT = "latent"
    PREPARATION = "preparation"


@dataclass(frozen=True)
class SpacetimeEvent:
    label: str
    t: float
    x: float
    kind: EventKind = EventKind.LATENT

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))


def in_past_lightcone(e1: SpacetimeEvent, e2: SpacetimeEvent) -> bool:
    """Whether ``e1`` lies in the past light cone of ``e2`` (boundary included)."""
    return e1.t < e2.t and abs(e2.x - e1.x) <= e2.t - e1.t


def spacelike(e1: SpacetimeEvent, e2: SpacetimeEvent) -> bool:
    return e1.label != e2.label and not in_past_lightcone(e1, e2) and not in_past_lightcone(e2, e1)


# -- the model ------------------------------------------------------------------------


class CausalModel:
    """DAG over spacetime events with (possibly unset) probability tables."""

    def __init__(self, events: Sequence[SpacetimeEvent], edges: Iterable[tuple[str, str]],
                 arity: Optional[dict] = None, cpt: Optional[dict] = None,
                 joint: Optional[dict] = None, tol: float = DEFAULT_TOL):
        events = tuple(events)
        labels = [e.label for e in events]
        if len(set(labels)) != len(labels):
            raise ValueError("event labels must be unique")
        index = {lab: i for i, lab in enumerate(labels)}
        edges = frozenset((str(u), str(v)) for u, v in edges)
        for u, v in edges:
            if u not in index or v not in index:
                raise KeyError(f"edge {u}->{v} references an unknown event")
            if u == v:
                raise CyclicGraph(f"self-loop on {u}")
        self.events = events
        self.edges = edges
        self._index = index
        self._parents = {lab: tuple(sorted((u for u, v in edges if v == lab), key=index.get))
                         for lab in labels}
        self._children = {lab: tuple(sorted((v for u, v in edges if u == lab), key=index.get))
                          for lab in labels}
        self.order = self._topological_order()

        arity = dict(arity or {})
        for lab in labels:
            arity.setdefault(lab, 2)
            if arity[lab] < 1:
                raise ValueError(f"arity of {lab} must be positive")
        self.arity = MappingProxyType(arity)

        self.cpt = MappingProxyType({k: self._check_cpt(k, v, tol) for k, v in (cpt or {}).items()})
        joint_tables = {}
        for nodes, table in (joint or {}).items():
            nodes = tuple(nodes)
            joint_tables[nodes] = self._check_joint(nodes, table, tol)
        self.joint = MappingProxyType(joint_tables)
        covered = list(self.cpt) + [n for nodes in self.joint for n in nodes]
        if len(covered) != len(set(covered)):
            raise ValueError("a node has more than one probability table")

    # structure

    def _topological_order(self) -> tuple[str, ...]:
        indeg = {lab: len(p) for lab, p in self._parents.items()}
        ready = [e.label for e in self.events if indeg[e.label] == 0]
        order = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.events):
            raise CyclicGraph("edge set contains a directed cycle")
        return tuple(order)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.events)

    def event(self, label: str) -> SpacetimeEvent:
        return self.events[self._index[label]]

    def sort(self, labels: Iterable[str]) -> list[str]:
        return sorted(set(labels), key=self._index.get)

    def parents(self, label: str) -> tuple[str, ...]:
        return self._parents[label]

    def children(self, label: str) -> tuple[str, ...]:
        return self._children[label]

    def ancestors(self, label: str) -> set[str]:
        seen, stack = set(), list(self._parents[label])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self._parents[n])
        return seen

    def descendants(self, label: str) -> set[str]:
        seen, stack = set(), list(self._children[label])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self._children[n])
        return seen

    def is_cause(self, u: str, v: str) -> bool:
        return v in self.descendants(u)

    def of_kind(self, kind: EventKind) -> list[str]:
        return [e.label for e in self.events if e.kind == EventKind(kind)]

    @property
    def superdeterministic_candidate(self) -> bool:
        return any(self._parents[c] for c in self.of_kind(EventKind.FREE_CHOICE))

    @property
    def markovian(self) -> bool:
        return not self.joint

    def joint_parents(self, nodes: Sequence[str]) -> tuple[str, ...]:
        ps = {p for n in nodes for p in self._parents[n]} - set(nodes)
        return tuple(self.sort(ps))

    # tables

    def _check_cpt(self, label, table, tol):
        if label not in self._index:
            raise KeyError(f"table for unknown event {label}")
        table = np.asarray(table, dtype=float)
        shape = tuple(self.arity[p] for p in self._parents[label]) + (self.arity[label],)
        if table.shape != shape:
            raise ValueError(f"table for {label} has shape {table.shape}, expected {shape}")
        _check_rows(table, 1, tol, label)
        return _readonly(table)

    def _check_joint(self, nodes, table, tol):
        for n in nodes:
            if n not in self._index:
                raise KeyError(f"joint table for unknown event {n}")
        if any((u, v) in self.edges for u in nodes for v in nodes):
            raise ValueError("nodes sharing a joint table must not be linked by edges")
        parents = self.joint_parents(nodes)
        table = np.asarray(table, dtype=float)
        shape = tuple(self.arity[p] for p in parents) + tuple(self.arity[n] for n in nodes)
        if table.shape != shape:
            raise ValueError(f"joint table for {nodes} has shape {table.shape}, expected {shape}")
        _check_rows(table, len(nodes), tol, nodes)
        return _readonly(table)

    def with_tables(self, cpt=None, arity=None, joint=None) -> "CausalModel":
        new_arity = {**self.arity, **(arity or {})}
        return CausalModel(self.events, self.edges, new_arity,
                           {**self.cpt, **(cpt or {})}, {**self.joint, **(joint or {})})

    def missing_tables(self) -> list[str]:
        covered = set(self.cpt) | {n for nodes in self.joint for n in nodes}
        return [lab for lab in self.labels if lab not in covered]

    def with_edges(self, add=(), remove=()) -> "CausalModel":
        edges = (set(self.edges) | set(add)) - set(remove)
        return CausalModel(self.events, edges, dict(self.arity))


def _readonly(arr):
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _check_rows(table, n_trailing, tol, what):
    if np.any(table < -tol):
        raise NonNormalized(f"negative probability in table for {what}")
    sums = table.sum(axis=tuple(range(table.ndim - n_trailing, table.ndim)))
    if np.any(np.abs(sums - 1) > tol):
        raise NonNormalized(f"rows of the table for {what} do not sum to 1")


# -- joint distribution -----------------------------------------------------------------


class JointDistribution:
    """Full joint table over a model's events, axes in event order."""

    def __init__(self, labels: Sequence[str], array: np.ndarray):
        self.labels = tuple(labels)
        self.array = _readonly(np.asarray(array, dtype=float))
        self._axis = {lab: i for i, lab in enumerate(self.labels)}
        self._cache: dict = {}

    def arity(self, label: str) -> int:
        return self.array.shape[self._axis[label]]

    def marginal(self, labels: Sequence[str]) -> np.ndarray:
        key = tuple(labels)
        if key not in self._cache:
            axes = [self._axis[lab] for lab in key]
            drop = tuple(i for i in range(self.array.ndim) if i not in axes)
            m = self.array.sum(axis=drop)
            kept = sorted(axes)
            self._cache[key] = np.transpose(m, [kept.index(a) for a in axes]) if key else m
        return self._cache[key]

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {idx: float(p) for idx, p in np.ndenumerate(self.array)}


def joint_distribution(model: CausalModel, cap: int = JOINT_CAP) -> JointDistribution:
    """Product of all tables over every assignment."""
    missing = model.missing_tables()
    if missing:
        raise MissingCpt(f"no probability table for {missing}")
    shape = tuple(model.arity[lab] for lab in model.labels)
    if int(np.prod(shape, dtype=object)) > cap:
        raise CapExceeded(f"state space {shape} exceeds {cap} assignments")
    pos = {lab: i for i, lab in enumerate(model.labels)}
    joint = np.ones(shape)
    factors = [((*model.parents(lab), lab), t) for lab, t in model.cpt.items()]
    factors += [((*model.joint_parents(nodes), *nodes), t) for nodes, t in model.joint.items()]
    for scope, table in factors:
        axes = [pos[lab] for lab in scope]
        perm = np.argsort(axes)
        t = np.transpose(table, perm)
        bshape = [1] * len(shape)
        for a in axes:
            bshape[a] = shape[a]
        joint = joint * t.reshape(bshape)
    return JointDistribution(model.labels, joint)


def _as_joint(obj) -> JointDistribution:
    return obj if isinstance(obj, JointDistribution) else joint_distribution(obj)


def ci_gap(joint: JointDistribution, X: Sequence[str], Y: Sequence[str], Z: Sequence[str] = ()):
    """Largest ``|P(x,y|z) - P(x|z) P(y|z)|`` over assignments with ``P(z) > 0``.

    Returns ``(gap, (x_index, y_index, z_index))`` with flat indices into the
    product state spaces of ``X``, ``Y`` and ``Z``.
    """
    X, Y, Z = list(X), list(Y), list(Z)
    m = joint.marginal(X + Y + Z)
    nx_ = int(np.prod([joint.arity(v) for v in X]))
    ny_ = int(np.prod([joint.arity(v) for v in Y]))
    nz_ = int(np.prod([joint.arity(v) for v in Z])) if Z else 1
    m = m.reshape(nx_, ny_, nz_)
    pz = m.sum(axis=(0, 1))
    keep = np.nonzero(pz > 0)[0]
    if keep.size == 0:
        return 0.0, None
    pz = pz[keep]
    pxy = m[:, :, keep] / pz
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    diff = np.abs(pxy - px[:, None, :] * py[None, :, :])
    flat = int(np.argmax(diff))
    i, j, k = np.unravel_index(flat, diff.shape)
    return float(diff[i, j, k]), (int(i), int(j), int(keep[k]))


def conditionally_independent(model, X, Y, Z=(), tol: float = DEFAULT_TOL) -> bool:
    X, Y, Z = list(X), list(Y), list(Z)
    if set(X) & set(Y) or set(X) & set(Z) or set(Y) & set(Z):
        raise ValueError("X, Y and Z must be disjoint")
    return ci_gap(_as_joint(model), X, Y, Z)[0] <= tol


def d_separated(model: CausalModel, X: Iterable[str], Y: Iterable[str], Z: Iterable[str] = ()) -> bool:
    """Path-blocking criterion via reachability along active trails."""
    X, Y, Z = set(X), set(Y), set(Z)
    if X & Y or X & Z or Y & Z:
        raise ValueError("X, Y and Z must be disjoint")
    z_anc = set(Z)
    for z in Z:
        z_anc |= model.ancestors(z)
    # (node, True) means the trail arrived from a child, i.e. travelling upward.
    stack = [(x, True) for x in X]
    visited = set()
    while stack:
        node, up = stack.pop()
        if (node, up) in visited:
            continue
        visited.add((node, up))
        if node not in Z and node in Y:
            return False
        if up and node not in Z:
            stack.extend((p, True) for p in model.parents(node))
            stack.extend((c, False) for c in model.children(node))
        elif not up:
            if node not in Z:
                stack.extend((c, False) for c in model.children(node))
            if node in z_anc:
                stack.extend((p, True) for p in model.parents(node))
    return True


# -- verdicts ----------------------------------------------------------------------------


class Principle(str, enum.Enum):
    CAUSAL_ARROW = "causal_arrow"
    RELATIVISTIC_CAUSALITY = "relativistic_causality"
    FREE_CHOICE = "free_choice"
    COMMON_CAUSES = "common_causes"
    DECORRELATING_EXPLANATION = "decorrelating_explanation"
    REICHENBACH = "reichenbach"
    LOCAL_CAUSALITY = "local_causality"
    LOCAL_AGENCY = "local_agency"
    AGENT_CAUSATION = "agent_causation"
    NO_SUPERDETERMINISM = "no_superdeterminism"
    LOCALITY_PRINCIPLE = "locality_principle"
    PREDETERMINATION_PRINCIPLE = "predetermination_principle"
    NO_FINE_TUNING = "no_fine_tuning"


@dataclass(frozen=True)
class PrincipleVerdict:
    principle: Principle
    holds: bool
    witness: Optional[dict[str, Any]] = field(default=None)

    def __post_init__(self):
        if self.holds == (self.witness is not None):
            raise ValueError("a verdict carries a witness exactly when it fails")

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {"principle": self.principle.value, "holds": self.holds, "witness": self.witness}


def _ok(p: Principle) -> PrincipleVerdict:
    return PrincipleVerdict(p, True)


def _fail(p: Principle, **witness) -> PrincipleVerdict:
    return PrincipleVerdict(p, False, witness)


def _ci_witness(kind, x, y, z, gap):
    return {"type": kind, "x": list(x), "y": list(y), "z": list(z), "gap": gap}


def _variables(model: CausalModel) -> list[str]:
    """Nodes that can carry correlations (constant nodes cannot)."""
    return [lab for lab in model.labels if model.arity[lab] > 1]


def _correlated(joint, x, y, tol):
    gap = ci_gap(joint, [x], [y])[0]
    return gap > tol, gap


def _screening_search(joint, x, y, candidates, tol):
    """Smallest candidate subset (size <= MAX_SCREEN_SIZE) that screens x off from y.

    Returns ``(C, None)`` on success or ``(None, (best_C, best_gap))``.
    """
    best = None
    for size in range(0, min(MAX_SCREEN_SIZE, len(candidates)) + 1):
        for C in itertools.combinations(candidates, size):
            gap = ci_gap(joint, [x], [y], list(C))[0]
            if gap <= tol:
                return list(C), None
            if best is None or gap < best[1]:
                best = (list(C), gap)
    return None, best


# structural checks


def check_causal_arrow(model: CausalModel) -> PrincipleVerdict:
    """Every cause precedes its effect in the frame's time coordinate."""
    for u, v in sorted(model.edges, key=lambda e: (model.sort(e), e)):
        eu, ev = model.event(u), model.event(v)
        if not eu.t < ev.t:
            return _fail(Principle.CAUSAL_ARROW, type="edge", x=[u], y=[v], z=[], gap=eu.t - ev.t)
    return _ok(Principle.CAUSAL_ARROW)


def _edge_order(model):
    return sorted(model.edges, key=lambda e: (model._index[e[0]], model._index[e[1]]))


def check_relativistic_embedding(model: CausalModel) -> PrincipleVerdict:
    """Every edge runs from an event into its effect's past light cone."""
    for u, v in _edge_order(model):
        eu, ev = model.event(u), model.event(v)
        if not in_past_lightcone(eu, ev):
            gap = abs(ev.x - eu.x) - (ev.t - eu.t)
            return _fail(Principle.RELATIVISTIC_CAUSALITY, type="edge", x=[u], y=[v], z=[], gap=gap)
    return _ok(Principle.RELATIVISTIC_CAUSALITY)


def check_free_choice(model: CausalModel) -> PrincipleVerdict:
    for c in model.of_kind(EventKind.FREE_CHOICE):
        ps = model.parents(c)
        if ps:
            return _fail(Principle.FREE_CHOICE, type="parent", x=[ps[0]], y=[c], z=[], gap=len(ps))
    return _ok(Principle.FREE_CHOICE)


# statistical checks


def _unlinked_correlated_pairs(model, joint, tol):
    vs = _variables(model)
    for x, y in itertools.combinations(vs, 2):
        if model.is_cause(x, y) or model.is_cause(y, x):
            continue
        corr, gap = _correlated(joint, x, y, tol)
        if corr:
            yield x, y, gap


def _common_causes(model, x, y):
    return [n for n in model.sort(model.ancestors(x) & model.ancestors(y)) if model.arity[n] > 1]


def check_common_causes(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Correlated pairs with no causal link between them share at least one cause."""
    joint = joint_distribution(model)
    for x, y, gap in _unlinked_correlated_pairs(model, joint, tol):
        if not _common_causes(model, x, y):
            return _fail(Principle.COMMON_CAUSES, **_ci_witness("correlation", [x], [y], [], gap))
    return _ok(Principle.COMMON_CAUSES)


def check_decorrelating_explanation(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Where common causes exist, some set of them removes the correlation."""
    joint = joint_distribution(model)
    for x, y, _ in _unlinked_correlated_pairs(model, joint, tol):
        cc = _common_causes(model, x, y)
        if not cc:
            continue
        C, best = _screening_search(joint, x, y, cc, tol)
        if C is None:
            return _fail(Principle.DECORRELATING_EXPLANATION,
                         **_ci_witness("correlation", [x], [y], best[0], best[1]))
    return _ok(Principle.DECORRELATING_EXPLANATION)


def check_reichenbach(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Correlated, causally unlinked pairs are screened off by some set of common causes."""
    joint = joint_distribution(model)
    for x, y, _ in _unlinked_correlated_pairs(model, joint, tol):
        C, best = _screening_search(joint, x, y, _common_causes(model, x, y), tol)
        if C is None:
            return _fail(Principle.REICHENBACH, **_ci_witness("correlation", [x], [y], best[0], best[1]))
    return _ok(Principle.REICHENBACH)


def common_past(model: CausalModel, x: str, y: str) -> list[str]:
    ex, ey = model.event(x), model.event(y)
    return [e.label for e in model.events
            if model.arity[e.label] > 1 and in_past_lightcone(e, ex) and in_past_lightcone(e, ey)]


def check_local_causality(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Correlated space-like pairs are screened off by events in their common past."""
    joint = joint_distribution(model)
    for x, y in itertools.combinations(_variables(model), 2):
        if not spacelike(model.event(x), model.event(y)):
            continue
        corr, _ = _correlated(joint, x, y, tol)
        if not corr:
            continue
        C, best = _screening_search(joint, x, y, common_past(model, x, y), tol)
        if C is None:
            return _fail(Principle.LOCAL_CAUSALITY, **_ci_witness("correlation", [x], [y], best[0], best[1]))
    return _ok(Principle.LOCAL_CAUSALITY)


def _independent_of_set(joint, choice, others, tol):
    """Pairwise then joint independence; returns a failing witness tuple or None."""
    for o in others:
        gap = ci_gap(joint, [choice], [o])[0]
        if gap > tol:
            return [o], gap
    if len(others) > 1:
        gap = ci_gap(joint, [choice], list(others))[0]
        if gap > tol:
            return list(others), gap
    return None


def check_local_agency(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Free choices are uncorrelated with everything outside their future light cone."""
    joint = joint_distribution(model)
    for c in model.of_kind(EventKind.FREE_CHOICE):
        if model.arity[c] < 2:
            continue
        ec = model.event(c)
        outside = [v for v in _variables(model) if v != c and not in_past_lightcone(ec, model.event(v))]
        bad = _independent_of_set(joint, c, outside, tol)
        if bad:
            return _fail(Principle.LOCAL_AGENCY, **_ci_witness("correlation", [c], bad[0], [], bad[1]))
    return _ok(Principle.LOCAL_AGENCY)


def check_agent_causation(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Anything correlated with a free choice has that choice among its causes."""
    joint = joint_distribution(model)
    for c in model.of_kind(EventKind.FREE_CHOICE):
        if model.arity[c] < 2:
            continue
        desc = model.descendants(c)
        others = [v for v in _variables(model) if v != c and v not in desc]
        bad = _independent_of_set(joint, c, others, tol)
        if bad:
            return _fail(Principle.AGENT_CAUSATION, **_ci_witness("correlation", [c], bad[0], [], bad[1]))
    return _ok(Principle.AGENT_CAUSATION)


def check_no_superdeterminism(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Everything before the earliest choice is jointly independent of all choices."""
    choices = [c for c in model.of_kind(EventKind.FREE_CHOICE) if model.arity[c] > 1]
    if not choices:
        return _ok(Principle.NO_SUPERDETERMINISM)
    t0 = min(model.event(c).t for c in choices)
    prior = [v for v in _variables(model) if model.event(v).t < t0]
    if not prior:
        return _ok(Principle.NO_SUPERDETERMINISM)
    joint = joint_distribution(model)
    gap = ci_gap(joint, prior, choices)[0]
    if gap > tol:
        return _fail(Principle.NO_SUPERDETERMINISM, **_ci_witness("correlation", prior, choices, [], gap))
    return _ok(Principle.NO_SUPERDETERMINISM)


def check_locality_principle(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Outcomes ignore space-like choices, even given other events outside the choice's future cone."""
    joint = joint_distribution(model)
    outcomes = [o for o in model.of_kind(EventKind.OUTCOME) if model.arity[o] > 1]
    for b in model.of_kind(EventKind.FREE_CHOICE):
        if model.arity[b] < 2:
            continue
        eb = model.event(b)
        for A in outcomes:
            if not spacelike(eb, model.event(A)):
                continue
            pool = [v for v in _variables(model)
                    if v not in (A, b) and not in_past_lightcone(eb, model.event(v))]
            for size in range(0, min(MAX_SCREEN_SIZE, len(pool)) + 1):
                for Z in itertools.combinations(pool, size):
                    gap = ci_gap(joint, [A], [b], list(Z))[0]
                    if gap > tol:
                        return _fail(Principle.LOCALITY_PRINCIPLE,
                                     **_ci_witness("correlation", [A], [b], list(Z), gap))
    return _ok(Principle.LOCALITY_PRINCIPLE)


def _outcome_table(model: CausalModel, label: str) -> np.ndarray:
    if label in model.cpt:
        return model.cpt[label]
    block = next((nodes for nodes in model.joint if label in nodes), None)
    if block is None:
        raise MissingCpt(f"no probability table for {label}")
    return model.joint[block]


def _distance_from_bits(table: np.ndarray) -> np.ndarray:
    return np.minimum(np.abs(table), np.abs(table - 1))


def check_predetermination_principle(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    """Every outcome is a deterministic function of its causes (0/1 table rows)."""
    for o in model.of_kind(EventKind.OUTCOME):
        table = _outcome_table(model, o)
        off = _distance_from_bits(table)
        if np.any(off > tol):
            idx = tuple(int(i) for i in np.unravel_index(int(np.argmax(off)), off.shape))
            return _fail(Principle.PREDETERMINATION_PRINCIPLE, type="determinism", x=[o], y=[], z=[],
                         gap=float(off[idx]), cell=list(idx))
    return _ok(Principle.PREDETERMINATION_PRINCIPLE)


def fine_tuned_independences(model: CausalModel, tol: float = DEFAULT_TOL) -> list[tuple[str, str, tuple]]:
    """Every numeric ``x _||_ y | Z`` (singletons x, y) not implied by d-separation."""
    vs = _variables(model)
    if len(vs) > FINE_TUNING_NODE_CAP:
        raise CapExceeded(f"{len(vs)} variables exceed the fine-tuning cap of {FINE_TUNING_NODE_CAP}")
    joint = joint_distribution(model)
    found = []
    for size in range(len(vs) - 1):
        for x, y in itertools.combinations(vs, 2):
            rest = [v for v in vs if v not in (x, y)]
            for Z in itertools.combinations(rest, size):
                if ci_gap(joint, [x], [y], list(Z))[0] <= tol and not d_separated(model, [x], [y], Z):
                    found.append((x, y, Z))
    return found


def check_no_fine_tuning(model: CausalModel, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    found = fine_tuned_independences(model, tol)
    if not found:
        return _ok(Principle.NO_FINE_TUNING)
    x, y, Z = found[0]
    gap = ci_gap(joint_distribution(model), [x], [y], list(Z))[0]
    return _fail(Principle.NO_FINE_TUNING, type="fine_tuning", x=[x], y=[y], z=list(Z), gap=gap,
                 violations=[[a, b, list(z)] for a, b, z in found])


STRUCTURAL_CHECKS = {
    Principle.CAUSAL_ARROW: check_causal_arrow,
    Principle.RELATIVISTIC_CAUSALITY: check_relativistic_embedding,
    Principle.FREE_CHOICE: check_free_choice,
}

STATISTICAL_CHECKS = {
    Principle.COMMON_CAUSES: check_common_causes,
    Principle.DECORRELATING_EXPLANATION: check_decorrelating_explanation,
    Principle.REICHENBACH: check_reichenbach,
    Principle.LOCAL_CAUSALITY: check_local_causality,
    Principle.LOCAL_AGENCY: check_local_agency,
    Principle.AGENT_CAUSATION: check_agent_causation,
    Principle.NO_SUPERDETERMINISM: check_no_superdeterminism,
    Principle.LOCALITY_PRINCIPLE: check_locality_principle,
    Principle.PREDETERMINATION_PRINCIPLE: check_predetermination_principle,
    Principle.NO_FINE_TUNING: check_no_fine_tuning,
}


def check(model: CausalModel, principle, tol: float = DEFAULT_TOL) -> PrincipleVerdict:
    principle = Principle(principle)
    if principle in STRUCTURAL_CHECKS:
        return STRUCTURAL_CHECKS[principle](model)
    return STATISTICAL_CHECKS[principle](model, tol)


def all_verdicts(model: CausalModel, tol: float = DEFAULT_TOL) -> list[PrincipleVerdict]:
    out = [fn(model) for fn in STRUCTURAL_CHECKS.values()]
    for p, fn in STATISTICAL_CHECKS.items():
        if p is Principle.NO_FINE_TUNING and len(_variables(model)) > FINE_TUNING_NODE_CAP:
            continue
        out.append(fn(model, tol))
    return out


def recheck_witness(model: CausalModel, verdict: PrincipleVerdict, tol: float = DEFAULT_TOL) -> bool:
    """Re-derive a failure witness from coordinates, parents or the joint distribution alone."""
    w = verdict.witness
    if w is None:
        return False
    kind = w["type"]
    if kind == "edge":
        u, v = model.event(w["x"][0]), model.event(w["y"][0])
        if verdict.principle is Principle.CAUSAL_ARROW:
            return (u.label, v.label) in model.edges and u.t - v.t == w["gap"] and u.t >= v.t
        gap = abs(v.x - u.x) - (v.t - u.t)
        return (u.label, v.label) in model.edges and not in_past_lightcone(u, v) and gap == w["gap"]
    if kind == "parent":
        return w["x"][0] in model.parents(w["y"][0])
    if kind == "determinism":
        off = float(_distance_from_bits(_outcome_table(model, w["x"][0]))[tuple(w["cell"])])
        return off == w["gap"] and off > tol
    gap = ci_gap(joint_distribution(model), w["x"], w["y"], w["z"])[0]
    if abs(gap - w["gap"]) > 1e-12:
        return False
    if kind == "fine_tuning":
        return gap <= tol and not d_separated(model, w["x"], w["y"], w["z"])
    return gap > tol


# -- canonical Bell scenario -----------------------------------------------------------

BELL_EVENTS = (
    SpacetimeEvent("c", 0, 0, EventKind.PREPARATION),
    SpacetimeEvent("lambda", 1, 0, EventKind.LATENT),
    SpacetimeEvent("a", 2, -2, EventKind.FREE_CHOICE),
    SpacetimeEvent("b", 2, 2, EventKind.FREE_CHOICE),
    SpacetimeEvent("A", 3, -2, EventKind.OUTCOME),
    SpacetimeEvent("B", 3, 2, EventKind.OUTCOME),
)
LOCAL_CAUSAL_EDGES = {("c", "lambda"), ("lambda", "A"), ("lambda", "B"), ("a", "A"), ("b", "B")}
VARIANTS = ("local_causal", "superluminal", "superdeterministic")


def bell_dag(variant: str = "local_causal", arity: Optional[dict] = None) -> CausalModel:
    """The two-wing Bell layout with tables unset; the preparation ``c`` is constant by default."""
    edges = set(LOCAL_CAUSAL_EDGES)
    if variant == "superluminal":
        edges.add(("a", "B"))
    elif variant == "superdeterministic":
        edges |= {("lambda", "a"), ("lambda", "b")}
    elif variant != "local_causal":
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return CausalModel(BELL_EVENTS, edges, {"c": 1, **(arity or {})})


def classical_bell_model(variant: str = "local_causal") -> CausalModel:
    """Bell layout with fixed, generic classical tables (biased shared coin lambda)."""
    model = bell_dag(variant)
    u = [0.5, 0.5]
    cpt = {
        "c": np.array([1.0]),
        "lambda": np.array([[0.6, 0.4]]),
        # A copies lambda with setting-dependent reliability
        "A": np.array([[[0.9, 0.1], [0.75, 0.25]], [[0.1, 0.9], [0.25, 0.75]]]),
    }
    B_table = np.array([[[0.85, 0.15], [0.7, 0.3]], [[0.15, 0.85], [0.3, 0.7]]])  # [lam, b, B]
    if variant == "superluminal":
        # [lam, a, b, B]: Alice's setting shifts Bob's reliability
        shifted = np.array([[[0.55, 0.45], [0.95, 0.05]], [[0.2, 0.8], [0.4, 0.6]]])
        cpt["B"] = np.stack([B_table, shifted], axis=1)
    else:
        cpt["B"] = B_table
    if variant == "superdeterministic":
        cpt["a"] = np.array([[0.8, 0.2], [0.3, 0.7]])
        cpt["b"] = np.array([[0.6, 0.4], [0.25, 0.75]])
    else:
        cpt["a"] = np.array(u)
        cpt["b"] = np.array(u)
    return model.with_tables(cpt)


def tuned_pr_box_model() -> CausalModel:
    """Superluminal layout reproducing a PR box; tables tuned so Bob's marginal ignores ``a``."""
    model = bell_dag("superluminal")
    A = np.zeros((2, 2, 2))  # [lam, a, A]: A = lam xor a
    B = np.zeros((2, 2, 2, 2))  # [lam, a, b, B]: B = lam xor a xor (a and b)
    for lam, a in itertools.product(range(2), repeat=2):
        A[lam, a, lam ^ a] = 1
        for b in range(2):
            B[lam, a, b, lam ^ a ^ (a & b)] = 1
    cpt = {"c": np.array([1.0]), "lambda": np.array([[0.5, 0.5]]), "a": np.array([0.5, 0.5]),
           "b": np.array([0.5, 0.5]), "A": A, "B": B}
    return model.with_tables(cpt)


def operational_model(phenomenon, choice_priors=None) -> CausalModel:
    """Settings and outcomes only: ``a -> A``, ``b -> B`` and one joint table for (A, B)."""
    sc = phenomenon.scenario
    events = [e for e in BELL_EVENTS if e.label in ("a", "b", "A", "B")]
    arity = {"a": sc.n_settings_alice, "b": sc.n_settings_bob,
             "A": sc.n_outcomes_alice, "B": sc.n_outcomes_bob}
    model = CausalModel(events, {("a", "A"), ("b", "B")}, arity)
    pa, pb = choice_priors or (np.full(arity["a"], 1 / arity["a"]), np.full(arity["b"], 1 / arity["b"]))
    table = np.asarray(phenomenon.to_float().table, dtype=float)
    return model.with_tables({"a": pa, "b": pb}, joint={("A", "B"): table})


def common_cause_model(phenomenon) -> CausalModel:
    """Bell layout where a binary lambda is a common cause of both outcomes but carries
    no information: (A, B) share one table given ``lambda, a, b`` that ignores lambda."""
    sc = phenomenon.scenario
    arity = {"a": sc.n_settings_alice, "b": sc.n_settings_bob, "A": sc.n_outcomes_alice, "B": sc.n_outcomes_bob}
    model = bell_dag("local_causal", arity)
    table = np.asarray(phenomenon.to_float().table, dtype=float)
    cpt = {"c": np.array([1.0]), "lambda": np.array([[0.5, 0.5]]),
           "a": np.full(arity["a"], 1 / arity["a"]), "b": np.full(arity["b"], 1 / arity["b"])}
    return model.with_tables(cpt, joint={("A", "B"): np.stack([table, table])})


def superluminal_model(phenomenon, tol: float = DEFAULT_TOL) -> CausalModel:
    """Bell layout plus ``a -> B`` reproducing any table whose Alice marginal ignores ``b``.

    lambda ranges over Alice's response functions with prior ``prod_a f(r(a)|a)``;
    Bob's outcome is drawn from ``f(B | A = r(a), a, b)``.
    """
    f = np.asarray(phenomenon.to_float().table, dtype=float)
    na, nb, oa, ob = f.shape
    pa = f.sum(axis=3)  # [a, b, A]
    if np.max(np.abs(pa - pa[:, :1, :])) > tol:
        raise ValueError("Alice's marginal depends on Bob's setting")
    pa = pa[:, 0, :]
    functions = list(itertools.product(range(oa), repeat=na))
    prior = np.array([np.prod([pa[a, r[a]] for a in range(na)]) for r in functions])
    A = np.zeros((len(functions), na, oa))
    B = np.zeros((len(functions), na, nb, ob))
    for k, r in enumerate(functions):
        for a in range(na):
            A[k, a, r[a]] = 1
            for b in range(nb):
                w = pa[a, r[a]]
                B[k, a, b] = f[a, b, r[a]] / w if w > 0 else np.full(ob, 1 / ob)
    B = B / B.sum(axis=-1, keepdims=True)
    arity = {"lambda": len(functions), "a": na, "b": nb, "A": oa, "B": ob}
    model = bell_dag("superluminal", arity)
    cpt = {"c": np.array([1.0]), "lambda": (prior / prior.sum())[None, :],
           "a": np.full(na, 1 / na), "b": np.full(nb, 1 / nb), "A": A, "B": B}
    return model.with_tables(cpt)


def hv_causal_model(hv_model, choice_priors=None) -> CausalModel:
    """Bell layout realizing a hidden-variable model; lambda ranges over its support.

    Locally causal models get per-wing tables; otherwise (A, B) share one
    joint table conditioned on ``lambda, a, b``.
    """
    from .properties import is_locally_causal

    sc = hv_model.scenario
    m = hv_model.to_float()
    arity = {"lambda": len(m.labels), "a": sc.n_settings_alice, "b": sc.n_settings_bob,
             "A": sc.n_outcomes_alice, "B": sc.n_outcomes_bob}
    pa, pb = choice_priors or (np.full(arity["a"], 1 / arity["a"]), np.full(arity["b"], 1 / arity["b"]))
    base = {"c": np.array([1.0]), "lambda": np.asarray(m.prior, dtype=float)[None, :], "a": pa, "b": pb}
    resp = np.asarray(m.response, dtype=float)
    if is_locally_causal(hv_model).holds:
        model = bell_dag("local_causal", arity)
        cpt = {**base, "A": resp.sum(axis=-1)[:, :, 0, :], "B": resp.sum(axis=-2)[:, 0, :, :]}
        return model.with_tables(cpt)
    model = CausalModel(BELL_EVENTS, LOCAL_CAUSAL_EDGES, {"c": 1, **arity})
    return model.with_tables(base, joint={("A", "B"): resp})


def bell_phenomenon_from_model(model: CausalModel, tol: float = DEFAULT_TOL):
    """``P(A,B|a,b)`` read off a model that has events a, b, A, B."""
    from .prob import Phenomenon, Scenario

    joint = joint_distribution(model)
    m = joint.marginal(["a", "b", "A", "B"])
    pab = m.sum(axis=(2, 3))
    if np.any(pab <= 0):
        raise ValueError("every setting pair needs positive probability")
    table = m / pab[:, :, None, None]
    return Phenomenon(Scenario.from_shape(table.shape), table, tol)
