"""Versioned YAML input format for phenomena, hidden-variable models, quantum
configurations and causal models.

Grammar (version 1)::

    file        := "version: 1" primary [analysis]
    primary     := exactly one of phenomenon | hv_model | quantum | causal
    phenomenon  := "phenomenon:" [scenario] "table:" T      T[a][b][A][B] = prob
    hv_model    := "hv_model:" [scenario] "prior:" [prob, ...] ["labels:" [name, ...]]
                   "response:" R                             R[lam][a][b][A][B] = prob
    quantum     := "quantum:" "state:" state "alice:" [angle, ...] "bob:" [angle, ...]
    state       := "singlet" | "maximally_mixed" | "werner:" v | 16 complex entries (row-major)
    causal      := "causal:" "events:" [{label, t, x, kind}, ...] "edges:" [[u, v], ...]
                   ["arity:" {label: n}] "cpt:" {label: cpt} ["joint:" [{nodes, rows}, ...]]
    cpt         := [prob, ...]                                 (node without parents)
                 | {"p=i,q=j": [prob, ...], ...}               (one row per parent assignment)
    analysis    := "analysis:" {tol, seed, max_denominator}
    prob        := "p/q" | integer | decimal

A table whose entries are all integers or ``"p/q"`` strings is exact; any
decimal literal makes the whole table floating.  Angles are radians.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Union

import numpy as np
import yaml

from .causal import CausalModel, EventKind, SpacetimeEvent
from .errors import BellCauseError, NonNormalized, ParseError, UnknownVersion
from .prob import DEFAULT_MAX_DENOMINATOR, DEFAULT_TOL, HVModel, Phenomenon, Scenario
from .quantum import TwoQubitState, born_phenomenon, maximally_mixed, singlet, werner

SUPPORTED_VERSIONS = (1,)
PRIMARY_BLOCKS = ("phenomenon", "hv_model", "quantum", "causal")
ANALYSIS_KEYS = ("tol", "seed", "max_denominator")


@dataclass(frozen=True)
class Analysis:
    tol: float = DEFAULT_TOL
    seed: Optional[int] = None
    max_denominator: int = DEFAULT_MAX_DENOMINATOR


@dataclass(frozen=True)
class QuantumConfig:
    state: TwoQubitState
    state_spec: Any  # "singlet", "werner:v" or a 4x4 list of complex numbers
    alice: tuple[float, ...]
    bob: tuple[float, ...]

    def phenomenon(self) -> Phenomenon:
        return born_phenomenon(self.state, self.alice, self.bob)


@dataclass(frozen=True)
class ScenarioFile:
    version: int
    kind: str
    payload: Union[Phenomenon, HVModel, QuantumConfig, CausalModel]
    analysis: Analysis = field(default_factory=Analysis)

    def phenomenon(self) -> Optional[Phenomenon]:
        if self.kind == "phenomenon":
            return self.payload
        if self.kind == "quantum":
            return self.payload.phenomenon()
        if self.kind == "hv_model":
            from .prob import predicted_phenomenon

            return predicted_phenomenon(self.payload)
        return None


# -- node helpers -----------------------------------------------------------------------


def _where(node):
    m = node.start_mark
    return m.line + 1, m.column + 1


def _fail(node, message, cls=ParseError):
    line, col = _where(node)
    if issubclass(cls, ParseError):
        return cls(message, line, col)
    return cls(f"line {line}, column {col}: {message}")


def _mapping(node, what) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise _fail(node, f"{what} must be a mapping")
    out = {}
    for k, v in node.value:
        if not isinstance(k, yaml.ScalarNode):
            raise _fail(k, f"keys of {what} must be plain names")
        if k.value in out:
            raise _fail(k, f"duplicate key {k.value!r} in {what}")
        out[k.value] = (k, v)
    return out


def _sequence(node, what) -> list:
    if not isinstance(node, yaml.SequenceNode):
        raise _fail(node, f"{what} must be a list")
    return node.value


def _scalar(node, what) -> str:
    if not isinstance(node, yaml.ScalarNode):
        raise _fail(node, f"{what} must be a scalar")
    return node.value


def _int(node, what) -> int:
    s = _scalar(node, what)
    try:
        return int(s)
    except ValueError:
        raise _fail(node, f"{what} must be an integer, got {s!r}") from None


def _real(node, what) -> float:
    s = _scalar(node, what)
    try:
        return float(s)
    except ValueError:
        raise _fail(node, f"{what} must be a number, got {s!r}") from None


def _prob(node):
    """Fraction for integers and "p/q", float for decimal literals."""
    s = _scalar(node, "probability").strip()
    try:
        if "/" in s or s.lstrip("+-").isdigit():
            return Fraction(s)
        return float(s)
    except (ValueError, ZeroDivisionError):
        raise _fail(node, f"cannot read probability {s!r}") from None


def _nested(node, depth, what):
    """Nested lists of probabilities with ``depth`` levels, plus the node grid."""
    if depth == 0:
        return _prob(node), node
    items = [_nested(child, depth - 1, what) for child in _sequence(node, what)]
    return [v for v, _ in items], [n for _, n in items]


def _array(values):
    flat = list(_flatten(values))
    if any(isinstance(v, float) for v in flat):
        return np.array(_map(values, float), dtype=np.float64)
    return np.array(values, dtype=object)


def _flatten(values):
    if isinstance(values, list):
        for v in values:
            yield from _flatten(v)
    else:
        yield values


def _map(values, fn):
    return [_map(v, fn) for v in values] if isinstance(values, list) else fn(values)


# -- blocks ------------------------------------------------------------------------------


def _scenario(node, shape) -> Scenario:
    if node is None:
        return Scenario.from_shape(shape)
    fields = _mapping(node, "scenario")
    unknown = set(fields) - {"settings", "outcomes", "preparation"}
    if unknown:
        k = fields[sorted(unknown)[0]][0]
        raise _fail(k, f"unknown scenario key {k.value!r}")
    settings = [_int(n, "settings") for n in _sequence(fields["settings"][1], "settings")] \
        if "settings" in fields else list(shape[:2])
    outcomes = [_int(n, "outcomes") for n in _sequence(fields["outcomes"][1], "outcomes")] \
        if "outcomes" in fields else list(shape[2:])
    prep = _scalar(fields["preparation"][1], "preparation") if "preparation" in fields else "c"
    sc = Scenario(settings[0], settings[1], outcomes[0], outcomes[1], prep)
    if sc.shape != tuple(shape):
        raise _fail(node, f"scenario {sc.shape} does not match table shape {tuple(shape)}")
    return sc


def _table(node, depth, what, tol, block_lead):
    values, grid = _nested(node, depth, what)
    try:
        arr = np.array(values, dtype=object)
    except ValueError:
        raise _fail(node, f"{what} is ragged") from None
    if arr.ndim != depth:
        raise _fail(node, f"{what} must be nested {depth} levels deep")
    arr = _array(values)
    # Locate the first block that is not a distribution, for a precise message.
    for idx in itertools.product(*(range(n) for n in arr.shape[:block_lead])):
        block = arr[idx]
        total = block.sum()
        bad = (total != 1 or any(v < 0 for v in block.flat)) if arr.dtype == object else (
            abs(total - 1) > tol or np.any(block < -tol))
        if bad:
            g = grid
            for i in idx:
                g = g[i]
            anchor = _first_node(g)
            names = ("a", "b") if block_lead == 2 else ("lam", "a", "b")
            label = ", ".join(f"{n}={i}" for n, i in zip(names, idx))
            raise _fail(anchor, f"{what} block ({label}) sums to {total}, not 1", NonNormalized)
    return arr


def _first_node(grid):
    while isinstance(grid, list):
        grid = grid[0]
    return grid


def _parse_phenomenon(node, tol):
    fields = _mapping(node, "phenomenon")
    _only(fields, {"scenario", "table"}, "phenomenon")
    table = _table(_need(fields, "table", node), 4, "phenomenon table", tol, 2)
    sc = _scenario(fields.get("scenario", (None, None))[1], table.shape)
    return Phenomenon(sc, table, tol)


def _parse_hv_model(node, tol):
    fields = _mapping(node, "hv_model")
    _only(fields, {"scenario", "prior", "response", "labels"}, "hv_model")
    prior_node = _need(fields, "prior", node)
    prior = _array([_prob(n) for n in _sequence(prior_node, "prior")])
    if prior.dtype == object and sum(prior) != 1 or prior.dtype != object and abs(prior.sum() - 1) > tol:
        raise _fail(prior_node, f"prior sums to {prior.sum()}, not 1", NonNormalized)
    response = _table(_need(fields, "response", node), 5, "response", tol, 3)
    if (prior.dtype == object) != (response.dtype == object):
        raise _fail(node, "prior and response must both be exact or both be decimal")
    sc = _scenario(fields.get("scenario", (None, None))[1], response.shape[1:])
    labels = None
    if "labels" in fields:
        labels = [_scalar(n, "label") for n in _sequence(fields["labels"][1], "labels")]
        if len(labels) != len(prior):
            raise _fail(fields["labels"][1], "need one label per prior entry")
    if len(prior) != response.shape[0]:
        raise _fail(node, f"prior has {len(prior)} entries but response has {response.shape[0]}")
    return HVModel(sc, list(prior) if prior.dtype == object else prior, response, labels, tol)


def _parse_state(node):
    if isinstance(node, yaml.ScalarNode):
        s = node.value.strip()
        if s == "singlet":
            return singlet(), "singlet"
        if s == "maximally_mixed":
            return maximally_mixed(), "maximally_mixed"
        if s.startswith("werner:"):
            try:
                v = float(s.split(":", 1)[1])
            except ValueError:
                raise _fail(node, f"bad visibility in {s!r}") from None
            return werner(v), f"werner:{v!r}"
        raise _fail(node, f"unknown state {s!r}")
    entries = []
    for child in _sequence(node, "state"):
        if isinstance(child, yaml.SequenceNode):
            entries.extend(child.value)
        else:
            entries.append(child)
    if len(entries) != 16:
        raise _fail(node, f"state needs 16 complex entries, got {len(entries)}")
    values = []
    for e in entries:
        try:
            values.append(complex(_scalar(e, "amplitude").replace(" ", "").replace("i", "j")))
        except ValueError:
            raise _fail(e, f"cannot read complex entry {e.value!r}") from None
    rho = np.array(values).reshape(4, 4)
    return TwoQubitState(rho), [[_complex_str(z) for z in row] for row in rho]


def _complex_str(z: complex) -> str:
    re, im = float(z.real), float(z.imag)
    return f"{re!r}{'+' if im >= 0 else '-'}{abs(im)!r}j"


def _parse_quantum(node):
    fields = _mapping(node, "quantum")
    _only(fields, {"state", "alice", "bob"}, "quantum")
    try:
        state, spec = _parse_state(_need(fields, "state", node))
    except BellCauseError as exc:
        if isinstance(exc, ParseError):
            raise
        raise _fail(fields["state"][1], str(exc), type(exc)) from None
    alice = tuple(_real(n, "angle") for n in _sequence(_need(fields, "alice", node), "alice"))
    bob = tuple(_real(n, "angle") for n in _sequence(_need(fields, "bob", node), "bob"))
    if not alice or not bob:
        raise _fail(node, "angle lists must be non-empty")
    return QuantumConfig(state, spec, alice, bob)


def _parse_assignment(key_node, parents, arity):
    text = _scalar(key_node, "parent assignment")
    values = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise _fail(key_node, f"parent assignment {text!r} must read 'name=value,...'")
        name, val = (s.strip() for s in part.split("=", 1))
        if name not in parents:
            raise _fail(key_node, f"{name!r} is not a parent here (parents: {list(parents)})")
        try:
            values[name] = int(val)
        except ValueError:
            raise _fail(key_node, f"value of {name!r} must be an integer") from None
        if not 0 <= values[name] < arity[name]:
            raise _fail(key_node, f"value {values[name]} out of range for {name!r}")
    if set(values) != set(parents):
        raise _fail(key_node, f"assignment {text!r} must set every parent of {list(parents)}")
    return tuple(values[p] for p in parents)


def _rows(node, parents, arity, depth, what):
    """Table keyed by parent assignments -> array of shape parent arities + trailing."""
    if not parents:
        values, _ = _nested(node, depth, what)
        return np.array(_map(values, float), dtype=float), node
    fields = _mapping(node, what)
    rows = {}
    for key, (k, v) in fields.items():
        idx = _parse_assignment(k, parents, arity)
        if idx in rows:
            raise _fail(k, f"duplicate parent assignment in {what}")
        values, _ = _nested(v, depth, what)
        rows[idx] = (np.array(_map(values, float), dtype=float), v)
    expected = set(itertools.product(*(range(arity[p]) for p in parents)))
    missing = sorted(expected - set(rows))
    if missing:
        label = ",".join(f"{p}={i}" for p, i in zip(parents, missing[0]))
        raise _fail(node, f"{what} has no row for {label}")
    shapes = {r.shape for r, _ in rows.values()}
    if len(shapes) != 1:
        raise _fail(node, f"rows of {what} differ in shape")
    table = np.empty(tuple(arity[p] for p in parents) + shapes.pop())
    for idx, (r, _) in rows.items():
        table[idx] = r
    return table, rows


def _check_row_sums(table, n_trailing, rows, node, parents, what, tol):
    sums = table.sum(axis=tuple(range(table.ndim - n_trailing, table.ndim)))
    for idx in itertools.product(*(range(n) for n in sums.shape)):
        if abs(sums[idx] - 1) > tol or np.any(table[idx] < -tol):
            anchor = rows[idx][1] if isinstance(rows, dict) else node
            label = ",".join(f"{p}={i}" for p, i in zip(parents, idx)) or "root"
            raise _fail(anchor, f"{what} row ({label}) sums to {sums[idx]}, not 1", NonNormalized)


def _parse_causal(node, tol):
    fields = _mapping(node, "causal")
    _only(fields, {"events", "edges", "arity", "cpt", "joint"}, "causal")
    events = []
    for ev in _sequence(_need(fields, "events", node), "events"):
        f = _mapping(ev, "event")
        _only(f, {"label", "t", "x", "kind"}, "event")
        kind = _scalar(f["kind"][1], "kind") if "kind" in f else "latent"
        if kind not in {k.value for k in EventKind}:
            raise _fail(f["kind"][1], f"unknown event kind {kind!r}")
        events.append(SpacetimeEvent(_scalar(_need(f, "label", ev), "label"),
                                     _real(_need(f, "t", ev), "t"), _real(_need(f, "x", ev), "x"), kind))
    labels = [e.label for e in events]
    if len(set(labels)) != len(labels):
        raise _fail(fields["events"][1], "event labels must be unique")
    edges = []
    for e in _sequence(fields["edges"][1], "edges") if "edges" in fields else []:
        pair = [_scalar(n, "edge endpoint") for n in _sequence(e, "edge")]
        if len(pair) != 2 or any(p not in labels for p in pair):
            raise _fail(e, f"edge {pair} must name two known events")
        edges.append(tuple(pair))
    arity = {}
    if "arity" in fields:
        for lab, (k, v) in _mapping(fields["arity"][1], "arity").items():
            if lab not in labels:
                raise _fail(k, f"arity for unknown event {lab!r}")
            arity[lab] = _int(v, "arity")
    try:
        skeleton = CausalModel(events, edges, arity)
    except BellCauseError as exc:
        raise _fail(node, str(exc), type(exc)) from None
    arity = dict(skeleton.arity)

    cpt = {}
    if "cpt" in fields:
        for lab, (k, v) in _mapping(fields["cpt"][1], "cpt").items():
            if lab not in labels:
                raise _fail(k, f"table for unknown event {lab!r}")
            parents = skeleton.parents(lab)
            table, rows = _rows(v, parents, arity, 1, f"table of {lab}")
            if table.shape[-1] != arity[lab]:
                raise _fail(v, f"table of {lab} needs {arity[lab]} entries per row")
            _check_row_sums(table, 1, rows, v, parents, f"table of {lab}", tol)
            cpt[lab] = table
    joint = {}
    if "joint" in fields:
        for jn in _sequence(fields["joint"][1], "joint"):
            f = _mapping(jn, "joint table")
            _only(f, {"nodes", "rows"}, "joint table")
            nodes = tuple(_scalar(n, "node") for n in _sequence(_need(f, "nodes", jn), "nodes"))
            if any(n not in labels for n in nodes):
                raise _fail(f["nodes"][1], f"joint table names unknown events {nodes}")
            parents = skeleton.joint_parents(nodes)
            table, rows = _rows(_need(f, "rows", jn), parents, arity, len(nodes), f"joint table {nodes}")
            if table.shape[table.ndim - len(nodes):] != tuple(arity[n] for n in nodes):
                raise _fail(jn, f"joint table {nodes} has the wrong outcome shape")
            _check_row_sums(table, len(nodes), rows, jn, parents, f"joint table {nodes}", tol)
            joint[nodes] = table
    try:
        return skeleton.with_tables(cpt, joint=joint)
    except BellCauseError as exc:
        raise _fail(node, str(exc), type(exc)) from None
    except (ValueError, KeyError) as exc:
        raise _fail(node, str(exc)) from None


def _need(fields, key, parent):
    if key not in fields:
        raise _fail(parent, f"missing required key {key!r}")
    return fields[key][1]


def _only(fields, allowed, what):
    for name, (k, _) in fields.items():
        if name not in allowed:
            raise _fail(k, f"unknown key {name!r} in {what}")


def _parse_analysis(node) -> Analysis:
    fields = _mapping(node, "analysis")
    _only(fields, set(ANALYSIS_KEYS), "analysis")
    tol = _real(fields["tol"][1], "tol") if "tol" in fields else DEFAULT_TOL
    seed = _int(fields["seed"][1], "seed") if "seed" in fields else None
    maxden = _int(fields["max_denominator"][1], "max_denominator") if "max_denominator" in fields \
        else DEFAULT_MAX_DENOMINATOR
    if tol < 0 or maxden < 1:
        raise _fail(node, "tol must be >= 0 and max_denominator >= 1")
    return Analysis(tol, seed, maxden)


def parse(data: Union[bytes, str]) -> ScenarioFile:
    """Parse file contents; errors carry 1-based line and column."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    try:
        root = yaml.compose(data, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise ParseError(exc.problem or str(exc), line, col) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from None
    if root is None:
        raise ParseError("empty input", 1, 1)
    fields = _mapping(root, "file")
    _only(fields, {"version", *PRIMARY_BLOCKS, "analysis"}, "file")
    vnode = _need(fields, "version", root)
    try:
        version = int(_scalar(vnode, "version"))
    except ValueError:
        version = None
    if version not in SUPPORTED_VERSIONS:
        line, col = _where(vnode)
        raise UnknownVersion(f"unsupported format version {vnode.value!r}; expected one of "
                             f"{list(SUPPORTED_VERSIONS)}", line, col)
    present = [b for b in PRIMARY_BLOCKS if b in fields]
    if len(present) != 1:
        raise _fail(root, f"need exactly one of {list(PRIMARY_BLOCKS)}, found {present or 'none'}")
    analysis = _parse_analysis(fields["analysis"][1]) if "analysis" in fields else Analysis()
    kind = present[0]
    node = fields[kind][1]
    tol = analysis.tol
    try:
        if kind == "phenomenon":
            payload = _parse_phenomenon(node, tol)
        elif kind == "hv_model":
            payload = _parse_hv_model(node, tol)
        elif kind == "quantum":
            payload = _parse_quantum(node)
        else:
            payload = _parse_causal(node, tol)
    except ParseError:
        raise
    except BellCauseError as exc:
        if str(exc).startswith("line "):
            raise
        raise _fail(node, str(exc), type(exc)) from None
    return ScenarioFile(version, kind, payload, analysis)


# -- serialization ---------------------------------------------------------------------------


def _q(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return float(v)


def _listify(arr):
    return _map(np.asarray(arr, dtype=object).tolist(), _q)


def _scenario_dict(sc: Scenario) -> dict:
    return {"settings": [sc.n_settings_alice, sc.n_settings_bob],
            "outcomes": [sc.n_outcomes_alice, sc.n_outcomes_bob], "preparation": sc.preparation_label}


def _rows_dict(table, parents, arity):
    if not parents:
        return _listify(table)
    out = {}
    for idx in itertools.product(*(range(arity[p]) for p in parents)):
        key = ",".join(f"{p}={i}" for p, i in zip(parents, idx))
        out[key] = _listify(table[idx])
    return out


def to_document(sf: ScenarioFile) -> dict:
    doc: dict[str, Any] = {"version": sf.version}
    p = sf.payload
    if sf.kind == "phenomenon":
        doc["phenomenon"] = {"scenario": _scenario_dict(p.scenario), "table": _listify(p.table)}
    elif sf.kind == "hv_model":
        doc["hv_model"] = {"scenario": _scenario_dict(p.scenario), "prior": _listify(p.prior),
                           "labels": [str(x) for x in p.labels], "response": _listify(p.response)}
    elif sf.kind == "quantum":
        doc["quantum"] = {"state": p.state_spec, "alice": list(p.alice), "bob": list(p.bob)}
    else:
        m = p
        doc["causal"] = {
            "events": [{"label": e.label, "t": float(e.t), "x": float(e.x), "kind": e.kind.value} for e in m.events],
            "edges": [list(e) for e in sorted(m.edges, key=lambda e: (m.labels.index(e[0]), m.labels.index(e[1])))],
            "arity": {lab: m.arity[lab] for lab in m.labels},
            "cpt": {lab: _rows_dict(m.cpt[lab], m.parents(lab), m.arity) for lab in m.labels if lab in m.cpt},
        }
        if m.joint:
            doc["causal"]["joint"] = [
                {"nodes": list(nodes), "rows": _rows_dict(t, m.joint_parents(nodes), m.arity)}
                for nodes, t in m.joint.items()
            ]
    a = sf.analysis
    analysis = {"tol": a.tol, "max_denominator": a.max_denominator}
    if a.seed is not None:
        analysis["seed"] = a.seed
    doc["analysis"] = analysis
    return doc


def dump(sf: ScenarioFile) -> str:
    return yaml.safe_dump(to_document(sf), sort_keys=False, default_flow_style=None, width=100)
