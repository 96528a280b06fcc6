"""Reading and writing the UTF-8 model, intervention and query documents.

The model document is JSON with keys ``devents``, ``vertices``, ``edges``,
``leaf_status`` and ``theta`` plus the optional ``stages`` and
``root_causes`` sections.  Edge order inside ``edges`` is sibling order;
``theta`` vectors follow it.  ``dumps(loads(text))`` is lossless.

Edges elsewhere (indicator maps, partitions, singular interventions) are
referenced as ``"src->dst#index"``; ``#index`` may be omitted when it is 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from .errors import ParseError
from .event_tree import DEvent, Edge


@dataclass(frozen=True)
class ModelDocument:
    name: str
    devents: tuple[DEvent, ...]
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    leaf_status: Mapping[str, str]
    theta: Mapping[str, tuple[float, ...]]
    stages: Optional[tuple[tuple[str, ...], ...]] = None
    root_causes: tuple[str, ...] = ()


@dataclass(frozen=True)
class InterventionDocument:
    """Parsed intervention document; payloads stay in document form."""

    type: str  # stochastic | indicators | singular | remedial
    positions: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    indicators: Mapping[tuple[str, str, int], int] = field(default_factory=dict)
    alpha: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    eta: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    edge: Optional[tuple[str, str, int]] = None
    record: Optional[Mapping[str, Any]] = None


@dataclass(frozen=True)
class QueryDocument:
    target: str
    partition_kind: Optional[str] = None  # devents | stages | positions | edges
    partition_blocks: tuple[tuple[str, ...], ...] = ()


def parse_edge_ref(ref: str) -> tuple[str, str, int]:
    """Parse ``"src->dst#index"`` (index defaults to 1)."""
    body, sep, idx = ref.partition("#")
    if "->" not in body:
        raise ParseError(f"bad edge reference {ref!r}")
    src, _, dst = body.partition("->")
    if not src or not dst:
        raise ParseError(f"bad edge reference {ref!r}")
    if sep:
        try:
            index = int(idx)
        except ValueError:
            raise ParseError(f"bad edge index in {ref!r}") from None
        if index < 1:
            raise ParseError(f"edge index must be positive in {ref!r}")
    else:
        index = 1
    return (src, dst, index)


def format_edge_ref(edge: Edge) -> str:
    return f"{edge.src}->{edge.dst}#{edge.index}"


def _require(obj: Mapping[str, Any], key: str, kind) -> Any:
    if key not in obj:
        raise ParseError(f"missing key {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise ParseError(f"key {key!r} has wrong type {type(value).__name__}")
    return value


def _float_vector(raw, where: str) -> tuple[float, ...]:
    if not isinstance(raw, Sequence) or isinstance(raw, str):
        raise ParseError(f"{where}: expected a list of numbers")
    out = []
    for x in raw:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ParseError(f"{where}: expected a list of numbers")
        out.append(float(x))
    return tuple(out)


def loads(text: str) -> ModelDocument:
    """Parse a model document; structural problems raise ParseError."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("document root must be an object")
    devents = []
    for item in _require(raw, "devents", list):
        if not isinstance(item, dict):
            raise ParseError("devents entries must be objects")
        devents.append(DEvent(id=_require(item, "id", str), text=item.get("text", "")))
    vertices = tuple(_require(raw, "vertices", list))
    if not all(isinstance(v, str) for v in vertices):
        raise ParseError("vertices must be strings")
    edges = []
    ordinal: dict[tuple[str, str], int] = {}
    for item in _require(raw, "edges", list):
        if not isinstance(item, dict):
            raise ParseError("edges entries must be objects")
        src = _require(item, "src", str)
        dst = _require(item, "dst", str)
        devent = _require(item, "devent", str)
        auto = ordinal.get((src, dst), 0) + 1
        ordinal[(src, dst)] = auto
        index = item.get("index", auto)
        if index != auto:
            raise ParseError(
                f"edge {src}->{dst}: index {index} out of document order (expected {auto})"
            )
        edges.append(Edge(src=src, dst=dst, devent=devent, index=index))
    leaf_status = dict(_require(raw, "leaf_status", dict))
    theta = {
        v: _float_vector(vec, f"theta[{v}]")
        for v, vec in _require(raw, "theta", dict).items()
    }
    stages = None
    if raw.get("stages") is not None:
        blocks = raw["stages"]
        if not isinstance(blocks, list):
            raise ParseError("stages must be a list of vertex lists")
        stages = tuple(tuple(b) for b in blocks)
        for b in stages:
            if not all(isinstance(v, str) for v in b):
                raise ParseError("stages must be a list of vertex lists")
    root_causes = tuple(raw.get("root_causes", ()))
    if not all(isinstance(x, str) for x in root_causes):
        raise ParseError("root_causes must be d-event ids")
    return ModelDocument(
        name=raw.get("name", ""),
        devents=tuple(devents),
        vertices=vertices,
        edges=tuple(edges),
        leaf_status=leaf_status,
        theta=theta,
        stages=stages,
        root_causes=root_causes,
    )


def load(path) -> ModelDocument:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(doc: ModelDocument) -> str:
    """Serialize with explicit edge indices; loads(dumps(doc)) == doc."""
    payload: dict[str, Any] = {
        "name": doc.name,
        "devents": [{"id": d.id, "text": d.text} for d in doc.devents],
        "vertices": list(doc.vertices),
        "edges": [
            {"src": e.src, "dst": e.dst, "devent": e.devent, "index": e.index}
            for e in doc.edges
        ],
        "leaf_status": dict(doc.leaf_status),
        "theta": {v: list(vec) for v, vec in doc.theta.items()},
    }
    if doc.stages is not None:
        payload["stages"] = [list(b) for b in doc.stages]
    if doc.root_causes:
        payload["root_causes"] = list(doc.root_causes)
    return json.dumps(payload, indent=2) + "\n"


def dump(doc: ModelDocument, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))


def loads_intervention(text: str) -> InterventionDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("intervention document root must be an object")
    kind = _require(raw, "type", str)
    if kind == "stochastic":
        positions = {
            w: _float_vector(vec, f"positions[{w}]")
            for w, vec in _require(raw, "positions", dict).items()
        }
        return InterventionDocument(type=kind, positions=positions)
    if kind == "singular":
        return InterventionDocument(
            type=kind, edge=parse_edge_ref(_require(raw, "edge", str))
        )
    if kind in ("indicators", "remedial"):
        indicators = {}
        for ref, value in raw.get("indicators", {}).items():
            if value not in (0, 1):
                raise ParseError(f"indicator for {ref!r} must be 0 or 1")
            indicators[parse_edge_ref(ref)] = int(value)
        alpha = {
            w: _float_vector(vec, f"alpha[{w}]")
            for w, vec in raw.get("alpha", {}).items()
        }
        eta = {
            w: _float_vector(vec, f"eta[{w}]") for w, vec in raw.get("eta", {}).items()
        }
        record = raw.get("record")
        if kind == "remedial" and not isinstance(record, dict):
            raise ParseError("remedial intervention needs a record object")
        return InterventionDocument(
            type=kind, indicators=indicators, alpha=alpha, eta=eta, record=record
        )
    raise ParseError(f"unknown intervention type {kind!r}")


def load_intervention(path) -> InterventionDocument:
    with open(path, encoding="utf-8") as fh:
        return loads_intervention(fh.read())


def loads_query(text: str) -> QueryDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("query document root must be an object")
    target = _require(raw, "target", str)
    part = raw.get("partition")
    if part is None:
        return QueryDocument(target=target)
    kind = _require(part, "kind", str)
    if kind not in ("devents", "stages", "positions", "edges"):
        raise ParseError(f"unknown partition kind {kind!r}")
    blocks = _require(part, "blocks", list)
    parsed = []
    for b in blocks:
        if not isinstance(b, list) or not all(isinstance(x, str) for x in b):
            raise ParseError("partition blocks must be lists of ids")
        parsed.append(tuple(b))
    return QueryDocument(
        target=target, partition_kind=kind, partition_blocks=tuple(parsed)
    )


def load_query(path) -> QueryDocument:
    with open(path, encoding="utf-8") as fh:
        return loads_query(fh.read())
