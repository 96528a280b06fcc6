"""Chain event graphs.

A CEG collapses a staged tree onto its positions plus at most two sinks, a
failure sink and a working sink.  Parallel edges between the same pair of
positions are kept apart by a 1-based edge index.  All path-set queries
(the lambda sets) live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union

from .errors import (
    LengthMismatch,
    PathNotInTree,
    PositionNotInCeg,
    ProbabilityNotNormalized,
    ProbabilityOutOfOpenInterval,
    UnknownEdge,
    UnknownSelector,
)
from .event_tree import DEFAULT_TOLERANCE, DEvent, Edge, LeafStatus, Path, PathSet
from .staging import PositionPartition, StagedTree, compute_positions

SINK_FAIL = "winf_f"
SINK_OK = "winf_n"


@dataclass(frozen=True)
class Ceg:
    """Chain event graph with transition probabilities.

    ``interior`` is True for idle graphs (all probabilities strictly inside
    the unit interval); manipulated and conditioned graphs may carry 0 and 1.
    """

    position_ids: tuple[str, ...]
    members: Mapping[str, tuple[str, ...]]
    edges: tuple[Edge, ...]
    theta: Mapping[Edge, float]
    devents: Mapping[str, DEvent]
    stage_ids: Mapping[str, str]
    root_causes: tuple[str, ...] = ()
    interior: bool = True
    tolerance: float = DEFAULT_TOLERANCE
    name: str = ""
    _out: Mapping[str, tuple[Edge, ...]] = field(init=False, default=None, repr=False)
    sinks: tuple[str, ...] = field(init=False, default=())

    def __post_init__(self):
        out: dict[str, list[Edge]] = {w: [] for w in self.position_ids}
        sinks = []
        for e in self.edges:
            if e.src not in out:
                raise PositionNotInCeg(f"edge {e} leaves unknown position {e.src}")
            out[e.src].append(e)
            if e.dst in (SINK_FAIL, SINK_OK):
                if e.dst not in sinks:
                    sinks.append(e.dst)
            elif e.dst not in out:
                raise PositionNotInCeg(f"edge {e} enters unknown position {e.dst}")
        for w in self.position_ids:
            edges = out[w]
            if not edges:
                raise LengthMismatch(f"position {w} has no emanating edges")
            total = math.fsum(self.theta[e] for e in edges)
            if abs(total - 1.0) > self.tolerance:
                raise ProbabilityNotNormalized(
                    f"position {w}: transition vector sums to {total!r}"
                )
            for e in edges:
                p = self.theta[e]
                if self.interior and not (0.0 < p < 1.0):
                    raise ProbabilityOutOfOpenInterval(
                        f"edge {e}: probability {p!r} outside (0, 1)"
                    )
                if not self.interior and not (0.0 <= p <= 1.0):
                    raise ProbabilityOutOfOpenInterval(
                        f"edge {e}: probability {p!r} outside [0, 1]"
                    )
        order = [s for s in (SINK_FAIL, SINK_OK) if s in sinks]
        object.__setattr__(self, "_out", {w: tuple(es) for w, es in out.items()})
        object.__setattr__(self, "sinks", tuple(order))

    # -- structure ----------------------------------------------------------

    @property
    def root(self) -> str:
        return self.position_ids[0]

    def out_edges(self, w: str) -> tuple[Edge, ...]:
        if w not in self._out:
            raise PositionNotInCeg(f"unknown position {w}")
        return self._out[w]

    def theta_vector(self, w: str) -> tuple[float, ...]:
        return tuple(self.theta[e] for e in self.out_edges(w))

    def find_edge(self, src: str, dst: str, index: int = 1) -> Edge:
        for e in self.edges:
            if e.src == src and e.dst == dst and e.index == index:
                return e
        raise UnknownEdge(f"no edge {src}->{dst}#{index}")

    def edges_of_devent(self, devent: str) -> tuple[Edge, ...]:
        if devent not in self.devents:
            raise UnknownSelector(f"unknown d-event {devent!r}")
        return tuple(e for e in self.edges if e.devent == devent)

    # -- paths --------------------------------------------------------------

    def path_probability(self, path: Path) -> float:
        if not path or path[0].src != self.root:
            raise PathNotInTree("path does not start at the root position")
        prod = 1.0
        for i, e in enumerate(path):
            if self.theta.get(e) is None:
                raise PathNotInTree(f"edge {e} is not in the graph")
            if i and path[i - 1].dst != e.src:
                raise PathNotInTree("path edges are not consecutive")
            prod *= self.theta[e]
        if path[-1].dst not in (SINK_FAIL, SINK_OK):
            raise PathNotInTree("path does not end in a sink")
        return prod

    def mass(self, paths: Iterable[Path]) -> float:
        return math.fsum(self.path_probability(p) for p in paths)


class SinkPaths(NamedTuple):
    all: PathSet
    failed: PathSet
    operational: PathSet


def root_to_sink_paths(ceg: Ceg) -> SinkPaths:
    """Every root-to-sink path, partitioned by terminal sink."""
    collected: list[Path] = []

    def walk(w: str, prefix: tuple[Edge, ...]):
        for e in ceg.out_edges(w):
            if e.dst in (SINK_FAIL, SINK_OK):
                collected.append(prefix + (e,))
            else:
                walk(e.dst, prefix + (e,))

    walk(ceg.root, ())
    failed = PathSet(p for p in collected if p[-1].dst == SINK_FAIL)
    operational = PathSet(p for p in collected if p[-1].dst == SINK_OK)
    return SinkPaths(PathSet(collected), failed, operational)


EdgeRef = Union[Edge, tuple, str]


def _resolve_edge(ceg: Ceg, ref: EdgeRef) -> Edge:
    if isinstance(ref, Edge):
        if ref not in ceg.theta:
            raise UnknownEdge(f"no edge {ref}")
        return ref
    if isinstance(ref, str):
        from .model_io import parse_edge_ref

        ref = parse_edge_ref(ref)
    src, dst, index = ref
    return ceg.find_edge(src, dst, index)


def lambda_of(
    ceg: Ceg,
    *,
    devent: Optional[str] = None,
    position: Optional[str] = None,
    edge: Optional[EdgeRef] = None,
    sink: Optional[str] = None,
    paths: Optional[SinkPaths] = None,
) -> PathSet:
    """Lambda set of a selector: the root-to-sink paths passing through it.

    Exactly one selector may be given.  ``sink`` accepts a sink id or the
    shorthands "f"/"n".
    """
    given = [x for x in (devent, position, edge, sink) if x is not None]
    if len(given) != 1:
        raise UnknownSelector("exactly one selector is required")
    if paths is None:
        paths = root_to_sink_paths(ceg)
    if devent is not None:
        targets = set(ceg.edges_of_devent(devent))
        return PathSet(p for p in paths.all if targets.intersection(p))
    if position is not None:
        if position in (SINK_FAIL, SINK_OK):
            return PathSet(p for p in paths.all if p[-1].dst == position)
        if position not in ceg.position_ids:
            raise UnknownSelector(f"unknown position {position!r}")
        if position == ceg.root:
            return paths.all
        return PathSet(p for p in paths.all if any(e.dst == position for e in p))
    if edge is not None:
        target = _resolve_edge(ceg, edge)
        return PathSet(p for p in paths.all if target in p)
    name = {"f": SINK_FAIL, "n": SINK_OK}.get(sink, sink)
    if name == SINK_FAIL:
        return paths.failed
    if name == SINK_OK:
        return paths.operational
    raise UnknownSelector(f"unknown sink {sink!r}")


def is_fine_cut(ceg: Ceg, positions: Iterable[str]) -> bool:
    """True when the union of the positions' lambda sets covers every path."""
    paths = root_to_sink_paths(ceg)
    union: PathSet = PathSet()
    for w in positions:
        if w not in ceg.position_ids and w not in (SINK_FAIL, SINK_OK):
            raise PositionNotInCeg(f"unknown position {w}")
        union = union | lambda_of(ceg, position=w, paths=paths)
    return union == paths.all


def build_ceg(
    staged: StagedTree,
    positions: Optional[PositionPartition] = None,
    *,
    root_causes: Sequence[str] = (),
    name: str = "",
) -> Ceg:
    """Collapse a staged tree onto its chain event graph.

    Each position inherits the floret of its breadth-first-first member;
    members of one position have isomorphic coloured subtrees, so the choice
    of representative does not matter.  Leaves become the failure or working
    sink; a sink nobody reaches is simply absent.
    """
    if positions is None:
        positions = compute_positions(staged)
    tree = staged.ptree.tree
    pid: dict[str, str] = {}
    for wid, block in zip(positions.ids, positions.blocks):
        for v in block:
            pid[v] = wid
    members = {
        wid: tuple(sorted(block, key=tree.bfs_index))
        for wid, block in zip(positions.ids, positions.blocks)
    }
    edges: list[Edge] = []
    theta: dict[Edge, float] = {}
    for wid, block in zip(positions.ids, positions.blocks):
        rep = min(block, key=tree.bfs_index)
        parallel: dict[tuple[str, str], int] = {}
        for tree_edge, p in zip(tree.out_edges(rep), staged.ptree.theta[rep]):
            if tree.is_leaf(tree_edge.dst):
                status = tree.leaf_status[tree_edge.dst]
                target = SINK_FAIL if status is LeafStatus.FAILED else SINK_OK
            else:
                target = pid[tree_edge.dst]
            nxt = parallel.get((wid, target), 0) + 1
            parallel[(wid, target)] = nxt
            e = Edge(src=wid, dst=target, devent=tree_edge.devent, index=nxt)
            edges.append(e)
            theta[e] = p
    stage_ids = {
        wid: staged.stages.ids[positions.stage_of[i]]
        for i, wid in enumerate(positions.ids)
    }
    return Ceg(
        position_ids=positions.ids,
        members=members,
        edges=tuple(edges),
        theta=theta,
        devents=dict(staged.ptree.tree.devents),
        stage_ids=stage_ids,
        root_causes=tuple(root_causes),
        interior=True,
        tolerance=staged.ptree.tolerance,
        name=name,
    )

def ceg_from_document(doc, tolerance: float = DEFAULT_TOLERANCE) -> Ceg:
    """Full pipeline from a parsed model document to its graph."""
    from .event_tree import build_event_tree
    from .staging import staged_tree_from_document

    ptree = build_event_tree(doc, tolerance)
    staged = staged_tree_from_document(doc, ptree)
    return build_ceg(
        staged,
        root_causes=getattr(doc, "root_causes", ()) or (),
        name=getattr(doc, "name", "") or "",
    )
