"""Causal effect computation and back-door identification.

Three routes to the post-intervention probability of a target d-event:

* ``brute_force_effect``: exhaustive enumeration with the substitution
  formula, normalized over the intervened path set.  The reference value.
* ``causal_effect_devent``: the controlled d-event decomposition, summing
  the singular effect of each controlled d-event against its manipulated
  probability.
* ``causal_effect_edge_level``: the same decomposition edge by edge, which
  stays exact even when one controlled d-event labels edges with different
  downstream behaviour.

Back-door machinery: verify a candidate partition of the intervened path
set against the two screening criteria, evaluate the adjustment formula,
and search a small family of structurally derived candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .ceg import Ceg, _resolve_edge, root_to_sink_paths
from .errors import (
    ControlledEventLeaksOutsideIntervention,
    NotAPartition,
    PartitionNotValid,
    PositionNotInCeg,
    UndefinedConditional,
    UnknownSelector,
    UnknownTarget,
)
from .event_tree import Edge, Path, PathSet
from .intervention import (
    DirichletFloretPrior,
    RemedialRecord,
    StochasticManipulation,
    assignment_to_indicators,
    conditioned_ceg,
    indicator_terms,
    manipulated_path_probability,
    manipulation_from_indicators,
    validate_stochastic,
)


@dataclass(frozen=True)
class CausalQuery:
    """A target d-event under a stochastic manipulation."""

    target: str
    manipulation: StochasticManipulation


@dataclass(frozen=True)
class BackdoorPartition:
    """Candidate blocking partition of the intervened path set.

    ``kind`` records how the blocks were formed (devents, stages, positions
    or edges); ``labels`` carries one human-readable descriptor per block.
    """

    blocks: tuple[PathSet, ...]
    labels: tuple[str, ...]
    kind: str = "custom"


@dataclass(frozen=True)
class CriterionComparison:
    criterion: int
    position: str
    devent: str
    edge: Edge
    block: str
    lhs: float
    rhs: float
    ok: bool
    vacuous: bool = False


@dataclass(frozen=True)
class BackdoorReport:
    passed: bool
    comparisons: tuple[CriterionComparison, ...]

    def failures(self) -> tuple[CriterionComparison, ...]:
        return tuple(c for c in self.comparisons if not c.ok)


class _QueryState:
    """Conditioned graphs and per-path weights shared across one query."""

    def __init__(
        self,
        ceg: Ceg,
        w_star: Sequence[str],
        manipulation: Optional[StochasticManipulation] = None,
    ):
        self.ceg = ceg
        # keep w* in graph order so reports are deterministic
        order = {wid: i for i, wid in enumerate(ceg.position_ids)}
        for wid in w_star:
            if wid not in order:
                raise PositionNotInCeg(f"unknown position {wid!r}")
        self.w_star = tuple(sorted(dict.fromkeys(w_star), key=order.__getitem__))
        self.idle = conditioned_ceg(ceg, self.w_star)
        self.paths = tuple(root_to_sink_paths(self.idle).all)
        self.pi_star = {p: self.idle.path_probability(p) for p in self.paths}
        if manipulation is not None:
            manip_graph = conditioned_ceg(ceg, self.w_star, manipulation)
            self.pi_hat = {p: manip_graph.path_probability(p) for p in self.paths}
            self.manipulated = manip_graph
        else:
            self.pi_hat = None
            self.manipulated = None
        star = set(self.w_star)
        self.intervened_edges = tuple(e for e in self.idle.edges if e.src in star)

    def devents_controlled(self) -> tuple[str, ...]:
        seen: list[str] = []
        for e in self.intervened_edges:
            if e.devent not in seen:
                seen.append(e.devent)
        return tuple(seen)

    def check_leak(self) -> None:
        star = set(self.w_star)
        controlled = set(self.devents_controlled())
        for e in self.ceg.edges:
            if e.devent in controlled and e.src not in star:
                raise ControlledEventLeaksOutsideIntervention(
                    f"d-event {e.devent!r} also labels {e}, outside the"
                    " intervened florets"
                )

    def mass_star(self, keep: Callable[[Path], bool]) -> float:
        return math.fsum(self.pi_star[p] for p in self.paths if keep(p))

    def mass_hat(self, keep: Callable[[Path], bool]) -> float:
        assert self.pi_hat is not None
        return math.fsum(self.pi_hat[p] for p in self.paths if keep(p))


def _require_target(ceg: Ceg, target: str) -> None:
    if target not in ceg.devents:
        raise UnknownTarget(f"unknown target d-event {target!r}")


def _hits_devent(target: str) -> Callable[[Path], bool]:
    return lambda p: any(e.devent == target for e in p)


def idle_target_mass(ceg: Ceg, target: str) -> float:
    """Probability of the target d-event with no intervention at all."""
    _require_target(ceg, target)
    hits = _hits_devent(target)
    return ceg.mass(p for p in root_to_sink_paths(ceg).all if hits(p))


def brute_force_effect(
    ceg: Ceg, manipulation: StochasticManipulation, target: str
) -> float:
    """Reference value by exhaustive enumeration.

    Sums the substituted path probabilities over the intervened paths
    hitting the target, normalized by the total substituted mass of the
    intervened path set.  Uses no conditioned-graph machinery, so the
    formula implementations can be checked against it.
    """
    _require_target(ceg, target)
    validate_stochastic(ceg, manipulation)
    star = set(manipulation.intervened_positions)
    weights = []
    hits = []
    for p in root_to_sink_paths(ceg).all:
        if not ({e.src for e in p} & star):
            continue
        w = manipulated_path_probability(ceg, manipulation, p)
        weights.append(w)
        if any(e.devent == target for e in p):
            hits.append(w)
    total = math.fsum(weights)
    if total <= 0.0:
        raise UndefinedConditional("intervened path set has no mass")
    return math.fsum(hits) / total


def causal_effect_devent(
    ceg: Ceg, manipulation: StochasticManipulation, target: str
) -> float:
    """Controlled d-event decomposition of the manipulated target mass.

    Every d-event labelling an intervened edge must label intervened edges
    only; its singular effect is the position-weighted conditional of the
    target given each of its edges, evaluated in the conditioned idle graph.
    """
    _require_target(ceg, target)
    validate_stochastic(ceg, manipulation)
    state = _QueryState(ceg, manipulation.intervened_positions, manipulation)
    state.check_leak()
    is_target = _hits_devent(target)
    total = []
    for x in state.devents_controlled():
        singular = []
        for e in state.intervened_edges:
            if e.devent != x:
                continue
            reach = state.mass_star(lambda p, w=e.src: any(f.src == w for f in p))
            through = state.mass_star(lambda p, ed=e: ed in p)
            if through <= 0.0:
                raise UndefinedConditional(f"no conditioned mass through {e}")
            target_through = state.mass_star(
                lambda p, ed=e: ed in p and is_target(p)
            )
            singular.append(reach * (target_through / through))
        weight_hat = state.mass_hat(lambda p, dv=x: any(f.devent == dv for f in p))
        total.append(math.fsum(singular) * weight_hat)
    return math.fsum(total)


def causal_effect_edge_level(
    ceg: Ceg, manipulation: StochasticManipulation, target: str
) -> float:
    """Edge-level decomposition: one term per intervened edge.

    Controlling an edge fixes its d-event conditional on arrival at its
    source, so the singular term is the plain conditional of the target
    given the edge in the conditioned idle graph.
    """
    _require_target(ceg, target)
    validate_stochastic(ceg, manipulation)
    state = _QueryState(ceg, manipulation.intervened_positions, manipulation)
    is_target = _hits_devent(target)
    terms = []
    for e in state.intervened_edges:
        through = state.mass_star(lambda p, ed=e: ed in p)
        if through <= 0.0:
            raise UndefinedConditional(f"no conditioned mass through {e}")
        target_through = state.mass_star(lambda p, ed=e: ed in p and is_target(p))
        hat = state.mass_hat(lambda p, ed=e: ed in p)
        terms.append((target_through / through) * hat)
    return math.fsum(terms)


# --- back-door verification ---------------------------------------------


def _as_blocks(partition) -> tuple[tuple[PathSet, ...], tuple[str, ...], str]:
    if isinstance(partition, BackdoorPartition):
        return partition.blocks, partition.labels, partition.kind
    blocks = tuple(PathSet(b) for b in partition)
    labels = tuple(f"block {i}" for i in range(len(blocks)))
    return blocks, labels, "custom"


def check_backdoor_partition(
    ceg: Ceg,
    w_star: Sequence[str],
    partition,
    target: str,
    tolerance: Optional[float] = None,
) -> BackdoorReport:
    """Verify the two screening criteria for a candidate blocking partition.

    The partition must cover the intervened path set exactly, block by
    block, with no overlap.  Criterion 1 asks each block to be equally
    likely given arrival at an intervened position and given each edge
    leaving it; criterion 2 asks the target to be screened off from the
    edge choice once the block is known.  Comparisons whose conditioning
    event has no mass are vacuous and recorded as such.
    """
    _require_target(ceg, target)
    tol = ceg.tolerance if tolerance is None else tolerance
    state = _QueryState(ceg, w_star)
    blocks, labels, _ = _as_blocks(partition)
    if not blocks:
        raise NotAPartition("no blocks given")
    universe = PathSet(state.paths)
    seen: set = set()
    for b in blocks:
        if len(b) == 0:
            raise NotAPartition("empty block")
        for p in b:
            if p not in universe:
                raise NotAPartition("block path leaves the intervened path set")
            if p in seen:
                raise NotAPartition("blocks overlap")
            seen.add(p)
    if len(seen) != len(universe):
        raise NotAPartition("blocks do not cover the intervened path set")

    is_target = _hits_devent(target)
    comparisons: list[CriterionComparison] = []
    for e in state.intervened_edges:
        w = e.src
        mass_w = state.mass_star(lambda p, wid=w: any(f.src == wid for f in p))
        mass_e = state.mass_star(lambda p, ed=e: ed in p)
        for z, label in zip(blocks, labels):
            in_z = z.__contains__
            # criterion 1: block independent of the edge taken at w
            lhs1 = state.mass_star(
                lambda p, wid=w: in_z(p) and any(f.src == wid for f in p)
            ) / mass_w
            rhs1 = state.mass_star(lambda p, ed=e: in_z(p) and ed in p) / mass_e
            comparisons.append(
                CriterionComparison(
                    1, w, e.devent, e, label, lhs1, rhs1, abs(lhs1 - rhs1) <= tol
                )
            )
            # criterion 2: target screened off from the edge within a block
            den_rhs = state.mass_star(lambda p, ed=e: in_z(p) and ed in p)
            if den_rhs <= 0.0:
                comparisons.append(
                    CriterionComparison(
                        2, w, e.devent, e, label, 0.0, 0.0, True, vacuous=True
                    )
                )
                continue
            rhs2 = (
                state.mass_star(
                    lambda p, ed=e: in_z(p) and ed in p and is_target(p)
                )
                / den_rhs
            )
            den_lhs = state.mass_star(
                lambda p, wid=w, dv=e.devent: in_z(p)
                and any(f.src == wid for f in p)
                and any(f.devent == dv for f in p)
            )
            lhs2 = (
                state.mass_star(
                    lambda p, wid=w, dv=e.devent: in_z(p)
                    and any(f.src == wid for f in p)
                    and any(f.devent == dv for f in p)
                    and is_target(p)
                )
                / den_lhs
            )
            comparisons.append(
                CriterionComparison(
                    2, w, e.devent, e, label, lhs2, rhs2, abs(lhs2 - rhs2) <= tol
                )
            )
    return BackdoorReport(all(c.ok for c in comparisons), tuple(comparisons))


def backdoor_adjustment(
    ceg: Ceg,
    manipulation: StochasticManipulation,
    partition,
    target: str,
    tolerance: Optional[float] = None,
) -> float:
    """Adjustment formula over a verified blocking partition.

    Requires the partition to pass both screening criteria; the value then
    matches the direct decompositions.  Raises ``PartitionNotValid`` when
    a criterion fails and ``UndefinedConditional`` when a required
    conditional has a zero-mass conditioning event.
    """
    _require_target(ceg, target)
    validate_stochastic(ceg, manipulation)
    state = _QueryState(ceg, manipulation.intervened_positions, manipulation)
    report = check_backdoor_partition(
        ceg, state.w_star, partition, target, tolerance
    )
    if not report.passed:
        bad = report.failures()[0]
        raise PartitionNotValid(
            f"criterion {bad.criterion} fails at {bad.edge} for {bad.block}:"
            f" {bad.lhs:.12g} != {bad.rhs:.12g}"
        )
    blocks, _, _ = _as_blocks(partition)
    is_target = _hits_devent(target)
    terms = []
    for x in state.devents_controlled():
        in_x = _hits_devent(x)
        weight_hat = state.mass_hat(in_x)
        for z in blocks:
            in_z = z.__contains__
            den = state.mass_star(lambda p: in_x(p) and in_z(p))
            if den <= 0.0:
                raise UndefinedConditional(
                    f"no conditioned mass for d-event {x!r} within a block"
                )
            num = state.mass_star(
                lambda p: in_x(p) and in_z(p) and is_target(p)
            )
            mass_z = state.mass_star(in_z)
            terms.append((num / den) * mass_z * weight_hat)
    return math.fsum(terms)


# --- candidate construction and search ----------------------------------


def partition_from_selectors(
    ceg: Ceg, w_star: Sequence[str], kind: str, blocks: Sequence[Sequence[str]]
) -> BackdoorPartition:
    """Build a blocking partition from selector ids.

    ``kind`` is one of ``devents``, ``stages``, ``positions`` or ``edges``;
    each block is a list of ids of that kind.  Block path sets are taken
    inside the intervened path set.
    """
    state = _QueryState(ceg, w_star)
    universe = state.paths

    def paths_for(selector: str) -> PathSet:
        if kind == "devents":
            if selector not in ceg.devents:
                raise UnknownSelector(f"unknown d-event {selector!r}")
            return PathSet(
                p for p in universe if any(e.devent == selector for e in p)
            )
        if kind == "positions":
            if selector not in ceg.position_ids:
                raise PositionNotInCeg(f"unknown position {selector!r}")
            return PathSet(
                p for p in universe if any(e.src == selector for e in p)
            )
        if kind == "stages":
            members = [
                wid
                for wid in ceg.position_ids
                if ceg.stage_ids.get(wid) == selector
            ]
            if not members:
                raise UnknownSelector(f"unknown stage {selector!r}")
            mset = set(members)
            return PathSet(
                p for p in universe if any(e.src in mset for e in p)
            )
        if kind == "edges":
            edge = _resolve_edge(ceg, selector)
            return PathSet(p for p in universe if edge in p)
        raise UnknownSelector(f"unknown partition kind {kind!r}")

    built = []
    labels = []
    for ids in blocks:
        ids = list(ids)
        merged: Optional[PathSet] = None
        for selector in ids:
            ps = paths_for(selector)
            merged = ps if merged is None else merged | ps
        if merged is None:
            raise NotAPartition("empty block")
        built.append(merged)
        labels.append(",".join(str(i) for i in ids))
    return BackdoorPartition(tuple(built), tuple(labels), kind)


def _position_layers(state: _QueryState) -> list[list[str]]:
    """Maximal-depth slices of the retained positions, root side first."""
    depth: dict[str, int] = {}
    for p in state.paths:
        for i, e in enumerate(p):
            depth[e.src] = max(depth.get(e.src, 0), i)
    layers: dict[int, list[str]] = {}
    order = {wid: i for i, wid in enumerate(state.idle.position_ids)}
    for wid, d in depth.items():
        layers.setdefault(d, []).append(wid)
    out = []
    for d in sorted(layers):
        out.append(sorted(layers[d], key=order.__getitem__))
    return out


def _usable_position_layer(
    state: _QueryState, layer: Sequence[str], star: set
) -> bool:
    """Every path meets the layer exactly once, after its intervened hit."""
    members = set(layer)
    if members & star:
        return False
    for p in state.paths:
        star_i = next((i for i, e in enumerate(p) if e.src in star), None)
        hits = [i for i, e in enumerate(p) if e.src in members]
        if len(hits) != 1:
            return False
        if star_i is None or hits[0] <= star_i:
            return False
    return True


def _edge_layers(state: _QueryState) -> list[list[Edge]]:
    depth: dict[Edge, int] = {}
    for p in state.paths:
        for i, e in enumerate(p):
            depth[e] = max(depth.get(e, 0), i)
    layers: dict[int, list[Edge]] = {}
    order = {e: i for i, e in enumerate(state.idle.edges)}
    for e, d in depth.items():
        layers.setdefault(d, []).append(e)
    out = []
    for d in sorted(layers):
        out.append(sorted(layers[d], key=order.__getitem__))
    return out


def _usable_edge_layer(
    state: _QueryState, layer: Sequence[Edge], star: set
) -> bool:
    members = set(layer)
    for p in state.paths:
        star_i = next((i for i, e in enumerate(p) if e.src in star), None)
        hits = [i for i, e in enumerate(p) if e in members]
        if len(hits) != 1:
            return False
        if star_i is None or hits[0] <= star_i:
            return False
    return True


def search_backdoor_partition(
    ceg: Ceg,
    w_star: Sequence[str],
    target: str,
    tolerance: Optional[float] = None,
) -> Optional[tuple[BackdoorPartition, BackdoorReport]]:
    """Look for a blocking partition among structurally natural candidates.

    Candidates are built from single-crossing slices of the conditioned
    graph, strictly downstream of the intervened positions: first stage
    groupings of a position slice, then shared-probability groupings of an
    edge slice, then single-edge blocks.  Returns the first candidate that
    passes both criteria, or ``None``.
    """
    _require_target(ceg, target)
    state = _QueryState(ceg, w_star)
    star = set(state.w_star)

    def paths_of_positions(members: Sequence[str]) -> PathSet:
        mset = set(members)
        return PathSet(p for p in state.paths if any(e.src in mset for e in p))

    def paths_of_edges(members: Sequence[Edge]) -> PathSet:
        mset = set(members)
        return PathSet(p for p in state.paths if any(e in mset for e in p))

    candidates: list[BackdoorPartition] = []

    position_layers = [
        layer
        for layer in _position_layers(state)
        if _usable_position_layer(state, layer, star)
    ]
    for layer in position_layers:
        groups: dict[str, list[str]] = {}
        for wid in layer:
            groups.setdefault(state.idle.stage_ids.get(wid, wid), []).append(wid)
        if len(groups) < 2:
            continue
        blocks = tuple(paths_of_positions(m) for m in groups.values())
        labels = tuple(
            f"{sid}:{'+'.join(m)}" for sid, m in groups.items()
        )
        candidates.append(BackdoorPartition(blocks, labels, "stages"))

    edge_layers = [
        layer
        for layer in _edge_layers(state)
        if _usable_edge_layer(state, layer, star)
    ]
    for layer in edge_layers:
        # colour classes come from the idle model, not the conditioned
        # quotients, so shared probabilities group exactly
        groups: dict[float, list[Edge]] = {}
        for e in layer:
            groups.setdefault(ceg.theta[e], []).append(e)
        if len(groups) < 2:
            continue
        blocks = tuple(paths_of_edges(m) for m in groups.values())
        labels = tuple(
            "+".join(dict.fromkeys(e.devent for e in m)) + f"@{value:.12g}"
            for value, m in groups.items()
        )
        candidates.append(BackdoorPartition(blocks, labels, "colour"))

    for layer in edge_layers:
        if len(layer) < 2:
            continue
        blocks = tuple(paths_of_edges([e]) for e in layer)
        labels = tuple(str(e) for e in layer)
        candidates.append(BackdoorPartition(blocks, labels, "edges"))

    for candidate in candidates:
        report = check_backdoor_partition(
            ceg, state.w_star, candidate, target, tolerance
        )
        if report.passed:
            return candidate, report
    return None


# --- remedial mixtures ---------------------------------------------------


def remedial_breakdown(
    ceg: Ceg,
    record: RemedialRecord,
    prior: DirichletFloretPrior,
    target: str,
) -> list[tuple[float, frozenset[Edge], Optional[str], float]]:
    """Per-assignment rows of the remedial mixture.

    Each row is (weight, remedied edge set, hidden action id, effect); the
    effect is the idle target probability when the assignment remedies
    nothing.
    """
    _require_target(ceg, target)
    rows = []
    for weight, remedied, action in indicator_terms(record):
        indicators = assignment_to_indicators(ceg, remedied)
        manipulation = manipulation_from_indicators(ceg, indicators, prior)
        if manipulation is None:
            effect = idle_target_mass(ceg, target)
        else:
            effect = causal_effect_edge_level(ceg, manipulation, target)
        rows.append((weight, remedied, action, effect))
    return rows


def expected_effect_imperfect(
    ceg: Ceg,
    record: RemedialRecord,
    prior: DirichletFloretPrior,
    target: str,
) -> float:
    """Expected manipulated target probability under an uncertain remedy.

    Mixes the per-assignment effects by the indicator distribution the
    record induces.  A perfect record collapses to a single assignment;
    an imperfect or uncertain one averages over the compatible ones.
    """
    rows = remedial_breakdown(ceg, record, prior, target)
    return math.fsum(w * eff for w, _, _, eff in rows)


def forced_edge_effect(ceg: Ceg, edge, target: str) -> float:
    """Target probability when one edge is forced to probability one.

    The intervened set is the forced edge's source position; paths outside
    it keep no mass after conditioning, paths avoiding the forced edge
    inside it get zero.
    """
    from .intervention import singular_manipulation

    _require_target(ceg, target)
    forced = _resolve_edge(ceg, edge)
    graph = singular_manipulation(ceg, forced)
    weights = []
    hits = []
    for p in root_to_sink_paths(ceg).all:
        if not any(e.src == forced.src for e in p):
            continue
        w = graph.path_probability(p)
        weights.append(w)
        if any(e.devent == target for e in p):
            hits.append(w)
    total = math.fsum(weights)
    if total <= 0.0:
        raise UndefinedConditional("forced path set has no mass")
    return math.fsum(hits) / total
