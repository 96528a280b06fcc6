"""Interventions on a chain event graph.

A stochastic manipulation replaces the transition vector of each intervened
position with a new interior vector; everything upstream keeps its idle
probabilities (no renormalization), everything downstream is untouched, and
positions sharing a parent with an intervened one simply lose their mass
through that parent's replacement vector.  No root-to-sink path may pass
through two intervened positions.

Remedial maintenance records drive interventions indirectly: a record
classifies as Perfect, Imperfect or Uncertain, yields a distribution over
remedied-cause indicator vectors, and the Dirichlet floret priors updated by
those indicators provide concrete replacement vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence

from .ceg import Ceg, SinkPaths, lambda_of, root_to_sink_paths
from .errors import (
    EmptyInterventionSet,
    IdenticalTheta,
    LengthMismatch,
    MissingConditional,
    NotNormalized,
    OutOfOpenInterval,
    OverlappingIntervention,
    ParseError,
    PositionNotInCeg,
    UnknownEdge,
)
from .event_tree import Edge, Path, PathSet


@dataclass(frozen=True)
class StochasticManipulation:
    """Replacement vectors keyed by intervened position, in edge order."""

    theta_hat: Mapping[str, tuple[float, ...]]

    @property
    def intervened_positions(self) -> tuple[str, ...]:
        return tuple(self.theta_hat)


@dataclass(frozen=True)
class DirichletFloretPrior:
    """Per-position concentration vectors and remedy strengths, edge order."""

    alpha: Mapping[str, tuple[float, ...]]
    eta: Mapping[str, tuple[float, ...]]

    def __post_init__(self):
        for name, table in (("alpha", self.alpha), ("eta", self.eta)):
            for w, vec in table.items():
                if any(x <= 0.0 for x in vec):
                    raise OutOfOpenInterval(
                        f"{name}[{w}] must be strictly positive"
                    )


class RemedyClass(Enum):
    PERFECT = "perfect"
    IMPERFECT = "imperfect"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class HiddenAction:
    """One unrecorded action hypothesis with its indicator outcomes."""

    id: str
    prob: float  # p(action | record)
    outcomes: tuple[tuple[frozenset, float], ...]  # (remedied edges, prob)


@dataclass(frozen=True)
class RemedialRecord:
    """A maintenance log entry.

    ``remedy`` is None when no remedy was recorded.  ``delta`` is the
    observed effectiveness indicator, None when unobserved.  ``indicators``
    is the remedied-cause edge set the recorded remedy fixes when it works.
    ``actions`` carry the hidden-action mixture used when the remedy did not
    work or was not recorded; ``p_delta`` is the prior that it worked.
    """

    remedy: Optional[str]
    delta: Optional[int] = None
    indicators: Optional[frozenset] = None
    actions: tuple[HiddenAction, ...] = ()
    p_delta: Optional[float] = None


def classify_remedy(record: RemedialRecord) -> RemedyClass:
    if record.remedy is None:
        return RemedyClass.UNCERTAIN
    if record.delta == 1:
        return RemedyClass.PERFECT
    if record.delta == 0:
        return RemedyClass.IMPERFECT
    return RemedyClass.UNCERTAIN


def _action_terms(record: RemedialRecord) -> list[tuple[float, frozenset, str]]:
    if not record.actions:
        raise MissingConditional(
            "record needs hidden-action tables to explain an unremedied cause"
        )
    total = math.fsum(a.prob for a in record.actions)
    if abs(total - 1.0) > 1e-9:
        raise NotNormalized(f"hidden-action probabilities sum to {total!r}")
    terms = []
    for action in record.actions:
        dist = math.fsum(p for _, p in action.outcomes)
        if abs(dist - 1.0) > 1e-9:
            raise NotNormalized(
                f"indicator outcomes of action {action.id!r} sum to {dist!r}"
            )
        for assignment, p in action.outcomes:
            terms.append((action.prob * p, assignment, action.id))
    return terms


def indicator_terms(record: RemedialRecord) -> list[tuple[float, frozenset, Optional[str]]]:
    """Weighted (probability, remedied edges, action) outcomes of a record.

    Perfect records give the recorded remedy's point mass; Imperfect records
    mix over hidden actions; Uncertain records mix both, weighted by the
    prior that the recorded (or unrecorded) remedy worked.
    """
    kind = classify_remedy(record)
    if kind is RemedyClass.PERFECT:
        if record.indicators is None:
            raise MissingConditional("perfect remedy needs its indicator vector")
        return [(1.0, record.indicators, None)]
    if kind is RemedyClass.IMPERFECT:
        return _action_terms(record)
    # uncertain: no point mass is asserted from the remedy alone
    p_delta = record.p_delta
    if p_delta is None:
        p_delta = 0.0 if record.indicators is None else None
    if p_delta is None:
        raise MissingConditional("uncertain remedy with indicators needs p_delta")
    terms: list[tuple[float, frozenset, Optional[str]]] = []
    if p_delta > 0.0:
        if record.indicators is None:
            raise MissingConditional("p_delta > 0 needs an indicator vector")
        terms.append((p_delta, record.indicators, None))
    if p_delta < 1.0:
        terms.extend(
            (w * (1.0 - p_delta), assignment, a)
            for w, assignment, a in _action_terms(record)
        )
    return terms


def infer_indicator_distribution(record: RemedialRecord) -> dict[frozenset, float]:
    """Distribution over remedied-cause edge sets implied by a record."""
    dist: dict[frozenset, float] = {}
    for weight, assignment, _ in indicator_terms(record):
        dist[assignment] = dist.get(assignment, 0.0) + weight
    return dist


# -- indicator plumbing -----------------------------------------------------

def root_cause_edges(ceg: Ceg) -> tuple[Edge, ...]:
    """Edges labelled by root-cause d-events, in graph order."""
    causes = set(ceg.root_causes)
    return tuple(e for e in ceg.edges if e.devent in causes)


def validate_indicators(ceg: Ceg, indicators: Mapping[Edge, int]) -> None:
    """The indicator domain must be exactly the root-cause edges."""
    domain = set(root_cause_edges(ceg))
    if not domain:
        raise ParseError("model declares no root causes")
    given = set(indicators)
    if given != domain:
        missing = sorted(str(e) for e in domain - given)
        extra = sorted(str(e) for e in given - domain)
        raise UnknownEdge(
            f"indicator domain mismatch: missing {missing}, unexpected {extra}"
        )
    for e, value in indicators.items():
        if value not in (0, 1):
            raise ParseError(f"indicator for {e} must be 0 or 1")


def intervened_positions_from(ceg: Ceg, indicators: Mapping[Edge, int]) -> tuple[str, ...]:
    """Positions owning at least one remedied cause, in graph order."""
    validate_indicators(ceg, indicators)
    hit = {e.src for e, value in indicators.items() if value == 1}
    return tuple(w for w in ceg.position_ids if w in hit)


def update_dirichlet(
    prior: DirichletFloretPrior, w: str, i_w: Sequence[float]
) -> DirichletFloretPrior:
    """Posterior for one position: alpha plus eta on every unremedied edge."""
    alpha = prior.alpha.get(w)
    eta = prior.eta.get(w)
    if alpha is None or eta is None:
        raise MissingConditional(f"no Dirichlet prior for position {w}")
    if len(i_w) != len(alpha) or len(eta) != len(alpha):
        raise LengthMismatch(
            f"position {w}: indicator length {len(i_w)} against alpha length"
            f" {len(alpha)}"
        )
    new_alpha = dict(prior.alpha)
    new_alpha[w] = tuple(
        a + h * (1.0 - float(i)) for a, h, i in zip(alpha, eta, i_w)
    )
    return DirichletFloretPrior(alpha=new_alpha, eta=dict(prior.eta))


def assignment_to_indicators(ceg: Ceg, remedied) -> dict[Edge, int]:
    """Expand a set of remedied edges to a full indicator map over the
    root-cause edges."""
    remedied = set(remedied)
    domain = root_cause_edges(ceg)
    unknown = remedied - set(domain)
    if unknown:
        raise UnknownEdge(
            f"remedied edges outside the root causes: {sorted(map(str, unknown))}"
        )
    return {e: (1 if e in remedied else 0) for e in domain}


def manipulation_from_indicators(
    ceg: Ceg, indicators: Mapping[Edge, int], prior: DirichletFloretPrior
) -> Optional[StochasticManipulation]:
    """Replacement vectors as the updated Dirichlet means.

    Returns None when nothing is remedied (no position is intervened).
    """
    w_star = intervened_positions_from(ceg, indicators)
    if not w_star:
        return None
    theta_hat = {}
    for w in w_star:
        edges = ceg.out_edges(w)
        missing = [e for e in edges if e not in indicators]
        if missing:
            raise MissingConditional(
                f"position {w} mixes cause and non-cause edges:"
                f" {sorted(map(str, missing))}"
            )
        i_w = tuple(float(indicators[e]) for e in edges)
        posterior = update_dirichlet(prior, w, i_w)
        vec = posterior.alpha[w]
        total = math.fsum(vec)
        theta_hat[w] = tuple(x / total for x in vec)
    return StochasticManipulation(theta_hat=theta_hat)


# -- manipulations ----------------------------------------------------------

def singular_manipulation(ceg: Ceg, edge) -> Ceg:
    """Force one edge: its probability becomes 1, its siblings 0.

    Every other floret keeps its idle vector, so path probabilities still
    sum to one over the whole graph.
    """
    from .ceg import _resolve_edge

    target = _resolve_edge(ceg, edge)
    theta = dict(ceg.theta)
    for e in ceg.out_edges(target.src):
        theta[e] = 1.0 if e == target else 0.0
    return Ceg(
        position_ids=ceg.position_ids,
        members=ceg.members,
        edges=ceg.edges,
        theta=theta,
        devents=ceg.devents,
        stage_ids=ceg.stage_ids,
        root_causes=ceg.root_causes,
        interior=False,
        tolerance=ceg.tolerance,
        name=f"{ceg.name}+force({target})" if ceg.name else f"force({target})",
    )


def _positions_on_path(path: Path) -> set[str]:
    return {e.src for e in path}


def validate_stochastic(
    ceg: Ceg, manipulation: StochasticManipulation, paths: Optional[SinkPaths] = None
) -> None:
    """Check a stochastic manipulation against its graph.

    Raises PositionNotInCeg, LengthMismatch, NotNormalized,
    OutOfOpenInterval, IdenticalTheta, EmptyInterventionSet or
    OverlappingIntervention; returns None when everything holds.
    """
    if not manipulation.theta_hat:
        raise EmptyInterventionSet("no position is intervened")
    for w, vec in manipulation.theta_hat.items():
        if w not in ceg.position_ids:
            raise PositionNotInCeg(f"unknown position {w}")
        edges = ceg.out_edges(w)
        if len(vec) != len(edges):
            raise LengthMismatch(
                f"position {w}: {len(vec)} probabilities for {len(edges)} edges"
            )
        total = math.fsum(vec)
        if abs(total - 1.0) > ceg.tolerance:
            raise NotNormalized(f"position {w}: replacement sums to {total!r}")
        for e, p in zip(edges, vec):
            if not (0.0 < p < 1.0):
                raise OutOfOpenInterval(
                    f"edge {e}: replacement {p!r} outside (0, 1)"
                )
        if tuple(vec) == ceg.theta_vector(w):
            raise IdenticalTheta(f"position {w}: replacement equals idle vector")
    w_star = set(manipulation.theta_hat)
    if paths is None:
        paths = root_to_sink_paths(ceg)
    for path in paths.all:
        if len(_positions_on_path(path) & w_star) > 1:
            raise OverlappingIntervention(
                "a root-to-sink path passes through two intervened positions"
            )


def manipulated_path_probability(
    ceg: Ceg, manipulation: StochasticManipulation, path: Path
) -> float:
    """Post-intervention probability of a path, zero off the intervened set.

    Upstream idle probabilities are kept as they are; only the intervened
    floret's factors are replaced, so the total mass over the intervened
    path set equals the idle probability of reaching an intervened position.
    """
    ceg.path_probability(path)  # validates membership
    w_star = set(manipulation.theta_hat)
    if not (_positions_on_path(path) & w_star):
        return 0.0
    prod = 1.0
    for e in path:
        if e.src in w_star:
            edges = ceg.out_edges(e.src)
            prod *= manipulation.theta_hat[e.src][edges.index(e)]
        else:
            prod *= ceg.theta[e]
    return prod


def conditioned_ceg(
    ceg: Ceg,
    w_star: Sequence[str],
    manipulation: Optional[StochasticManipulation] = None,
) -> Ceg:
    """Restrict to the paths through ``w_star`` and renormalize.

    Every retained transition gets the conditional probability of its edge
    given arrival at its source and passage through the intervened set,
    computed from idle probabilities, or from manipulated ones when a
    manipulation is supplied.  With ``w_star = {root}`` and no manipulation
    this is the identity.
    """
    if not w_star:
        raise EmptyInterventionSet("no position is intervened")
    for w in w_star:
        if w not in ceg.position_ids:
            raise PositionNotInCeg(f"unknown position {w}")
    if manipulation is not None:
        validate_stochastic(ceg, manipulation)
        if set(manipulation.theta_hat) != set(w_star):
            raise PositionNotInCeg(
                "manipulation and intervened set name different positions"
            )
    paths = root_to_sink_paths(ceg)
    star = set(w_star)
    kept = [p for p in paths.all if _positions_on_path(p) & star]
    for path in kept:
        if len(_positions_on_path(path) & star) > 1:
            raise OverlappingIntervention(
                "a root-to-sink path passes through two intervened positions"
            )

    if manipulation is None:
        weight = ceg.path_probability
    else:
        def weight(path):
            return manipulated_path_probability(ceg, manipulation, path)

    edge_mass: dict[Edge, float] = {}
    vertex_mass: dict[str, float] = {}
    for path in kept:
        w_path = weight(path)
        seen = set()
        for e in path:
            edge_mass[e] = edge_mass.get(e, 0.0) + w_path
            if e.src not in seen:
                vertex_mass[e.src] = vertex_mass.get(e.src, 0.0) + w_path
                seen.add(e.src)
    retained_positions = tuple(w for w in ceg.position_ids if w in vertex_mass)
    retained_edges = tuple(e for e in ceg.edges if e in edge_mass)
    theta = {e: edge_mass[e] / vertex_mass[e.src] for e in retained_edges}
    tag = "conditioned" if manipulation is None else "manipulated"
    return Ceg(
        position_ids=retained_positions,
        members={w: ceg.members[w] for w in retained_positions},
        edges=retained_edges,
        theta=theta,
        devents=ceg.devents,
        stage_ids={w: ceg.stage_ids[w] for w in retained_positions},
        root_causes=ceg.root_causes,
        interior=False,
        tolerance=ceg.tolerance,
        name=f"{ceg.name}+{tag}" if ceg.name else tag,
    )

def record_from_raw(ceg: Ceg, raw: Mapping) -> RemedialRecord:
    """Resolve a record object from an intervention document.

    Edge references become graph edges; hidden actions keep their listed
    order so mixtures stay deterministic.
    """
    from .ceg import _resolve_edge

    def edge_set(refs, where: str) -> frozenset:
        if not isinstance(refs, (list, tuple)):
            raise ParseError(f"{where} must be a list of edge references")
        return frozenset(_resolve_edge(ceg, r) for r in refs)

    remedy = raw.get("remedy")
    if remedy is not None and not isinstance(remedy, str):
        raise ParseError("remedy must be a string or null")
    delta = raw.get("delta")
    if delta not in (None, 0, 1):
        raise ParseError("delta must be 0, 1 or null")
    indicators = raw.get("indicators")
    if indicators is not None:
        indicators = edge_set(indicators, "indicators")
    p_delta = raw.get("p_delta")
    if p_delta is not None:
        p_delta = float(p_delta)
        if not 0.0 <= p_delta <= 1.0:
            raise ParseError("p_delta must lie in [0, 1]")
    actions = []
    for i, entry in enumerate(raw.get("actions", ())):
        if not isinstance(entry, Mapping):
            raise ParseError(f"actions[{i}] must be an object")
        outcomes = []
        for j, out in enumerate(entry.get("outcomes", ())):
            if not isinstance(out, Mapping):
                raise ParseError(f"actions[{i}].outcomes[{j}] must be an object")
            outcomes.append(
                (
                    edge_set(
                        out.get("remedied", ()),
                        f"actions[{i}].outcomes[{j}].remedied",
                    ),
                    float(out.get("prob", 0.0)),
                )
            )
        actions.append(
            HiddenAction(
                id=str(entry.get("id", f"a{i}")),
                prob=float(entry.get("prob", 0.0)),
                outcomes=tuple(outcomes),
            )
        )
    return RemedialRecord(
        remedy=remedy,
        delta=delta,
        indicators=indicators,
        actions=tuple(actions),
        p_delta=p_delta,
    )
