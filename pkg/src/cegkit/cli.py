"""Command line front end.

Reports are plain key:value blocks so runs can be diffed; DOT files are
byte-stable.  Exit codes: 0 success, 2 validation error, 3 identification
failure, 4 parse error.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Optional

import click

from . import fixtures as fixture_lib
from . import model_io
from .causal import (
    backdoor_adjustment,
    brute_force_effect,
    causal_effect_devent,
    causal_effect_edge_level,
    check_backdoor_partition,
    forced_edge_effect,
    partition_from_selectors,
    remedial_breakdown,
    search_backdoor_partition,
)
from .ceg import Ceg, ceg_from_document, is_fine_cut, root_to_sink_paths
from .dot import ceg_dot, staged_dot, tree_dot
from .errors import (
    CegError,
    ControlledEventLeaksOutsideIntervention,
    ParseError,
    PartitionNotValid,
    UndefinedConditional,
)
from .event_tree import DEFAULT_TOLERANCE, build_event_tree
from .intervention import (
    DirichletFloretPrior,
    StochasticManipulation,
    classify_remedy,
    conditioned_ceg,
    manipulation_from_indicators,
    record_from_raw,
    RemedyClass,
)
from .staging import staged_tree_from_document

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IDENTIFICATION = 3
EXIT_PARSE = 4

_IDENTIFICATION_ERRORS = (
    PartitionNotValid,
    UndefinedConditional,
    ControlledEventLeaksOutsideIntervention,
)


@dataclass
class RunConfig:
    model_path: Optional[str] = None
    intervention_path: Optional[str] = None
    query_path: Optional[str] = None
    output_dir: Optional[str] = None
    seed: Optional[int] = None
    tolerance: float = DEFAULT_TOLERANCE


def _tolerance_from(value: Optional[float]) -> float:
    if value is not None:
        if value <= 0.0:
            raise ParseError("tolerance must be positive")
        return value
    env = os.environ.get("CEG_TOLERANCE")
    if env:
        try:
            parsed = float(env)
        except ValueError:
            raise ParseError(f"CEG_TOLERANCE is not a number: {env!r}") from None
        if parsed <= 0.0:
            raise ParseError("CEG_TOLERANCE must be positive")
        return parsed
    return DEFAULT_TOLERANCE


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _exit_for(exc: CegError) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, _IDENTIFICATION_ERRORS):
        return EXIT_IDENTIFICATION
    return EXIT_VALIDATION


def _fail(exc: CegError) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(_exit_for(exc))


def _load_model(path: str):
    try:
        return model_io.load(path)
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_PARSE)


def _write_fixture_documents(out_dir: str, seed: Optional[int] = None) -> list[str]:
    docs = dict(fixture_lib.all_documents())
    if seed is not None:
        docs["bushing"] = fixture_lib.bushing_document(
            fixture_lib.bushing_theta(seed)
        )
    target = FsPath(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for name, doc in sorted(docs.items()):
        path = target / f"{name}.json"
        model_io.dump(doc, path)
        written.append(str(path))
    return written


@click.group(invoke_without_command=True)
@click.option(
    "--fixtures",
    "fixtures_flag",
    is_flag=True,
    help="Write the bundled example models into --out and exit.",
)
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False),
    default="fixtures",
    show_default=True,
    help="Output directory for --fixtures.",
)
@click.pass_context
def main(ctx: click.Context, fixtures_flag: bool, out_dir: str) -> None:
    """Chain event graph toolkit for reliability causal analysis."""
    if ctx.invoked_subcommand is not None:
        return
    if fixtures_flag:
        for path in _write_fixture_documents(out_dir):
            click.echo(path)
        ctx.exit(EXIT_OK)
    click.echo(ctx.get_help())
    ctx.exit(EXIT_OK)


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--tolerance", type=float, default=None)
def build(model_path: str, out_dir: Optional[str], tolerance: Optional[float]):
    """Validate a model, print its structure, optionally write DOT files."""
    try:
        tol = _tolerance_from(tolerance)
        doc = _load_model(model_path)
        ptree = build_event_tree(doc, tol)
        staged = staged_tree_from_document(doc, ptree)
        graph = ceg_from_document(doc, tol)
        paths = root_to_sink_paths(graph)
    except CegError as exc:
        _fail(exc)

    click.echo(f"model: {graph.name or model_path}")
    click.echo(f"vertices: {len(ptree.tree.vertices)}")
    click.echo(f"situations: {len(ptree.tree.situations)}")
    click.echo(f"devents: {len(graph.devents)}")
    click.echo("[stages]")
    stages = staged.stages
    for sid, block in zip(stages.ids, stages.blocks):
        members = " ".join(sorted(block, key=ptree.tree.bfs_index))
        click.echo(f"{sid}: {members}")
    click.echo("[positions]")
    for wid in graph.position_ids:
        members = " ".join(graph.members[wid])
        click.echo(f"{wid}: {members}")
    click.echo("[graph]")
    click.echo(f"positions: {len(graph.position_ids)}")
    click.echo(f"sinks: {len(graph.sinks)}")
    click.echo(f"edges: {len(graph.edges)}")
    click.echo(f"root_to_sink_paths: {len(paths.all)}")
    click.echo(f"failed_paths: {len(paths.failed)}")
    click.echo(f"fine_cut_root: {'YES' if is_fine_cut(graph, (graph.root,)) else 'NO'}")
    if out_dir is not None:
        target = FsPath(out_dir)
        target.mkdir(parents=True, exist_ok=True)
        base = graph.name or FsPath(model_path).stem
        outputs = {
            f"{base}.tree.dot": tree_dot(ptree, name=base),
            f"{base}.staged.dot": staged_dot(staged, name=base),
            f"{base}.ceg.dot": ceg_dot(graph),
        }
        click.echo("[dot]")
        for fname, text in outputs.items():
            path = target / fname
            path.write_text(text, encoding="utf-8")
            click.echo(str(path))


def _manipulation_from_document(graph: Ceg, idoc):
    """Resolve an intervention document to (manipulation, prior, record).

    Only the pieces relevant to the type are non-None.
    """
    if idoc.type == "stochastic":
        theta_hat = {w: tuple(vec) for w, vec in idoc.positions.items()}
        return StochasticManipulation(theta_hat=theta_hat), None, None
    if idoc.type == "singular":
        return None, None, None
    alpha = {w: tuple(v) for w, v in (idoc.alpha or {}).items()}
    eta = {w: tuple(v) for w, v in (idoc.eta or {}).items()}
    prior = DirichletFloretPrior(alpha=alpha, eta=eta)
    if idoc.type == "indicators":
        from .ceg import _resolve_edge

        indicators = {
            _resolve_edge(graph, ref): value
            for ref, value in idoc.indicators.items()
        }
        manipulation = manipulation_from_indicators(graph, indicators, prior)
        return manipulation, prior, None
    record = record_from_raw(graph, idoc.record)
    return None, prior, record


def _describe_manipulated(graph: Ceg, manipulated: Ceg) -> None:
    click.echo("[manipulated-ceg]")
    kept = list(manipulated.position_ids)
    pruned = [w for w in graph.position_ids if w not in manipulated.position_ids]
    click.echo(f"positions: {' '.join(kept)}")
    click.echo(f"pruned: {' '.join(pruned) if pruned else '-'}")
    click.echo(f"edges: {len(manipulated.edges)}")


def _echo_criteria(report) -> None:
    click.echo("[criteria]")
    click.echo("criterion position devent edge block lhs rhs ok")
    for c in report.comparisons:
        lhs = "-" if c.vacuous else _fmt(c.lhs)
        rhs = "-" if c.vacuous else _fmt(c.rhs)
        ok = "vacuous" if c.vacuous else ("yes" if c.ok else "NO")
        click.echo(
            f"{c.criterion} {c.position} {c.devent} {c.edge} {c.block}"
            f" {lhs} {rhs} {ok}"
        )


def _resolve_partition(graph: Ceg, w_star, qdoc):
    if qdoc.partition_kind is None:
        return None
    return partition_from_selectors(
        graph, w_star, qdoc.partition_kind, qdoc.partition_blocks
    )


def _query_stochastic(
    graph: Ceg, manipulation: StochasticManipulation, qdoc, tol: float
) -> None:
    target = qdoc.target
    w_star = manipulation.intervened_positions
    click.echo("[manipulation]")
    click.echo("type: stochastic")
    click.echo(f"positions: {' '.join(w_star)}")
    for w in w_star:
        vec = " ".join(_fmt(x) for x in manipulation.theta_hat[w])
        click.echo(f"theta_hat[{w}]: {vec}")
    manipulated = conditioned_ceg(graph, w_star, manipulation)
    _describe_manipulated(graph, manipulated)

    oracle = brute_force_effect(graph, manipulation, target)
    devent_value = causal_effect_devent(graph, manipulation, target)
    edge_value = causal_effect_edge_level(graph, manipulation, target)

    partition = _resolve_partition(graph, w_star, qdoc)
    found_kind = None
    if partition is None:
        found = search_backdoor_partition(graph, w_star, target, tol)
        if found is not None:
            partition, report = found
            found_kind = partition.kind
        else:
            report = None
    else:
        report = check_backdoor_partition(graph, w_star, partition, target, tol)

    click.echo("[effects]")
    click.echo(f"target: {target}")
    click.echo(f"devent_formula: {_fmt(devent_value)}")
    click.echo(f"edge_formula: {_fmt(edge_value)}")
    click.echo(f"oracle: {_fmt(oracle)}")

    adjustment = None
    if partition is not None and report is not None and report.passed:
        adjustment = backdoor_adjustment(graph, manipulation, partition, target, tol)
        click.echo(f"adjustment: {_fmt(adjustment)}")
    else:
        click.echo("adjustment: -")

    values = [devent_value, edge_value, oracle]
    if adjustment is not None:
        values.append(adjustment)
    spread = max(values) - min(values)
    agree = spread <= tol
    click.echo(f"agreement: {'OK' if agree else 'FAIL'} (spread {_fmt(spread)})")

    click.echo("[back-door]")
    click.echo(f"fine_cut: {'YES' if is_fine_cut(graph, w_star) else 'NO'}")
    if partition is None:
        click.echo("verdict: NOT FOUND")
    elif report.passed:
        kind = found_kind or partition.kind
        blocks = "; ".join(partition.labels)
        click.echo(f"verdict: VERIFIED ({kind} partition: {blocks})")
    else:
        click.echo("verdict: FAILED")
    if report is not None:
        _echo_criteria(report)
    if not agree:
        click.echo("error: effect formulas disagree beyond tolerance", err=True)
        sys.exit(EXIT_IDENTIFICATION)
    if partition is not None and report is not None and not report.passed:
        sys.exit(EXIT_IDENTIFICATION)


def _query_remedial(graph: Ceg, record, prior, qdoc, tol: float) -> None:
    target = qdoc.target
    kind = classify_remedy(record)
    click.echo("[manipulation]")
    click.echo("type: remedial")
    click.echo(f"remedy_class: {kind.value}")
    rows = remedial_breakdown(graph, record, prior, target)
    click.echo("[mixture]")
    click.echo("weight remedied action effect")
    total = 0.0
    for weight, remedied, action, effect in rows:
        edges = "+".join(sorted(str(e) for e in remedied)) if remedied else "-"
        click.echo(f"{_fmt(weight)} {edges} {action or '-'} {_fmt(effect)}")
        total += weight * effect
    click.echo("[effects]")
    click.echo(f"target: {target}")
    click.echo(f"expected_effect: {_fmt(total)}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--intervention", "intervention_path", required=True, type=click.Path())
@click.option("--query", "query_path", required=True, type=click.Path())
@click.option("--tolerance", type=float, default=None)
def query(
    model_path: str,
    intervention_path: str,
    query_path: str,
    tolerance: Optional[float],
):
    """Run an intervention and report the causal effect on a target."""
    try:
        tol = _tolerance_from(tolerance)
        doc = _load_model(model_path)
        graph = ceg_from_document(doc, tol)
        try:
            idoc = model_io.load_intervention(intervention_path)
            qdoc = model_io.load_query(query_path)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_PARSE)
        click.echo(f"model: {graph.name or model_path}")
        if idoc.type == "singular":
            effect = forced_edge_effect(graph, idoc.edge, qdoc.target)
            click.echo("[manipulation]")
            click.echo("type: singular")
            src, dst, index = idoc.edge
            click.echo(f"edge: {src}->{dst}#{index}")
            click.echo("[effects]")
            click.echo(f"target: {qdoc.target}")
            click.echo(f"forced_effect: {_fmt(effect)}")
            return
        manipulation, prior, record = _manipulation_from_document(graph, idoc)
        if record is not None:
            _query_remedial(graph, record, prior, qdoc, tol)
            return
        if manipulation is None:
            click.echo("[manipulation]")
            click.echo("type: indicators")
            click.echo("positions: -")
            click.echo("[effects]")
            click.echo(f"target: {qdoc.target}")
            from .causal import idle_target_mass

            click.echo(f"idle_effect: {_fmt(idle_target_mass(graph, qdoc.target))}")
            return
        _query_stochastic(graph, manipulation, qdoc, tol)
    except CegError as exc:
        _fail(exc)


@main.command("check-backdoor")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--intervention", "intervention_path", required=True, type=click.Path())
@click.option("--query", "query_path", required=True, type=click.Path())
@click.option("--tolerance", type=float, default=None)
def check_backdoor(
    model_path: str,
    intervention_path: str,
    query_path: str,
    tolerance: Optional[float],
):
    """Verify a candidate back-door partition and print the comparison table."""
    try:
        tol = _tolerance_from(tolerance)
        doc = _load_model(model_path)
        graph = ceg_from_document(doc, tol)
        try:
            idoc = model_io.load_intervention(intervention_path)
            qdoc = model_io.load_query(query_path)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_PARSE)
        if idoc.type == "stochastic":
            w_star = tuple(idoc.positions)
        elif idoc.type == "singular":
            w_star = (idoc.edge[0],)
        else:
            raise ParseError(
                "check-backdoor needs a stochastic or singular intervention"
            )
        partition = _resolve_partition(graph, w_star, qdoc)
        if partition is None:
            found = search_backdoor_partition(graph, w_star, qdoc.target, tol)
            if found is None:
                click.echo("verdict: NOT FOUND")
                sys.exit(EXIT_IDENTIFICATION)
            partition, report = found
        else:
            report = check_backdoor_partition(
                graph, w_star, partition, qdoc.target, tol
            )
        blocks = "; ".join(partition.labels)
        if report.passed:
            click.echo(f"verdict: VERIFIED ({partition.kind} partition: {blocks})")
        else:
            click.echo(f"verdict: FAILED ({partition.kind} partition: {blocks})")
        _echo_criteria(report)
        if not report.passed:
            sys.exit(EXIT_IDENTIFICATION)
    except CegError as exc:
        _fail(exc)


@main.command("export-dot")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option(
    "--kind",
    type=click.Choice(["tree", "staged", "ceg", "manipulated"]),
    default="ceg",
    show_default=True,
)
@click.option("--intervention", "intervention_path", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--tolerance", type=float, default=None)
def export_dot(
    model_path: str,
    kind: str,
    intervention_path: Optional[str],
    out_path: Optional[str],
    tolerance: Optional[float],
):
    """Write one DOT graph to stdout or --out."""
    try:
        tol = _tolerance_from(tolerance)
        doc = _load_model(model_path)
        base = doc.name or FsPath(model_path).stem
        if kind in ("tree", "staged"):
            ptree = build_event_tree(doc, tol)
            staged = staged_tree_from_document(doc, ptree)
            text = tree_dot(ptree, name=base) if kind == "tree" else staged_dot(
                staged, name=base
            )
        else:
            graph = ceg_from_document(doc, tol)
            if kind == "ceg":
                text = ceg_dot(graph)
            else:
                if intervention_path is None:
                    raise ParseError("manipulated export needs --intervention")
                try:
                    idoc = model_io.load_intervention(intervention_path)
                except OSError as exc:
                    click.echo(f"error: {exc}", err=True)
                    sys.exit(EXIT_PARSE)
                manipulation, _, _ = _manipulation_from_document(graph, idoc)
                if manipulation is None:
                    raise ParseError(
                        "manipulated export needs a stochastic or indicators"
                        " intervention that intervenes at least one position"
                    )
                manipulated = conditioned_ceg(
                    graph, manipulation.intervened_positions, manipulation
                )
                text = ceg_dot(manipulated, name=f"{base}.manipulated")
    except CegError as exc:
        _fail(exc)
    if out_path is None:
        click.echo(text, nl=False)
    else:
        FsPath(out_path).parent.mkdir(parents=True, exist_ok=True)
        FsPath(out_path).write_text(text, encoding="utf-8")
        click.echo(out_path)


@main.command("fixtures")
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False),
    default="fixtures",
    show_default=True,
)
@click.option("--seed", type=int, default=None, help="Randomize bushing probabilities.")
def fixtures_cmd(out_dir: str, seed: Optional[int]):
    """Write the bundled example models as model documents."""
    for path in _write_fixture_documents(out_dir, seed):
        click.echo(path)


if __name__ == "__main__":
    main()
