import json
import re

import pytest
from click.testing import CliRunner

from cegkit import fixtures, model_io
from cegkit.cli import main

BUSHING_HAT = {"type": "stochastic", "positions": {"w1": [0.1, 0.2, 0.3, 0.4]}}
FAIL_QUERY = {"target": "fail"}


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workspace(tmp_path):
    """Model and document files most commands need."""
    files = {}
    for name, doc in fixtures.all_documents().items():
        path = tmp_path / f"{name}.json"
        model_io.dump(doc, path)
        files[name] = str(path)

    def write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    files["dir"] = tmp_path
    files["write"] = write
    files["stochastic"] = write("stochastic.json", BUSHING_HAT)
    files["query"] = write("query.json", FAIL_QUERY)
    return files


def value_of(output: str, key: str) -> str:
    for line in output.splitlines():
        if line.startswith(f"{key}: "):
            return line.split(": ", 1)[1]
    raise AssertionError(f"no {key!r} line in:\n{output}")


def float_of(output: str, key: str) -> float:
    return float(value_of(output, key))


class TestBuild:
    def test_bushing_summary(self, runner, workspace):
        result = runner.invoke(main, ["build", "--model", workspace["bushing"]])
        assert result.exit_code == 0
        assert value_of(result.stdout, "model") == "bushing"
        assert value_of(result.stdout, "positions") == "9"
        assert value_of(result.stdout, "sinks") == "2"
        assert value_of(result.stdout, "edges") == "20"
        assert value_of(result.stdout, "root_to_sink_paths") == "20"
        assert value_of(result.stdout, "fine_cut_root") == "YES"
        assert value_of(result.stdout, "w3") == "v3 v4"
        assert value_of(result.stdout, "u3") == "v3 v4"
        assert value_of(result.stdout, "w8") == "v7 v8 v13 v14 v15 v16"

    def test_dot_outputs(self, runner, workspace, tmp_path):
        out = tmp_path / "dots"
        result = runner.invoke(
            main,
            ["build", "--model", workspace["bushing"], "--out", str(out)],
        )
        assert result.exit_code == 0
        written = sorted(p.name for p in out.iterdir())
        assert written == ["bushing.ceg.dot", "bushing.staged.dot", "bushing.tree.dot"]
        for p in out.iterdir():
            text = p.read_text(encoding="utf-8")
            assert text.startswith("digraph")
            assert text.endswith("}\n")

    def test_missing_file_is_a_parse_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["build", "--model", str(tmp_path / "nope.json")]
        )
        assert result.exit_code == 4
        assert "cannot read" in result.stderr

    def test_malformed_json_is_a_parse_error(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{", encoding="utf-8")
        result = runner.invoke(main, ["build", "--model", str(bad)])
        assert result.exit_code == 4

    def test_invalid_model_is_a_validation_error(self, runner, workspace):
        raw = json.loads(
            (workspace["dir"] / "bushing.json").read_text(encoding="utf-8")
        )
        raw["theta"]["v0"] = [0.6, 0.5]
        broken = workspace["write"]("unnormalized.json", raw)
        result = runner.invoke(main, ["build", "--model", broken])
        assert result.exit_code == 2
        assert "sums to" in result.stderr

    def test_tolerance_flag_loosens_validation(self, runner, workspace):
        raw = json.loads(
            (workspace["dir"] / "bushing.json").read_text(encoding="utf-8")
        )
        raw["theta"]["v0"] = [0.6, 0.5]
        broken = workspace["write"]("loose.json", raw)
        result = runner.invoke(
            main, ["build", "--model", broken, "--tolerance", "0.2"]
        )
        assert result.exit_code == 0

    def test_negative_tolerance_rejected(self, runner, workspace):
        result = runner.invoke(
            main,
            ["build", "--model", workspace["bushing"], "--tolerance", "-1"],
        )
        assert result.exit_code == 4

    def test_env_tolerance_and_flag_precedence(self, runner, workspace):
        raw = json.loads(
            (workspace["dir"] / "bushing.json").read_text(encoding="utf-8")
        )
        raw["theta"]["v0"] = [0.6, 0.5]
        broken = workspace["write"]("env.json", raw)
        ok = runner.invoke(
            main, ["build", "--model", broken], env={"CEG_TOLERANCE": "0.2"}
        )
        assert ok.exit_code == 0
        overridden = runner.invoke(
            main,
            ["build", "--model", broken, "--tolerance", "1e-12"],
            env={"CEG_TOLERANCE": "0.2"},
        )
        assert overridden.exit_code == 2

    def test_bad_env_tolerance(self, runner, workspace):
        result = runner.invoke(
            main,
            ["build", "--model", workspace["bushing"]],
            env={"CEG_TOLERANCE": "not-a-number"},
        )
        assert result.exit_code == 4

    def test_deterministic_output(self, runner, workspace):
        first = runner.invoke(main, ["build", "--model", workspace["bushing"]])
        second = runner.invoke(main, ["build", "--model", workspace["bushing"]])
        assert first.stdout == second.stdout


class TestQueryStochastic:
    def test_effects_agree_and_partition_found(self, runner, workspace):
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing"],
                "--intervention", workspace["stochastic"],
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        oracle = float_of(result.stdout, "oracle")
        assert oracle == pytest.approx(0.6065, abs=1e-12)
        assert float_of(result.stdout, "devent_formula") == pytest.approx(
            oracle, abs=1e-12
        )
        assert float_of(result.stdout, "edge_formula") == pytest.approx(
            oracle, abs=1e-12
        )
        assert float_of(result.stdout, "adjustment") == pytest.approx(
            oracle, abs=1e-12
        )
        assert value_of(result.stdout, "agreement").startswith("OK")
        assert value_of(result.stdout, "fine_cut") == "NO"
        assert value_of(result.stdout, "verdict").startswith("VERIFIED (colour")
        assert value_of(result.stdout, "pruned") == "w2"

    def test_supplied_partition_is_used(self, runner, workspace):
        query = workspace["write"](
            "query_devents.json",
            {
                "target": "fail",
                "partition": {
                    "kind": "devents",
                    "blocks": [
                        ["oil_leak", "oil_loss", "thermal"],
                        ["no_leak", "oil_mix", "electrical"],
                    ],
                },
            },
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing"],
                "--intervention", workspace["stochastic"],
                "--query", query,
            ],
        )
        assert result.exit_code == 0
        assert value_of(result.stdout, "verdict").startswith("VERIFIED (devents")

    def test_broken_model_fails_supplied_partition(self, runner, workspace):
        query = workspace["write"](
            "query_broken.json",
            {
                "target": "fail",
                "partition": {
                    "kind": "devents",
                    "blocks": [
                        ["oil_leak", "oil_loss", "thermal"],
                        ["no_leak", "oil_mix", "electrical"],
                    ],
                },
            },
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing_broken"],
                "--intervention", workspace["stochastic"],
                "--query", query,
            ],
        )
        assert result.exit_code == 3
        assert value_of(result.stdout, "verdict") == "FAILED"
        assert re.search(r" NO$", result.stdout, re.MULTILINE)

    def test_conservator_fine_cut_and_stage_partition(self, runner, workspace):
        intervention = workspace["write"](
            "cons_int.json",
            {"type": "stochastic", "positions": {"w0": [0.25, 0.75]}},
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["conservator"],
                "--intervention", intervention,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        assert value_of(result.stdout, "fine_cut") == "YES"
        assert float_of(result.stdout, "oracle") == pytest.approx(
            0.349, abs=1e-12
        )
        assert value_of(result.stdout, "verdict").startswith("VERIFIED (stages")

    def test_invalid_manipulation_is_a_validation_error(self, runner, workspace):
        bad = workspace["write"](
            "bad_hat.json",
            {"type": "stochastic", "positions": {"w1": [0.1, 0.2, 0.3, 0.5]}},
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing"],
                "--intervention", bad,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 2

    def test_leaking_devent_is_an_identification_error(self, runner, workspace):
        lone = workspace["write"](
            "twin_lone.json",
            {"type": "stochastic", "positions": {"w1": [0.2, 0.8]}},
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["twin"],
                "--intervention", lone,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 3
        assert "outside" in result.stderr


class TestQueryOtherTypes:
    def test_singular(self, runner, workspace):
        intervention = workspace["write"](
            "force.json", {"type": "singular", "edge": "w1->w3#1"}
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing"],
                "--intervention", intervention,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        assert value_of(result.stdout, "edge") == "w1->w3#1"
        assert float_of(result.stdout, "forced_effect") == pytest.approx(
            0.575, abs=1e-12
        )

    def test_remedial_mixture(self, runner, workspace):
        intervention = workspace["write"](
            "remedial.json",
            {
                "type": "remedial",
                "alpha": {"w1": [3, 2, 2.5, 2.5], "w2": [3, 2]},
                "eta": {"w1": [1, 1, 1, 1], "w2": [1, 1]},
                "record": {
                    "remedy": "swap",
                    "delta": 0,
                    "actions": [
                        {
                            "id": "swap_seal",
                            "prob": 0.6,
                            "outcomes": [
                                {"remedied": ["w1->w3#1"], "prob": 0.5},
                                {"remedied": [], "prob": 0.5},
                            ],
                        },
                        {
                            "id": "no_action",
                            "prob": 0.4,
                            "outcomes": [{"remedied": [], "prob": 1.0}],
                        },
                    ],
                },
            },
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing"],
                "--intervention", intervention,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        assert value_of(result.stdout, "remedy_class") == "imperfect"
        mixture_rows = [
            line
            for line in result.stdout.splitlines()
            if line.startswith(("0.2", "0.3", "0.4"))
        ]
        assert len(mixture_rows) == 3
        expected = float_of(result.stdout, "expected_effect")
        hand = 0.0
        for row in mixture_rows:
            parts = row.split()
            hand += float(parts[0]) * float(parts[3])
        assert expected == pytest.approx(hand, abs=1e-12)

    def test_indicators_nothing_remedied(self, runner, workspace):
        intervention = workspace["write"](
            "noop.json",
            {
                "type": "indicators",
                "indicators": {
                    "w1->w3#1": 0, "w1->w3#2": 0, "w1->w4#1": 0,
                    "w1->w5#1": 0, "w2->w8#1": 0, "w2->w8#2": 0,
                },
                "alpha": {"w1": [3, 2, 2.5, 2.5], "w2": [3, 2]},
                "eta": {"w1": [1, 1, 1, 1], "w2": [1, 1]},
            },
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing"],
                "--intervention", intervention,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        assert float_of(result.stdout, "idle_effect") == pytest.approx(
            0.60425, abs=1e-12
        )

    def test_indicators_remedy_runs_stochastic_flow(self, runner, workspace):
        intervention = workspace["write"](
            "fix_gasket.json",
            {
                "type": "indicators",
                "indicators": {
                    "w1->w3#1": 1, "w1->w3#2": 0, "w1->w4#1": 0,
                    "w1->w5#1": 0, "w2->w8#1": 0, "w2->w8#2": 0,
                },
                "alpha": {"w1": [3, 2, 2.5, 2.5], "w2": [3, 2]},
                "eta": {"w1": [1, 1, 1, 1], "w2": [1, 1]},
            },
        )
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing"],
                "--intervention", intervention,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        total = 3.0 + 3.0 + 3.5 + 3.5
        hat = value_of(result.stdout, "theta_hat[w1]").split()
        assert [float(x) for x in hat] == pytest.approx(
            [3.0 / total, 3.0 / total, 3.5 / total, 3.5 / total], abs=1e-15
        )
        assert value_of(result.stdout, "agreement").startswith("OK")

    def test_unknown_target_is_a_validation_error(self, runner, workspace):
        query = workspace["write"]("melt.json", {"target": "melt"})
        result = runner.invoke(
            main,
            [
                "query",
                "--model", workspace["bushing"],
                "--intervention", workspace["stochastic"],
                "--query", query,
            ],
        )
        assert result.exit_code == 2


class TestCheckBackdoor:
    def test_search_verifies_bushing(self, runner, workspace):
        result = runner.invoke(
            main,
            [
                "check-backdoor",
                "--model", workspace["bushing"],
                "--intervention", workspace["stochastic"],
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        assert value_of(result.stdout, "verdict").startswith("VERIFIED (colour")
        assert "criterion position devent edge block lhs rhs ok" in result.stdout

    def test_twin_two_position_intervention(self, runner, workspace):
        intervention = workspace["write"](
            "twin_both.json",
            {
                "type": "stochastic",
                "positions": {"w1": [0.2, 0.8], "w2": [0.45, 0.55]},
            },
        )
        result = runner.invoke(
            main,
            [
                "check-backdoor",
                "--model", workspace["twin"],
                "--intervention", intervention,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        assert value_of(result.stdout, "verdict").startswith("VERIFIED")

    def test_broken_model_fails(self, runner, workspace):
        query = workspace["write"](
            "qb.json",
            {
                "target": "fail",
                "partition": {
                    "kind": "devents",
                    "blocks": [
                        ["oil_leak", "oil_loss", "thermal"],
                        ["no_leak", "oil_mix", "electrical"],
                    ],
                },
            },
        )
        result = runner.invoke(
            main,
            [
                "check-backdoor",
                "--model", workspace["bushing_broken"],
                "--intervention", workspace["stochastic"],
                "--query", query,
            ],
        )
        assert result.exit_code == 3
        assert value_of(result.stdout, "verdict").startswith("FAILED")

    def test_singular_intervention_uses_edge_source(self, runner, workspace):
        intervention = workspace["write"](
            "force2.json", {"type": "singular", "edge": "w1->w4#1"}
        )
        result = runner.invoke(
            main,
            [
                "check-backdoor",
                "--model", workspace["bushing"],
                "--intervention", intervention,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 0
        assert value_of(result.stdout, "verdict").startswith("VERIFIED")

    def test_remedial_type_rejected(self, runner, workspace):
        intervention = workspace["write"](
            "rem.json",
            {
                "type": "remedial",
                "alpha": {"w1": [1, 1, 1, 1]},
                "eta": {"w1": [1, 1, 1, 1]},
                "record": {"remedy": "swap", "delta": 1, "indicators": []},
            },
        )
        result = runner.invoke(
            main,
            [
                "check-backdoor",
                "--model", workspace["bushing"],
                "--intervention", intervention,
                "--query", workspace["query"],
            ],
        )
        assert result.exit_code == 4


class TestExportDot:
    @pytest.mark.parametrize("kind", ["tree", "staged", "ceg"])
    def test_kinds_write_digraphs(self, runner, workspace, kind):
        result = runner.invoke(
            main,
            ["export-dot", "--model", workspace["bushing"], "--kind", kind],
        )
        assert result.exit_code == 0
        assert result.stdout.startswith("digraph")

    def test_manipulated_prunes_unvisited_positions(self, runner, workspace):
        result = runner.invoke(
            main,
            [
                "export-dot",
                "--model", workspace["bushing"],
                "--kind", "manipulated",
                "--intervention", workspace["stochastic"],
            ],
        )
        assert result.exit_code == 0
        assert '"w1"' in result.stdout
        assert '"w2"' not in result.stdout

    def test_manipulated_requires_intervention(self, runner, workspace):
        result = runner.invoke(
            main,
            ["export-dot", "--model", workspace["bushing"], "--kind", "manipulated"],
        )
        assert result.exit_code == 4

    def test_out_file(self, runner, workspace, tmp_path):
        out = tmp_path / "graph.dot"
        result = runner.invoke(
            main,
            [
                "export-dot",
                "--model", workspace["conservator"],
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0
        assert out.read_text(encoding="utf-8").startswith("digraph")

    def test_deterministic(self, runner, workspace):
        args = ["export-dot", "--model", workspace["twin"], "--kind", "staged"]
        assert runner.invoke(main, args).stdout == runner.invoke(main, args).stdout


class TestFixtures:
    def test_subcommand_writes_models(self, runner, tmp_path):
        out = tmp_path / "models"
        result = runner.invoke(main, ["fixtures", "--out", str(out)])
        assert result.exit_code == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == [
            "bushing.json",
            "bushing_broken.json",
            "conservator.json",
            "twin.json",
        ]
        for line in result.stdout.splitlines():
            assert line.endswith(".json")

    def test_seed_randomizes_bushing(self, runner, tmp_path):
        plain = tmp_path / "plain"
        seeded = tmp_path / "seeded"
        runner.invoke(main, ["fixtures", "--out", str(plain)])
        runner.invoke(main, ["fixtures", "--out", str(seeded), "--seed", "3"])
        default = (plain / "bushing.json").read_text(encoding="utf-8")
        randomized = (seeded / "bushing.json").read_text(encoding="utf-8")
        assert default != randomized
        # the randomized model still parses and builds
        from cegkit.ceg import ceg_from_document

        graph = ceg_from_document(model_io.loads(randomized))
        assert len(graph.position_ids) == 9

    def test_group_level_flag(self, runner, tmp_path):
        out = tmp_path / "flagged"
        result = runner.invoke(main, ["--fixtures", "--out", str(out)])
        assert result.exit_code == 0
        assert (out / "bushing.json").exists()

    def test_bare_invocation_prints_help(self, runner):
        result = runner.invoke(main, [])
        assert result.exit_code == 0
        assert "Usage" in result.stdout
