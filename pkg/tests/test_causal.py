import math
import random

import pytest

from cegkit import fixtures
from cegkit.causal import (
    BackdoorPartition,
    backdoor_adjustment,
    brute_force_effect,
    causal_effect_devent,
    causal_effect_edge_level,
    check_backdoor_partition,
    expected_effect_imperfect,
    forced_edge_effect,
    idle_target_mass,
    partition_from_selectors,
    remedial_breakdown,
    search_backdoor_partition,
)
from cegkit.ceg import ceg_from_document
from cegkit.errors import (
    ControlledEventLeaksOutsideIntervention,
    NotAPartition,
    PartitionNotValid,
    PositionNotInCeg,
    UnknownSelector,
    UnknownTarget,
)
from cegkit.intervention import (
    DirichletFloretPrior,
    HiddenAction,
    RemedialRecord,
    StochasticManipulation,
)

import oracles


@pytest.fixture(scope="module")
def bushing():
    return ceg_from_document(fixtures.bushing_document())


@pytest.fixture(scope="module")
def conservator():
    return ceg_from_document(fixtures.conservator_document())


@pytest.fixture(scope="module")
def twin():
    return ceg_from_document(fixtures.twin_document())


BUSHING_HAT = StochasticManipulation(theta_hat={"w1": (0.1, 0.2, 0.3, 0.4)})
CONSERVATOR_HAT = StochasticManipulation(theta_hat={"w0": (0.25, 0.75)})
TWIN_HAT = StochasticManipulation(
    theta_hat={"w1": (0.2, 0.8), "w2": (0.45, 0.55)}
)

# reference values computed by independent path enumeration over the raw
# model documents, frozen here so regressions surface as value changes
BUSHING_IDLE_FAIL = 0.60425
BUSHING_EFFECT = 0.6065
CONSERVATOR_IDLE_FAIL = 0.5074
CONSERVATOR_EFFECT = 0.349
TWIN_IDLE_FAIL = 0.377875
TWIN_EFFECT = 0.349375
FORCED_GASKET_EFFECT = 0.575


class TestFrozenValues:
    def test_idle_masses(self, bushing, conservator, twin):
        assert idle_target_mass(bushing, "fail") == pytest.approx(
            BUSHING_IDLE_FAIL, abs=1e-12
        )
        assert idle_target_mass(conservator, "fail") == pytest.approx(
            CONSERVATOR_IDLE_FAIL, abs=1e-12
        )
        assert idle_target_mass(twin, "fail") == pytest.approx(
            TWIN_IDLE_FAIL, abs=1e-12
        )

    def test_manipulated_effects(self, bushing, conservator, twin):
        assert brute_force_effect(bushing, BUSHING_HAT, "fail") == pytest.approx(
            BUSHING_EFFECT, abs=1e-12
        )
        assert brute_force_effect(
            conservator, CONSERVATOR_HAT, "fail"
        ) == pytest.approx(CONSERVATOR_EFFECT, abs=1e-12)
        assert brute_force_effect(twin, TWIN_HAT, "fail") == pytest.approx(
            TWIN_EFFECT, abs=1e-12
        )

    def test_forced_edge(self, bushing):
        assert forced_edge_effect(bushing, "w1->w3#1", "fail") == pytest.approx(
            FORCED_GASKET_EFFECT, abs=1e-12
        )


class TestRouteAgreement:
    @pytest.mark.parametrize(
        "fixture_name,manipulation",
        [
            ("bushing", BUSHING_HAT),
            ("conservator", CONSERVATOR_HAT),
            ("twin", TWIN_HAT),
        ],
    )
    def test_three_routes_agree(self, request, fixture_name, manipulation):
        graph = request.getfixturevalue(fixture_name)
        bf = brute_force_effect(graph, manipulation, "fail")
        dv = causal_effect_devent(graph, manipulation, "fail")
        el = causal_effect_edge_level(graph, manipulation, "fail")
        assert dv == pytest.approx(bf, abs=1e-12)
        assert el == pytest.approx(bf, abs=1e-12)

    def test_matches_document_oracle(self, bushing, conservator, twin):
        cases = [
            (fixtures.bushing_document(), bushing, BUSHING_HAT, ("v1",)),
            (
                fixtures.conservator_document(),
                conservator,
                CONSERVATOR_HAT,
                ("v0",),
            ),
            (fixtures.twin_document(), twin, TWIN_HAT, ("v1", "v2")),
        ]
        for doc, graph, manipulation, star_vertices in cases:
            hat_by_vertex = {}
            for w, vec in manipulation.theta_hat.items():
                for v in graph.members[w]:
                    hat_by_vertex[v] = vec
            want = oracles.substitution_effect(
                doc, star_vertices, hat_by_vertex, "fail"
            )
            got = brute_force_effect(graph, manipulation, "fail")
            assert got == pytest.approx(want, abs=1e-12)

    def test_randomized_agreement(self, bushing, conservator, twin):
        rng = random.Random(11)

        def rand_vec(k):
            raw = [rng.uniform(0.05, 1.0) for _ in range(k)]
            total = math.fsum(raw)
            return tuple(x / total for x in raw)

        for _ in range(20):
            for graph, star in (
                (bushing, ("w1",)),
                (conservator, ("w0",)),
                (twin, ("w1", "w2")),
            ):
                hat = {
                    w: rand_vec(len(graph.out_edges(w))) for w in star
                }
                m = StochasticManipulation(theta_hat=hat)
                bf = brute_force_effect(graph, m, "fail")
                assert causal_effect_devent(graph, m, "fail") == pytest.approx(
                    bf, abs=1e-12
                )
                assert causal_effect_edge_level(
                    graph, m, "fail"
                ) == pytest.approx(bf, abs=1e-12)

    def test_unknown_target(self, bushing):
        with pytest.raises(UnknownTarget):
            brute_force_effect(bushing, BUSHING_HAT, "melt")
        with pytest.raises(UnknownTarget):
            idle_target_mass(bushing, "melt")

    def test_controlled_event_leak(self, twin):
        # seal_wear also labels an edge out of w2, so intervening on w1
        # alone does not control the d-event
        lone = StochasticManipulation(theta_hat={"w1": (0.2, 0.8)})
        with pytest.raises(ControlledEventLeaksOutsideIntervention):
            causal_effect_devent(twin, lone, "fail")


SYMPTOM_BLOCKS = [
    ["oil_leak", "oil_loss", "thermal"],
    ["no_leak", "oil_mix", "electrical"],
]


class TestBackdoorCheck:
    def test_bushing_symptom_partition_passes(self, bushing):
        part = partition_from_selectors(bushing, ("w1",), "devents", SYMPTOM_BLOCKS)
        report = check_backdoor_partition(bushing, ("w1",), part, "fail")
        assert report.passed
        assert not report.failures()
        assert {c.criterion for c in report.comparisons} == {1, 2}

    def test_conservator_stage_partition_passes(self, conservator):
        part = partition_from_selectors(
            conservator, ("w0",), "stages", [["u2"], ["u3"]]
        )
        report = check_backdoor_partition(conservator, ("w0",), part, "fail")
        assert report.passed

    def test_broken_model_fails_with_both_sides(self):
        broken = ceg_from_document(fixtures.bushing_broken_document())
        part = partition_from_selectors(broken, ("w1",), "devents", SYMPTOM_BLOCKS)
        report = check_backdoor_partition(broken, ("w1",), part, "fail")
        assert not report.passed
        bad = report.failures()[0]
        assert bad.lhs != bad.rhs
        assert abs(bad.lhs - bad.rhs) > broken.tolerance

    def test_not_covering(self, bushing):
        part = partition_from_selectors(
            bushing, ("w1",), "positions", [["w3"], ["w4"]]
        )
        with pytest.raises(NotAPartition):
            check_backdoor_partition(bushing, ("w1",), part, "fail")

    def test_overlap(self, bushing):
        part = partition_from_selectors(
            bushing, ("w1",), "positions", [["w3"], ["w3", "w4", "w5"]]
        )
        with pytest.raises(NotAPartition):
            check_backdoor_partition(bushing, ("w1",), part, "fail")

    def test_empty_block(self, bushing):
        # w2 paths are outside the intervened path set
        part = partition_from_selectors(
            bushing, ("w1",), "positions", [["w3"], ["w4", "w5"], ["w2"]]
        )
        with pytest.raises(NotAPartition):
            check_backdoor_partition(bushing, ("w1",), part, "fail")

    def test_no_blocks(self, bushing):
        with pytest.raises(NotAPartition):
            check_backdoor_partition(
                bushing, ("w1",), BackdoorPartition((), (), "custom"), "fail"
            )

    def test_raw_path_blocks_accepted(self, bushing):
        part = partition_from_selectors(bushing, ("w1",), "devents", SYMPTOM_BLOCKS)
        raw = [list(b) for b in part.blocks]
        report = check_backdoor_partition(bushing, ("w1",), raw, "fail")
        assert report.passed


class TestAdjustment:
    def test_bushing_value(self, bushing):
        part = partition_from_selectors(bushing, ("w1",), "devents", SYMPTOM_BLOCKS)
        value = backdoor_adjustment(bushing, BUSHING_HAT, part, "fail")
        assert value == pytest.approx(BUSHING_EFFECT, abs=1e-12)

    def test_conservator_value(self, conservator):
        part = partition_from_selectors(
            conservator, ("w0",), "stages", [["u2"], ["u3"]]
        )
        value = backdoor_adjustment(conservator, CONSERVATOR_HAT, part, "fail")
        assert value == pytest.approx(CONSERVATOR_EFFECT, abs=1e-12)

    def test_invalid_partition_raises(self):
        broken = ceg_from_document(fixtures.bushing_broken_document())
        part = partition_from_selectors(broken, ("w1",), "devents", SYMPTOM_BLOCKS)
        with pytest.raises(PartitionNotValid) as err:
            backdoor_adjustment(broken, BUSHING_HAT, part, "fail")
        assert "criterion" in str(err.value)

    def test_randomized_against_brute_force(self, bushing):
        part = partition_from_selectors(bushing, ("w1",), "devents", SYMPTOM_BLOCKS)
        rng = random.Random(23)
        for _ in range(10):
            raw = [rng.uniform(0.05, 1.0) for _ in range(4)]
            total = math.fsum(raw)
            m = StochasticManipulation(
                theta_hat={"w1": tuple(x / total for x in raw)}
            )
            assert backdoor_adjustment(bushing, m, part, "fail") == pytest.approx(
                brute_force_effect(bushing, m, "fail"), abs=1e-12
            )


class TestPartitionSelectors:
    def test_kinds_resolve(self, bushing):
        by_pos = partition_from_selectors(
            bushing, ("w1",), "positions", [["w3"], ["w4"], ["w5"]]
        )
        assert by_pos.kind == "positions"
        assert by_pos.labels == ("w3", "w4", "w5")
        by_edge = partition_from_selectors(
            bushing,
            ("w1",),
            "edges",
            [["w1->w3#1", "w1->w3#2"], ["w1->w4#1"], ["w1->w5#1"]],
        )
        assert by_edge.labels[0] == "w1->w3#1,w1->w3#2"

    def test_unknown_ids(self, bushing):
        with pytest.raises(UnknownSelector):
            partition_from_selectors(bushing, ("w1",), "devents", [["melt"]])
        with pytest.raises(PositionNotInCeg):
            partition_from_selectors(bushing, ("w1",), "positions", [["w99"]])
        with pytest.raises(UnknownSelector):
            partition_from_selectors(bushing, ("w1",), "stages", [["u99"]])
        with pytest.raises(UnknownSelector):
            partition_from_selectors(bushing, ("w1",), "florets", [["w3"]])


class TestSearch:
    def test_bushing_finds_symptom_colours(self, bushing):
        found = search_backdoor_partition(bushing, ("w1",), "fail")
        assert found is not None
        part, report = found
        assert report.passed
        assert part.kind == "colour"
        assert len(part.blocks) == 2

    def test_conservator_finds_stage_partition(self, conservator):
        found = search_backdoor_partition(conservator, ("w0",), "fail")
        assert found is not None
        part, report = found
        assert part.kind == "stages"
        labelled = {frozenset(l.split(":")[1].split("+")) for l in part.labels}
        assert labelled == {
            frozenset({"w3", "w5"}),
            frozenset({"w4", "w6"}),
        }

    def test_twin_finds_symptom_colours(self, twin):
        found = search_backdoor_partition(twin, ("w1", "w2"), "fail")
        assert found is not None
        part, report = found
        assert part.kind == "colour"

    def test_search_agrees_with_brute_force(self, bushing):
        part, _ = search_backdoor_partition(bushing, ("w1",), "fail")
        value = backdoor_adjustment(bushing, BUSHING_HAT, part, "fail")
        assert value == pytest.approx(BUSHING_EFFECT, abs=1e-12)


class TestRemedial:
    PRIOR = DirichletFloretPrior(
        alpha={"w1": (3.0, 2.0, 2.5, 2.5), "w2": (3.0, 2.0)},
        eta={"w1": (1.0, 1.0, 1.0, 1.0), "w2": (1.0, 1.0)},
    )

    def _gasket(self, bushing):
        return bushing.find_edge("w1", "w3", 1)

    def test_breakdown_rows(self, bushing):
        fix = frozenset({self._gasket(bushing)})
        record = RemedialRecord(
            remedy="swap",
            delta=0,
            actions=(
                HiddenAction(
                    id="swap_seal",
                    prob=0.6,
                    outcomes=((fix, 0.5), (frozenset(), 0.5)),
                ),
                HiddenAction(
                    id="no_action", prob=0.4, outcomes=((frozenset(), 1.0),)
                ),
            ),
        )
        rows = remedial_breakdown(bushing, record, self.PRIOR, "fail")
        assert [(w, r, a) for w, r, a, _ in rows] == [
            (0.3, fix, "swap_seal"),
            (0.3, frozenset(), "swap_seal"),
            (0.4, frozenset(), "no_action"),
        ]
        idle = idle_target_mass(bushing, "fail")
        assert rows[1][3] == pytest.approx(idle, abs=1e-12)
        assert rows[2][3] == pytest.approx(idle, abs=1e-12)

        # remedied effect equals the edge-level route under the posterior mean
        total = 3.0 + 3.0 + 3.5 + 3.5
        mean = StochasticManipulation(
            theta_hat={
                "w1": (3.0 / total, 3.0 / total, 3.5 / total, 3.5 / total)
            }
        )
        assert rows[0][3] == pytest.approx(
            brute_force_effect(bushing, mean, "fail"), abs=1e-12
        )

    def test_expected_effect_is_convex_mixture(self, bushing):
        fix = frozenset({self._gasket(bushing)})
        record = RemedialRecord(
            remedy="swap",
            delta=0,
            actions=(
                HiddenAction(
                    id="swap_seal",
                    prob=0.6,
                    outcomes=((fix, 0.5), (frozenset(), 0.5)),
                ),
                HiddenAction(
                    id="no_action", prob=0.4, outcomes=((frozenset(), 1.0),)
                ),
            ),
        )
        rows = remedial_breakdown(bushing, record, self.PRIOR, "fail")
        want = math.fsum(w * eff for w, _, _, eff in rows)
        got = expected_effect_imperfect(bushing, record, self.PRIOR, "fail")
        assert got == pytest.approx(want, abs=1e-15)
        lo = min(eff for _, _, _, eff in rows)
        hi = max(eff for _, _, _, eff in rows)
        assert lo <= got <= hi

    def test_perfect_record_collapses(self, bushing):
        fix = frozenset({self._gasket(bushing)})
        record = RemedialRecord(remedy="swap", delta=1, indicators=fix)
        rows = remedial_breakdown(bushing, record, self.PRIOR, "fail")
        assert len(rows) == 1
        assert rows[0][0] == 1.0
        assert expected_effect_imperfect(
            bushing, record, self.PRIOR, "fail"
        ) == pytest.approx(rows[0][3], abs=1e-15)
